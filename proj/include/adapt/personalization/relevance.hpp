#pragma once

#include "adapt/memory/types.hpp"

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace adapt::personalization {

inline constexpr double kExplicitBoost = 0.2;

// Pluggable relevance function. Returns one score in [0,1] per candidate, in
// candidate order. Implementations must be deterministic and thread-safe.
class RelevanceScorer {
public:
    virtual ~RelevanceScorer() = default;
    virtual std::vector<double> score(std::string_view query,
                                      const std::vector<memory::InsightRecord>& candidates) const = 0;
};

// Normalized content words used for matching (lowercase, stopwords removed,
// plural "s"/"ies" folded).
std::vector<std::string> match_terms(std::string_view text);

// Document frequencies over one candidate set.
class IdfTable {
public:
    explicit IdfTable(const std::vector<memory::InsightRecord>& documents);

    // 1 + ln((N + 1) / (df + 1))
    double idf(const std::string& term) const;
    // Sum of idf over query terms present in the insight divided by the sum
    // over all query terms, plus 0.2 for explicit insights, clamped to [0,1].
    double relevance(std::string_view query, const memory::InsightRecord& insight) const;

private:
    std::size_t documents_ = 0;
    std::map<std::string, std::size_t> df_;
};

class LexicalScorer final : public RelevanceScorer {
public:
    std::vector<double> score(std::string_view query,
                              const std::vector<memory::InsightRecord>& candidates) const override;
};

// Lexical score with the insight itself as the only document.
double score_relevance(std::string_view query, const memory::InsightRecord& insight);

}  // namespace adapt::personalization
