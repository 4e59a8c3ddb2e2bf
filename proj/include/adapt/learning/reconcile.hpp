#pragma once

#include "adapt/learning/extraction.hpp"
#include "adapt/memory/types.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace adapt::learning {

struct ReconcileConfig {
    // Minimum topic similarity (same kind) for two insights to share a topic.
    double similarity_threshold = 0.6;
    // A contradicting draft this much newer than the old insight supersedes it
    // even when implicit.
    Millis recency_window_ms = 30LL * 24 * 60 * 60 * 1000;
};

// Case-folded token Jaccard over topic words: stopwords and negation markers
// are removed first so that "no longer vegetarian" and "is vegetarian" share a
// topic.
double topic_similarity(std::string_view a, std::string_view b);

// True when the text carries a negation marker ("not", "no longer", "never",
// "n't", ...).
bool is_negated(std::string_view text);

// Polarity flip or an "X over Y" / "X instead of Y" reversal between two texts.
bool contradicts(std::string_view a, std::string_view b);

struct ReconcileAction {
    enum class Type { add, merge, supersede };

    Type type = Type::add;
    std::string target_id;
    double new_confidence = 0.0;

    bool operator==(const ReconcileAction&) const = default;
};

struct DraftContext {
    memory::InsightSource source = memory::InsightSource::implicit_signal;
    Millis observed_at = 0;
};

// Deterministic. `existing` must be the active insights of one user. The
// same-topic candidate is the one with the highest similarity; ties go to the
// newest, then the smallest id.
ReconcileAction reconcile(const InsightDraft& draft, const DraftContext& context,
                          const std::vector<memory::InsightRecord>& existing,
                          const ReconcileConfig& config = {});

// Heuristic: the user states something about themselves in the first person
// ("I prefer", "I'm", "my ..."), as opposed to a trait inferred from behavior.
bool is_explicit_statement(std::string_view user_message);

}  // namespace adapt::learning
