#include "adapt/personalization/relevance.hpp"

#include "adapt/common/util.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>

namespace adapt::personalization {

std::vector<std::string> match_terms(std::string_view text) {
    std::vector<std::string> out;
    for (auto t : content_tokens(text)) {
        if (t.size() > 4 && t.ends_with("ies")) {
            t.replace(t.size() - 3, 3, "y");
        } else if (t.size() > 3 && t.back() == 's' && !t.ends_with("ss")) {
            t.pop_back();
        }
        out.push_back(std::move(t));
    }
    return out;
}

namespace {

std::set<std::string> term_set(std::string_view text) {
    auto terms = match_terms(text);
    return {terms.begin(), terms.end()};
}

}  // namespace

IdfTable::IdfTable(const std::vector<memory::InsightRecord>& documents) : documents_(documents.size()) {
    for (const auto& d : documents) {
        for (const auto& t : term_set(d.content)) ++df_[t];
    }
}

double IdfTable::idf(const std::string& term) const {
    auto it = df_.find(term);
    std::size_t df = it == df_.end() ? 0 : it->second;
    return 1.0 + std::log(static_cast<double>(documents_ + 1) / static_cast<double>(df + 1));
}

double IdfTable::relevance(std::string_view query, const memory::InsightRecord& insight) const {
    auto query_terms = term_set(query);
    auto doc_terms = term_set(insight.content);
    double total = 0.0;
    double shared = 0.0;
    for (const auto& t : query_terms) {
        double w = idf(t);
        total += w;
        if (doc_terms.count(t)) shared += w;
    }
    double relevance = total > 0.0 ? shared / total : 0.0;
    if (insight.source == memory::InsightSource::explicit_signal) relevance += kExplicitBoost;
    return std::clamp(relevance, 0.0, 1.0);
}

// Same result as IdfTable::relevance for every candidate, but each document is
// tokenized once and only the query terms' document frequencies are counted.
std::vector<double> LexicalScorer::score(std::string_view query,
                                         const std::vector<memory::InsightRecord>& candidates) const {
    const auto query_set = term_set(query);
    const std::vector<std::string> query_terms(query_set.begin(), query_set.end());
    std::unordered_map<std::string_view, std::size_t> position;
    for (std::size_t i = 0; i < query_terms.size(); ++i) position.emplace(query_terms[i], i);

    std::vector<std::vector<bool>> present(candidates.size(), std::vector<bool>(query_terms.size(), false));
    std::vector<std::size_t> df(query_terms.size(), 0);
    for (std::size_t c = 0; c < candidates.size(); ++c) {
        if (query_terms.empty()) break;
        for (const auto& t : match_terms(candidates[c].content)) {
            auto it = position.find(t);
            if (it == position.end() || present[c][it->second]) continue;
            present[c][it->second] = true;
            ++df[it->second];
        }
    }
    std::vector<double> weight(query_terms.size());
    for (std::size_t i = 0; i < query_terms.size(); ++i) {
        weight[i] = 1.0 + std::log(static_cast<double>(candidates.size() + 1) / static_cast<double>(df[i] + 1));
    }

    std::vector<double> scores;
    scores.reserve(candidates.size());
    for (std::size_t c = 0; c < candidates.size(); ++c) {
        double total = 0.0;
        double shared = 0.0;
        for (std::size_t i = 0; i < query_terms.size(); ++i) {
            total += weight[i];
            if (present[c][i]) shared += weight[i];
        }
        double relevance = total > 0.0 ? shared / total : 0.0;
        if (candidates[c].source == memory::InsightSource::explicit_signal) relevance += kExplicitBoost;
        scores.push_back(std::clamp(relevance, 0.0, 1.0));
    }
    return scores;
}

double score_relevance(std::string_view query, const memory::InsightRecord& insight) {
    return IdfTable({insight}).relevance(query, insight);
}

}  // namespace adapt::personalization
