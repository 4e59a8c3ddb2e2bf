#include "adapt/learning/reconcile.hpp"

#include "adapt/common/util.hpp"

#include <algorithm>
#include <set>
#include <unordered_set>

namespace adapt::learning {

namespace {

bool is_negation_token(const std::string& t) {
    static const std::unordered_set<std::string> markers = {"not", "no", "never", "none", "nor",
                                                            "cannot", "anymore", "without"};
    if (markers.count(t)) return true;
    return t.size() > 3 && t.compare(t.size() - 3, 3, "n't") == 0;
}

bool is_structural_token(const std::string& t) {
    return t == "over" || t == "instead" || t == "longer" || t == "rather";
}

std::string light_stem(std::string t) {
    if (t.size() > 4 && t.ends_with("ies")) {
        t.replace(t.size() - 3, 3, "y");
    } else if (t.size() > 3 && t.back() == 's' && !t.ends_with("ss")) {
        t.pop_back();
    }
    return t;
}

std::vector<std::string> topic_words(const std::vector<std::string>& tokens) {
    std::vector<std::string> out;
    for (const auto& t : tokens) {
        if (is_stopword(t) || is_negation_token(t) || is_structural_token(t)) continue;
        out.push_back(light_stem(t));
    }
    return out;
}

std::set<std::string> topic_set(std::string_view text) {
    auto words = topic_words(tokenize(text));
    return {words.begin(), words.end()};
}

// Splits around "over" / "instead of" / "rather than". Returns false when no pivot.
bool split_on_pivot(std::string_view text, std::set<std::string>& preferred,
                    std::set<std::string>& rejected) {
    auto tokens = tokenize(text);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        std::size_t skip = 0;
        if (tokens[i] == "over") {
            skip = 1;
        } else if (tokens[i] == "instead" && i + 1 < tokens.size() && tokens[i + 1] == "of") {
            skip = 2;
        } else if (tokens[i] == "rather" && i + 1 < tokens.size() && tokens[i + 1] == "than") {
            skip = 2;
        }
        if (skip == 0) continue;
        auto left = topic_words({tokens.begin(), tokens.begin() + static_cast<long>(i)});
        auto right = topic_words({tokens.begin() + static_cast<long>(i + skip), tokens.end()});
        preferred = {left.begin(), left.end()};
        rejected = {right.begin(), right.end()};
        return true;
    }
    return false;
}

bool intersects(const std::set<std::string>& a, const std::set<std::string>& b) {
    return std::any_of(a.begin(), a.end(), [&](const std::string& x) { return b.count(x) > 0; });
}

bool reversed(std::string_view a, std::string_view b) {
    std::set<std::string> pref_a, rej_a, pref_b, rej_b;
    if (!split_on_pivot(a, pref_a, rej_a) || !split_on_pivot(b, pref_b, rej_b)) return false;
    return intersects(pref_a, rej_b) && intersects(rej_a, pref_b);
}

}  // namespace

double topic_similarity(std::string_view a, std::string_view b) {
    auto sa = topic_set(a);
    auto sb = topic_set(b);
    if (sa.empty() && sb.empty()) return to_lower(trim(a)) == to_lower(trim(b)) ? 1.0 : 0.0;
    std::size_t common = 0;
    for (const auto& w : sa) common += sb.count(w);
    std::size_t total = sa.size() + sb.size() - common;
    return total == 0 ? 0.0 : static_cast<double>(common) / static_cast<double>(total);
}

bool is_negated(std::string_view text) {
    auto tokens = tokenize(text);
    return std::any_of(tokens.begin(), tokens.end(), is_negation_token);
}

bool contradicts(std::string_view a, std::string_view b) {
    return is_negated(a) != is_negated(b) || reversed(a, b);
}

ReconcileAction reconcile(const InsightDraft& draft, const DraftContext& context,
                          const std::vector<memory::InsightRecord>& existing,
                          const ReconcileConfig& config) {
    const memory::InsightRecord* best = nullptr;
    double best_sim = -1.0;
    for (const auto& record : existing) {
        if (record.kind != draft.kind || record.status != memory::InsightStatus::active) continue;
        double sim = topic_similarity(draft.content, record.content);
        if (sim < config.similarity_threshold) continue;
        bool better = sim > best_sim ||
                      (sim == best_sim && (record.created_at > best->created_at ||
                                           (record.created_at == best->created_at &&
                                            record.insight_id < best->insight_id)));
        if (better) {
            best = &record;
            best_sim = sim;
        }
    }
    if (best == nullptr) return {ReconcileAction::Type::add, {}, draft.confidence};

    if (!contradicts(draft.content, best->content)) {
        return {ReconcileAction::Type::merge, best->insight_id,
                std::max(best->confidence, draft.confidence)};
    }
    bool explicit_draft = context.source == memory::InsightSource::explicit_signal;
    bool much_newer = context.observed_at - best->created_at >= config.recency_window_ms;
    if (explicit_draft || much_newer) {
        return {ReconcileAction::Type::supersede, best->insight_id, draft.confidence};
    }
    return {ReconcileAction::Type::add, {}, draft.confidence};
}

bool is_explicit_statement(std::string_view user_message) {
    static const std::unordered_set<std::string> first_person = {
        "i", "i'm", "i've", "i'd", "i'll", "im", "my", "mine", "myself", "me"};
    auto tokens = tokenize(user_message);
    return std::any_of(tokens.begin(), tokens.end(),
                       [](const std::string& t) { return first_person.count(t) > 0; });
}

}  // namespace adapt::learning
