#pragma once

#include "adapt/llm/gateway.hpp"
#include "adapt/memory/store.hpp"
#include "adapt/personalization/budget.hpp"
#include "adapt/personalization/relevance.hpp"

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace adapt::personalization {

struct ScoredInsight {
    memory::InsightRecord insight;
    double relevance = 0.0;
    double score = 0.0;

    bool operator==(const ScoredInsight&) const = default;
};

struct SlotUsage {
    std::size_t used = 0;
    std::size_t allowed = 0;

    bool operator==(const SlotUsage&) const = default;
};

struct SessionSummary {
    std::string text;
    int covers_through_turn = 0;
    std::size_t token_length = 0;
    bool degraded = false;

    bool operator==(const SessionSummary&) const = default;
};

// Ordered "### User Profile" fields: role, expertise_level, language,
// response_style, profile_extras, verbosity.
using ProfileFields = std::vector<std::pair<std::string, std::string>>;

struct ContextBundle {
    std::string user_id;
    ProfileFields profile_fields;
    std::string profile_block;
    std::vector<ScoredInsight> facts;
    std::vector<ScoredInsight> preferences;
    std::vector<ScoredInsight> behaviors;
    std::string session_summary;
    std::vector<memory::TurnRecord> recent_turns;
    // Managed slots only: preferences (profile + insights), history (recent
    // turns + summary) and tools.
    std::map<std::string, SlotUsage> budget_report;

    std::vector<std::string> selected_ids() const;
};

// State of the current session, supplied by the caller.
struct SessionView {
    std::vector<memory::TurnRecord> turns;
    SessionSummary summary;
};

// True for preference text about how answers are presented (format, depth,
// examples, sources, terminology) rather than about the user's life.
bool is_presentation_preference(std::string_view content);

// Cost of one insight line in the preferences slot.
std::size_t insight_cost(const memory::InsightRecord& insight, const llm::TokenCounter& counter);
// Cost of one verbatim turn in the history slot.
std::size_t turn_cost(const memory::TurnRecord& turn, const llm::TokenCounter& counter);

// Longest code-point prefix of `text` whose token count is within `budget`.
std::string fit_to_budget(std::string_view text, std::size_t budget, const llm::TokenCounter& counter);

class PersonalizationEngine {
public:
    explicit PersonalizationEngine(memory::MemoryStore& store,
                                   std::shared_ptr<RelevanceScorer> scorer = nullptr);

    // Ranking is relevance x confidence (ties: created_at desc, insight_id asc);
    // insights are taken in rank order until the first one that does not fit
    // the preferences slot. Facts and behaviors are always candidates;
    // preferences need a positive (boosted) relevance or must be about
    // presentation style.
    ContextBundle select_context(const std::string& user_id, const std::string& query_text,
                                 const BudgetAllocation& allocation,
                                 const llm::TokenCounter& counter,
                                 const SessionView* session = nullptr) const;

private:
    memory::MemoryStore& store_;
    std::shared_ptr<RelevanceScorer> scorer_;
};

std::string_view personalization_prompt_template();

// Sentences appended after the user context. Always starts with the base
// instruction; directives are derived from selected preferences and the
// profile's expertise and style fields.
std::string adaptation_instruction(const ContextBundle& bundle);

// Pure function of the bundle.
std::string compose_system_prompt(const ContextBundle& bundle);

std::string_view summarizer_prompt_template();

// m_{t+1} = summarize(m_t, new turns). Turns already covered are ignored.
// Over-budget output is re-summarized once, then hard-truncated. Gateway
// failures return the input summary with degraded=true.
SessionSummary compress_history(const SessionSummary& summary,
                                const std::vector<memory::TurnRecord>& new_turns,
                                std::size_t budget_tokens, const llm::Gateway& gateway);

}  // namespace adapt::personalization
