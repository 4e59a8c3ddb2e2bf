#pragma once

#include "adapt/llm/gateway.hpp"
#include "adapt/memory/types.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace adapt::learning {

struct InsightDraft {
    memory::InsightKind kind = memory::InsightKind::fact;
    std::string content;
    double confidence = 0.0;

    bool operator==(const InsightDraft&) const = default;
};

// prompts/learning_v1.txt, embedded at build time.
std::string_view learning_prompt_template();

// Addendum appended to a repair request after an unparseable reply.
inline constexpr std::string_view kRepairAddendum =
    "Reply with valid structured output only: a JSON array as specified above, with no other text.";

std::string render_feedback(const memory::TurnRecord& turn);
std::string render_learning_prompt(const memory::TurnRecord& turn);

// Parses a JSON array of {type, content, confidence} objects, tolerating code
// fences and surrounding prose. Items that fail draft invariants are dropped.
// Returns nullopt when no array can be recovered.
std::optional<std::vector<InsightDraft>> parse_insight_reply(std::string_view reply);

// One learner call plus at most one repair call. Throws ExtractionParseError
// (carrying the last raw reply) when both replies are unusable.
std::vector<InsightDraft> extract_turn_insights(const memory::TurnRecord& turn,
                                                const llm::Gateway& gateway);

// Extracts the JSON text between the first opening bracket/brace and the
// matching last closing one. Shared by every structured-reply parser.
std::optional<std::string> find_json_span(std::string_view reply, char open, char close);

}  // namespace adapt::learning
