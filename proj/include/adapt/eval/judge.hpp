#pragma once

#include "adapt/bench/dataset.hpp"
#include "adapt/llm/gateway.hpp"

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace adapt::eval {

// The two arms of the ablation. `personalized` runs the full memory,
// learning and personalization pipeline; `baseline` answers statelessly.
enum class Condition { baseline, personalized };
std::string to_string(Condition condition);
Condition parse_condition(const std::string& name);

enum class TraitLabel { incorporated, violated, neutral };
std::string to_string(TraitLabel label);
TraitLabel parse_trait_label(const std::string& name);

struct JudgeAssessment {
    std::string persona_id;
    int turn_index = 0;
    Condition condition = Condition::baseline;
    int score = 0;
    std::map<std::string, TraitLabel> trait_labels;
    std::string rationale;

    bool operator==(const JudgeAssessment&) const = default;
};

std::string assessment_to_json(const JudgeAssessment& assessment);
// Throws ValidationError on schema or invariant violations.
JudgeAssessment assessment_from_json(std::string_view json_text);

inline constexpr std::string_view kJudgeRepairAddendum =
    "Reply with valid structured output only: a single JSON object with score, trait_labels and "
    "rationale, with no other text.";

std::string_view judge_prompt_template();
std::string render_judge_prompt(const std::vector<bench::Trait>& traits, std::string_view query,
                                std::string_view response);

struct JudgeVerdict {
    int score = 0;
    std::map<std::string, TraitLabel> trait_labels;
    std::string rationale;
};

// nullopt when the reply has no object with an integer score and a label for
// every listed trait. Labels for traits not in `trait_ids` are dropped.
std::optional<JudgeVerdict> parse_judge_reply(std::string_view reply,
                                              const std::vector<std::string>& trait_ids);

// One judge call plus one repair retry. Throws JudgeParseError when both
// replies are unusable and ValidationError when the score is outside 1..5.
JudgeAssessment judge_turn(const std::string& persona_id, int turn_index, Condition condition,
                           const std::vector<bench::Trait>& traits, std::string_view query,
                           std::string_view response, const llm::Gateway& gateway);

// count(incorporated) / count(incorporated + violated), pooled over all
// assessments. Throws PreconditionError on an empty input and
// UndefinedRateError when no label is relevant.
double incorporation_rate(const std::vector<JudgeAssessment>& assessments);

}  // namespace adapt::eval
