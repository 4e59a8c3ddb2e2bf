#include "adapt/eval/judge.hpp"

#include "adapt/common/errors.hpp"
#include "adapt/common/util.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

namespace adapt::assets {
extern const std::string_view judge_v1;
}

namespace adapt::eval {

using nlohmann::json;

std::string to_string(Condition condition) {
    return condition == Condition::baseline ? "baseline" : "personalized";
}

Condition parse_condition(const std::string& name) {
    if (name == "baseline") return Condition::baseline;
    if (name == "personalized") return Condition::personalized;
    throw ValidationError("unknown condition: " + name);
}

std::string to_string(TraitLabel label) {
    switch (label) {
        case TraitLabel::incorporated: return "incorporated";
        case TraitLabel::violated: return "violated";
        case TraitLabel::neutral: return "neutral";
    }
    return "neutral";
}

TraitLabel parse_trait_label(const std::string& name) {
    if (name == "incorporated") return TraitLabel::incorporated;
    if (name == "violated") return TraitLabel::violated;
    if (name == "neutral") return TraitLabel::neutral;
    throw ValidationError("unknown trait label: " + name);
}

namespace {

void check_score(int score) {
    if (score < 1 || score > 5) {
        throw ValidationError("judge score must be in 1..5, got " + std::to_string(score));
    }
}

}  // namespace

std::string assessment_to_json(const JudgeAssessment& a) {
    json labels = json::object();
    for (const auto& [id, label] : a.trait_labels) labels[id] = to_string(label);
    return json{{"persona_id", a.persona_id}, {"turn_index", a.turn_index},
                {"condition", to_string(a.condition)}, {"score", a.score},
                {"trait_labels", labels}, {"rationale", a.rationale}}
        .dump();
}

JudgeAssessment assessment_from_json(std::string_view json_text) {
    JudgeAssessment a;
    try {
        auto j = json::parse(json_text);
        a.persona_id = j.at("persona_id").get<std::string>();
        a.turn_index = j.at("turn_index").get<int>();
        a.condition = parse_condition(j.at("condition").get<std::string>());
        a.score = j.at("score").get<int>();
        for (const auto& [id, label] : j.at("trait_labels").items()) {
            a.trait_labels[id] = parse_trait_label(label.get<std::string>());
        }
        a.rationale = j.value("rationale", "");
    } catch (const json::exception& e) {
        throw ValidationError(std::string("malformed assessment: ") + e.what());
    }
    check_score(a.score);
    return a;
}

std::string_view judge_prompt_template() { return assets::judge_v1; }

std::string render_judge_prompt(const std::vector<bench::Trait>& traits, std::string_view query,
                                std::string_view response) {
    std::string listed;
    for (const auto& t : traits) {
        if (!listed.empty()) listed += '\n';
        listed += "- " + t.trait_id + ": " + t.text;
    }
    return render_template(judge_prompt_template(), {{"traits", listed},
                                                     {"query", std::string(query)},
                                                     {"response", std::string(response)}});
}

std::optional<JudgeVerdict> parse_judge_reply(std::string_view reply,
                                              const std::vector<std::string>& trait_ids) {
    auto begin = reply.find('{');
    auto end = reply.rfind('}');
    if (begin == std::string_view::npos || end == std::string_view::npos || end < begin) return std::nullopt;
    auto j = json::parse(reply.substr(begin, end - begin + 1), nullptr, false);
    if (j.is_discarded() || !j.is_object()) return std::nullopt;

    JudgeVerdict v;
    auto score = j.find("score");
    if (score == j.end() || !score->is_number()) return std::nullopt;
    double raw = score->get<double>();
    if (raw != std::floor(raw) || std::fabs(raw) > 1e6) return std::nullopt;
    v.score = static_cast<int>(raw);

    auto labels = j.find("trait_labels");
    if (labels == j.end() || !labels->is_object()) return std::nullopt;
    for (const auto& id : trait_ids) {
        auto it = labels->find(id);
        if (it == labels->end() || !it->is_string()) return std::nullopt;
        try {
            v.trait_labels[id] = parse_trait_label(to_lower(trim(it->get<std::string>())));
        } catch (const ValidationError&) {
            return std::nullopt;
        }
    }
    if (auto r = j.find("rationale"); r != j.end() && r->is_string()) v.rationale = r->get<std::string>();
    return v;
}

JudgeAssessment judge_turn(const std::string& persona_id, int turn_index, Condition condition,
                           const std::vector<bench::Trait>& traits, std::string_view query,
                           std::string_view response, const llm::Gateway& gateway) {
    std::vector<std::string> ids;
    for (const auto& t : traits) ids.push_back(t.trait_id);

    llm::ChatRequest request;
    request.role = llm::Role::judge;
    request.messages = {{llm::Speaker::user, render_judge_prompt(traits, query, response)}};

    std::string reply = gateway.complete(request);
    auto verdict = parse_judge_reply(reply, ids);
    if (!verdict) {
        request.messages.push_back({llm::Speaker::assistant, reply});
        request.messages.push_back({llm::Speaker::user, std::string(kJudgeRepairAddendum)});
        reply = gateway.complete(request);
        verdict = parse_judge_reply(reply, ids);
    }
    if (!verdict) throw JudgeParseError("judge reply is not a usable assessment", reply);
    check_score(verdict->score);

    JudgeAssessment a;
    a.persona_id = persona_id;
    a.turn_index = turn_index;
    a.condition = condition;
    a.score = verdict->score;
    a.trait_labels = std::move(verdict->trait_labels);
    a.rationale = std::move(verdict->rationale);
    return a;
}

double incorporation_rate(const std::vector<JudgeAssessment>& assessments) {
    if (assessments.empty()) throw PreconditionError("incorporation rate of no assessments");
    std::size_t incorporated = 0;
    std::size_t relevant = 0;
    for (const auto& a : assessments) {
        for (const auto& [id, label] : a.trait_labels) {
            if (label == TraitLabel::neutral) continue;
            ++relevant;
            if (label == TraitLabel::incorporated) ++incorporated;
        }
    }
    if (relevant == 0) throw UndefinedRateError("no trait was relevant to any assessed turn");
    return static_cast<double>(incorporated) / static_cast<double>(relevant);
}

}  // namespace adapt::eval
