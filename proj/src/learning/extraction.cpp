#include "adapt/learning/extraction.hpp"

#include "adapt/common/errors.hpp"
#include "adapt/common/util.hpp"

#include <nlohmann/json.hpp>

namespace adapt::assets {
extern const std::string_view learning_v1;
}

namespace adapt::learning {

using nlohmann::json;

std::string_view learning_prompt_template() { return assets::learning_v1; }

std::string render_feedback(const memory::TurnRecord& turn) {
    std::string out;
    switch (turn.feedback) {
        case memory::Feedback::none: out = "none"; break;
        case memory::Feedback::positive: out = "positive (thumbs up)"; break;
        case memory::Feedback::negative: out = "negative (thumbs down)"; break;
    }
    if (turn.feedback_text && !turn.feedback_text->empty()) out += ": " + *turn.feedback_text;
    return out;
}

std::string render_learning_prompt(const memory::TurnRecord& turn) {
    return render_template(learning_prompt_template(),
                           {{"user_message", turn.user_message},
                            {"assistant_response", turn.assistant_message},
                            {"feedback", render_feedback(turn)}});
}

std::optional<std::string> find_json_span(std::string_view reply, char open, char close) {
    auto begin = reply.find(open);
    auto end = reply.rfind(close);
    if (begin == std::string_view::npos || end == std::string_view::npos || end < begin) {
        return std::nullopt;
    }
    return std::string(reply.substr(begin, end - begin + 1));
}

std::optional<std::vector<InsightDraft>> parse_insight_reply(std::string_view reply) {
    auto span = find_json_span(reply, '[', ']');
    if (!span) return std::nullopt;
    json parsed = json::parse(*span, nullptr, false);
    if (parsed.is_discarded() || !parsed.is_array()) return std::nullopt;

    std::vector<InsightDraft> drafts;
    for (const auto& item : parsed) {
        if (!item.is_object()) continue;
        auto type = item.find("type");
        auto content = item.find("content");
        auto confidence = item.find("confidence");
        if (type == item.end() || !type->is_string()) continue;
        if (content == item.end() || !content->is_string()) continue;
        if (confidence == item.end() || !confidence->is_number()) continue;

        InsightDraft d;
        try {
            d.kind = memory::parse_insight_kind(to_lower(type->get<std::string>()));
        } catch (const ValidationError&) {
            continue;
        }
        d.content = trim(content->get<std::string>());
        d.confidence = confidence->get<double>();
        if (d.content.empty() || !(d.confidence >= 0.0 && d.confidence <= 1.0)) continue;
        drafts.push_back(std::move(d));
    }
    return drafts;
}

std::vector<InsightDraft> extract_turn_insights(const memory::TurnRecord& turn,
                                                const llm::Gateway& gateway) {
    if (trim(turn.user_message).empty()) {
        throw PreconditionError("cannot extract insights from an empty user message");
    }
    llm::ChatRequest request;
    request.role = llm::Role::learner;
    request.messages = {{llm::Speaker::user, render_learning_prompt(turn)}};

    std::string reply = gateway.complete(request);
    if (auto drafts = parse_insight_reply(reply)) return *drafts;

    request.messages.push_back({llm::Speaker::assistant, reply});
    request.messages.push_back({llm::Speaker::user, std::string(kRepairAddendum)});
    reply = gateway.complete(request);
    if (auto drafts = parse_insight_reply(reply)) return *drafts;

    throw ExtractionParseError("learner reply is not a JSON array of insights", reply);
}

}  // namespace adapt::learning
