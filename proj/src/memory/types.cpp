#include "adapt/memory/types.hpp"

#include "adapt/common/errors.hpp"

#include <nlohmann/json.hpp>

namespace adapt::memory {

using nlohmann::json;

void validate(const UserProfile& profile) {
    if (profile.user_id.empty()) throw ValidationError("profile user_id must be non-empty");
    if (profile.updated_at < profile.created_at) {
        throw ValidationError("profile updated_at precedes created_at");
    }
    for (const auto& p : profile.behavior_patterns) {
        if (p.evidence_count < 0) throw ValidationError("behavior evidence_count must be >= 0");
    }
}

void validate(const InsightRecord& insight) {
    if (insight.user_id.empty()) throw ValidationError("insight user_id must be non-empty");
    if (!(insight.confidence >= 0.0 && insight.confidence <= 1.0)) {
        throw ValidationError("insight confidence must lie in [0,1], got " +
                              std::to_string(insight.confidence));
    }
    if (trim(insight.content).empty()) throw ValidationError("insight content must be non-empty");
    bool superseded = insight.status == InsightStatus::superseded;
    if (superseded != insight.superseded_by.has_value()) {
        throw ValidationError("superseded_by must be set exactly when status is superseded");
    }
    if (insight.provenance.turn_index < 1 || insight.provenance.session_id.empty()) {
        throw ValidationError("insight provenance must name a session turn");
    }
}

namespace {

template <typename E, std::size_t N>
std::string name_of(E v, const std::pair<E, const char*> (&table)[N]) {
    for (const auto& [e, s] : table) {
        if (e == v) return s;
    }
    return "unknown";
}

template <typename E, std::size_t N>
E parse_name(const std::string& s, const std::pair<E, const char*> (&table)[N], const char* what) {
    for (const auto& [e, name] : table) {
        if (s == name) return e;
    }
    throw ValidationError(std::string("unknown ") + what + " '" + s + "'");
}

constexpr std::pair<InsightKind, const char*> kKinds[] = {
    {InsightKind::preference, "preference"},
    {InsightKind::fact, "fact"},
    {InsightKind::behavior, "behavior"}};
constexpr std::pair<InsightSource, const char*> kSources[] = {
    {InsightSource::explicit_signal, "explicit"},
    {InsightSource::implicit_signal, "implicit"}};
constexpr std::pair<LearningTrigger, const char*> kTriggers[] = {
    {LearningTrigger::end_of_session, "end_of_session"},
    {LearningTrigger::event, "event"},
    {LearningTrigger::batch, "batch"}};
constexpr std::pair<InsightStatus, const char*> kStatuses[] = {
    {InsightStatus::active, "active"},
    {InsightStatus::superseded, "superseded"},
    {InsightStatus::deleted, "deleted"}};
constexpr std::pair<Feedback, const char*> kFeedback[] = {
    {Feedback::none, "none"}, {Feedback::positive, "positive"}, {Feedback::negative, "negative"}};

template <typename T>
std::optional<T> opt(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    return it->get<T>();
}

}  // namespace

std::string to_string(InsightKind v) { return name_of(v, kKinds); }
std::string to_string(InsightSource v) { return name_of(v, kSources); }
std::string to_string(LearningTrigger v) { return name_of(v, kTriggers); }
std::string to_string(InsightStatus v) { return name_of(v, kStatuses); }
std::string to_string(Feedback v) { return name_of(v, kFeedback); }

InsightKind parse_insight_kind(const std::string& s) { return parse_name(s, kKinds, "insight kind"); }
InsightSource parse_insight_source(const std::string& s) { return parse_name(s, kSources, "source"); }
LearningTrigger parse_learning_trigger(const std::string& s) {
    return parse_name(s, kTriggers, "trigger");
}
InsightStatus parse_insight_status(const std::string& s) { return parse_name(s, kStatuses, "status"); }
Feedback parse_feedback(const std::string& s) { return parse_name(s, kFeedback, "feedback"); }

void to_json(json& j, const DynamicState& v) {
    j = json{{"current_goals", v.current_goals},
             {"recent_context", v.recent_context},
             {"emotional_tone", v.emotional_tone ? json(*v.emotional_tone) : json(nullptr)},
             {"updated_at", v.updated_at}};
}

void from_json(const json& j, DynamicState& v) {
    v.current_goals = j.value("current_goals", std::vector<std::string>{});
    v.recent_context = j.value("recent_context", std::string{});
    v.emotional_tone = opt<std::string>(j, "emotional_tone");
    v.updated_at = j.value("updated_at", Millis{0});
}

void to_json(json& j, const BehaviorPattern& v) {
    j = json{{"description", v.description}, {"evidence_count", v.evidence_count}};
}

void from_json(const json& j, BehaviorPattern& v) {
    j.at("description").get_to(v.description);
    j.at("evidence_count").get_to(v.evidence_count);
}

void to_json(json& j, const UserProfile& v) {
    j = json{{"user_id", v.user_id},
             {"static_attrs", v.static_attrs},
             {"dynamic_state", v.dynamic_state},
             {"behavior_patterns", v.behavior_patterns},
             {"predictive", v.predictive},
             {"created_at", v.created_at},
             {"updated_at", v.updated_at}};
}

void from_json(const json& j, UserProfile& v) {
    j.at("user_id").get_to(v.user_id);
    v.static_attrs = j.value("static_attrs", std::map<std::string, std::string>{});
    v.dynamic_state = j.contains("dynamic_state") ? j.at("dynamic_state").get<DynamicState>()
                                                  : DynamicState{};
    v.behavior_patterns = j.value("behavior_patterns", std::vector<BehaviorPattern>{});
    v.predictive = j.value("predictive", std::vector<std::string>{});
    j.at("created_at").get_to(v.created_at);
    j.at("updated_at").get_to(v.updated_at);
}

void to_json(json& j, const Provenance& v) {
    j = json{{"session_id", v.session_id}, {"turn_index", v.turn_index}};
}

void from_json(const json& j, Provenance& v) {
    j.at("session_id").get_to(v.session_id);
    j.at("turn_index").get_to(v.turn_index);
}

void to_json(json& j, const InsightRecord& v) {
    j = json{{"insight_id", v.insight_id},
             {"user_id", v.user_id},
             {"kind", to_string(v.kind)},
             {"content", v.content},
             {"confidence", v.confidence},
             {"source", to_string(v.source)},
             {"trigger", to_string(v.trigger)},
             {"provenance", v.provenance},
             {"status", to_string(v.status)},
             {"superseded_by", v.superseded_by ? json(*v.superseded_by) : json(nullptr)},
             {"created_at", v.created_at}};
}

void from_json(const json& j, InsightRecord& v) {
    j.at("insight_id").get_to(v.insight_id);
    j.at("user_id").get_to(v.user_id);
    v.kind = parse_insight_kind(j.at("kind").get<std::string>());
    j.at("content").get_to(v.content);
    j.at("confidence").get_to(v.confidence);
    v.source = parse_insight_source(j.at("source").get<std::string>());
    v.trigger = parse_learning_trigger(j.at("trigger").get<std::string>());
    j.at("provenance").get_to(v.provenance);
    v.status = parse_insight_status(j.at("status").get<std::string>());
    v.superseded_by = opt<std::string>(j, "superseded_by");
    j.at("created_at").get_to(v.created_at);
}

void to_json(json& j, const TurnRecord& v) {
    j = json{{"session_id", v.session_id},
             {"turn_index", v.turn_index},
             {"user_message", v.user_message},
             {"assistant_message", v.assistant_message},
             {"feedback", to_string(v.feedback)},
             {"feedback_text", v.feedback_text ? json(*v.feedback_text) : json(nullptr)},
             {"retrieved_insight_ids", v.retrieved_insight_ids},
             {"timestamp", v.timestamp},
             {"error", v.error}};
}

void from_json(const json& j, TurnRecord& v) {
    j.at("session_id").get_to(v.session_id);
    j.at("turn_index").get_to(v.turn_index);
    j.at("user_message").get_to(v.user_message);
    j.at("assistant_message").get_to(v.assistant_message);
    v.feedback = parse_feedback(j.value("feedback", std::string("none")));
    v.feedback_text = opt<std::string>(j, "feedback_text");
    v.retrieved_insight_ids = j.value("retrieved_insight_ids", std::vector<std::string>{});
    j.at("timestamp").get_to(v.timestamp);
    v.error = j.value("error", false);
}

}  // namespace adapt::memory
