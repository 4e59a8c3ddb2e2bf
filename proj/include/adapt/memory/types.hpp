#pragma once

#include "adapt/common/util.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace adapt::memory {

// ---------------------------------------------------------------------------
// User model: static attributes, dynamic state, behavior patterns and
// anticipated needs. `predictive` is stored verbatim and never auto-filled.
// ---------------------------------------------------------------------------

struct DynamicState {
    std::vector<std::string> current_goals;
    std::string recent_context;
    std::optional<std::string> emotional_tone;
    Millis updated_at = 0;

    bool operator==(const DynamicState&) const = default;
};

struct BehaviorPattern {
    std::string description;
    std::int64_t evidence_count = 0;

    bool operator==(const BehaviorPattern&) const = default;
};

struct UserProfile {
    std::string user_id;
    std::map<std::string, std::string> static_attrs;
    DynamicState dynamic_state;
    std::vector<BehaviorPattern> behavior_patterns;
    std::vector<std::string> predictive;
    Millis created_at = 0;
    Millis updated_at = 0;

    bool operator==(const UserProfile&) const = default;
};

// Throws ValidationError when an invariant does not hold.
void validate(const UserProfile& profile);

// ---------------------------------------------------------------------------
// Semantic memory
// ---------------------------------------------------------------------------

enum class InsightKind { preference, fact, behavior };
enum class InsightSource { explicit_signal, implicit_signal };
enum class LearningTrigger { end_of_session, event, batch };
enum class InsightStatus { active, superseded, deleted };

struct Provenance {
    std::string session_id;
    int turn_index = 0;

    bool operator==(const Provenance&) const = default;
};

struct InsightRecord {
    std::string insight_id;
    std::string user_id;
    InsightKind kind = InsightKind::fact;
    std::string content;
    double confidence = 0.0;
    InsightSource source = InsightSource::implicit_signal;
    LearningTrigger trigger = LearningTrigger::end_of_session;
    Provenance provenance;
    InsightStatus status = InsightStatus::active;
    std::optional<std::string> superseded_by;
    Millis created_at = 0;

    bool operator==(const InsightRecord&) const = default;
};

void validate(const InsightRecord& insight);

// ---------------------------------------------------------------------------
// Episodic memory
// ---------------------------------------------------------------------------

enum class Feedback { none, positive, negative };

struct TurnRecord {
    std::string session_id;
    int turn_index = 0;
    std::string user_message;
    std::string assistant_message;
    Feedback feedback = Feedback::none;
    std::optional<std::string> feedback_text;
    std::vector<std::string> retrieved_insight_ids;
    Millis timestamp = 0;
    // Set when the responder failed and `assistant_message` is empty.
    bool error = false;

    bool operator==(const TurnRecord&) const = default;
};

// ---------------------------------------------------------------------------
// String forms used on disk and on the wire.
// ---------------------------------------------------------------------------

std::string to_string(InsightKind v);
std::string to_string(InsightSource v);
std::string to_string(LearningTrigger v);
std::string to_string(InsightStatus v);
std::string to_string(Feedback v);

// Parsers throw ValidationError on unknown names.
InsightKind parse_insight_kind(const std::string& s);
InsightSource parse_insight_source(const std::string& s);
LearningTrigger parse_learning_trigger(const std::string& s);
InsightStatus parse_insight_status(const std::string& s);
Feedback parse_feedback(const std::string& s);

void to_json(nlohmann::json& j, const DynamicState& v);
void from_json(const nlohmann::json& j, DynamicState& v);
void to_json(nlohmann::json& j, const BehaviorPattern& v);
void from_json(const nlohmann::json& j, BehaviorPattern& v);
void to_json(nlohmann::json& j, const UserProfile& v);
void from_json(const nlohmann::json& j, UserProfile& v);
void to_json(nlohmann::json& j, const Provenance& v);
void from_json(const nlohmann::json& j, Provenance& v);
void to_json(nlohmann::json& j, const InsightRecord& v);
void from_json(const nlohmann::json& j, InsightRecord& v);
void to_json(nlohmann::json& j, const TurnRecord& v);
void from_json(const nlohmann::json& j, TurnRecord& v);

}  // namespace adapt::memory
