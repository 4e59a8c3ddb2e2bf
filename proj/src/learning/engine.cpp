#include "adapt/learning/engine.hpp"

#include "adapt/common/errors.hpp"
#include "adapt/common/util.hpp"

#include <algorithm>
#include <sstream>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

namespace adapt::learning {

namespace fs = std::filesystem;
using memory::InsightRecord;
using memory::InsightSource;
using memory::InsightStatus;
using nlohmann::json;

namespace {

std::string evidence_key(const memory::TurnRecord& turn) {
    return turn.session_id + "#" + std::to_string(turn.turn_index);
}

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) {
        line = trim(line);
        if (!line.empty()) lines.push_back(line);
    }
    return lines;
}

memory::UserProfile profile_or_new(memory::MemoryStore& store, const std::string& user_id) {
    if (auto p = store.get_profile(user_id)) return *p;
    memory::UserProfile p;
    p.user_id = user_id;
    p.created_at = now_ms();
    p.updated_at = p.created_at;
    return p;
}

}  // namespace

std::string summarize_topic(std::string_view user_message) {
    std::string_view chosen = user_message;
    std::size_t start = 0;
    for (std::size_t i = 0; i < user_message.size(); ++i) {
        char c = user_message[i];
        if (c == '.' || c == '!' || c == '?' || c == '\n') {
            if (c == '?') {
                chosen = user_message.substr(start, i - start);
                break;
            }
            start = i + 1;
        }
    }
    auto words = content_tokens(chosen);
    if (words.empty()) words = content_tokens(user_message);
    if (words.size() > 5) words.resize(5);
    std::string out;
    for (const auto& w : words) {
        if (!out.empty()) out += ' ';
        out += w;
    }
    return out;
}

LearningEngine::LearningEngine(memory::MemoryStore& store, const llm::Gateway& gateway,
                               fs::path state_root, LearningConfig config)
    : store_(store), gateway_(gateway), state_root_(std::move(state_root)), config_(config) {}

std::mutex& LearningEngine::user_mutex(const std::string& user_id) {
    std::lock_guard lock(mu_);
    auto& slot = user_mutexes_[user_id];
    if (!slot) slot = std::make_unique<std::mutex>();
    return *slot;
}

LearningState LearningEngine::load_state(const std::string& user_id) const {
    memory::validate_path_component(user_id, "user_id");
    auto path = state_root_ / "learning" / (user_id + ".json");
    LearningState state;
    if (!fs::exists(path)) return state;
    try {
        auto j = json::parse(read_file(path));
        state.batch_watermark = j.value("batch_watermark", Millis{0});
        if (j.contains("behavior_evidence")) {
            for (const auto& [id, keys] : j.at("behavior_evidence").items()) {
                state.behavior_evidence[id] = keys.get<std::set<std::string>>();
            }
        }
    } catch (const json::exception& e) {
        throw DecodeError(path.string(), e.what());
    }
    return state;
}

void LearningEngine::save_state(const std::string& user_id, const LearningState& state) const {
    json evidence = json::object();
    for (const auto& [id, keys] : state.behavior_evidence) evidence[id] = keys;
    json j{{"batch_watermark", state.batch_watermark}, {"behavior_evidence", evidence}};
    write_file_atomic(state_root_ / "learning" / (user_id + ".json"), j.dump(2));
}

LearningEngine::TurnOutcome LearningEngine::learn_from_turn(const std::string& user_id,
                                                            const memory::TurnRecord& turn,
                                                            memory::LearningTrigger trigger,
                                                            bool force_explicit,
                                                            LearningState& state) {
    TurnOutcome outcome;
    auto drafts = extract_turn_insights(turn, gateway_);
    if (drafts.empty()) return outcome;

    const InsightSource source = force_explicit || is_explicit_statement(turn.user_message)
                                     ? InsightSource::explicit_signal
                                     : InsightSource::implicit_signal;
    const Millis now = now_ms();
    auto existing = store_.query_insights(user_id, {});

    for (const auto& draft : drafts) {
        auto action = reconcile(draft, DraftContext{source, now}, existing, config_.reconcile);
        std::string touched;
        switch (action.type) {
            case ReconcileAction::Type::merge: {
                auto it = std::find_if(existing.begin(), existing.end(), [&](const InsightRecord& r) {
                    return r.insight_id == action.target_id;
                });
                if (it != existing.end() && it->confidence != action.new_confidence) {
                    *it = store_.update_insight(user_id, action.target_id,
                                                memory::InsightPatch{std::nullopt, action.new_confidence});
                }
                touched = action.target_id;
                break;
            }
            case ReconcileAction::Type::add:
            case ReconcileAction::Type::supersede: {
                InsightRecord record;
                record.user_id = user_id;
                record.kind = draft.kind;
                record.content = draft.content;
                record.confidence = draft.confidence;
                record.source = source;
                record.trigger = trigger;
                record.provenance = {turn.session_id, turn.turn_index};
                record.created_at = now;
                record.insight_id = store_.append_insight(record);
                if (action.type == ReconcileAction::Type::supersede) {
                    store_.set_insight_status(user_id, action.target_id, InsightStatus::superseded,
                                              record.insight_id);
                    std::erase_if(existing, [&](const InsightRecord& r) {
                        return r.insight_id == action.target_id;
                    });
                }
                touched = record.insight_id;
                existing.push_back(std::move(record));
                break;
            }
        }
        outcome.ids.push_back(touched);
        if (draft.kind == memory::InsightKind::behavior) {
            state.behavior_evidence[touched].insert(evidence_key(turn));
        }
    }
    return outcome;
}

void LearningEngine::apply_behavior_evidence(const std::string& user_id, const LearningState& state,
                                             const std::set<std::string>& touched) {
    bool changed = false;
    auto profile = profile_or_new(store_, user_id);
    for (const auto& id : touched) {
        auto it = state.behavior_evidence.find(id);
        if (it == state.behavior_evidence.end()) continue;
        auto count = static_cast<std::int64_t>(it->second.size());
        if (count < config_.behavior_pattern_min_evidence) continue;
        auto insight = store_.get_insight(user_id, id);
        if (!insight || insight->status != InsightStatus::active) continue;
        auto pattern = std::find_if(
            profile.behavior_patterns.begin(), profile.behavior_patterns.end(),
            [&](const memory::BehaviorPattern& p) { return p.description == insight->content; });
        if (pattern == profile.behavior_patterns.end()) {
            profile.behavior_patterns.push_back({insight->content, count});
            changed = true;
        } else if (pattern->evidence_count < count) {
            pattern->evidence_count = count;
            changed = true;
        }
    }
    if (changed) store_.upsert_profile(std::move(profile));
}

void LearningEngine::update_recent_context(const std::string& user_id,
                                           const std::vector<memory::TurnRecord>& turns) {
    auto profile = profile_or_new(store_, user_id);
    auto lines = split_lines(profile.dynamic_state.recent_context);
    bool changed = false;
    for (const auto& turn : turns) {
        auto topic = summarize_topic(turn.user_message);
        if (topic.empty()) continue;
        auto line = "User asked about: " + topic;
        auto it = std::find(lines.begin(), lines.end(), line);
        if (it != lines.end()) continue;
        lines.push_back(std::move(line));
        changed = true;
    }
    if (!changed) return;
    if (lines.size() > config_.recent_context_lines) {
        lines.erase(lines.begin(),
                    lines.begin() + static_cast<long>(lines.size() - config_.recent_context_lines));
    }
    std::string text;
    for (const auto& l : lines) text += l + "\n";
    profile.dynamic_state.recent_context = text;
    profile.dynamic_state.updated_at = now_ms();
    store_.upsert_profile(std::move(profile));
}

std::vector<std::string> LearningEngine::process_session(const std::string& user_id,
                                                         const std::string& session_id) {
    invocations_.fetch_add(1);
    std::lock_guard lock(user_mutex(user_id));
    auto turns = store_.load_session(user_id, session_id);
    if (turns.empty()) throw NotFoundError("session " + session_id + " of user " + user_id);

    auto state = load_state(user_id);
    std::vector<std::string> ids;
    std::set<std::string> touched;
    std::size_t failures = 0;
    std::string last_error;
    for (const auto& turn : turns) {
        try {
            auto outcome =
                learn_from_turn(user_id, turn, memory::LearningTrigger::end_of_session, false, state);
            for (auto& id : outcome.ids) {
                touched.insert(id);
                if (std::find(ids.begin(), ids.end(), id) == ids.end()) ids.push_back(id);
            }
        } catch (const Error& e) {
            ++failures;
            last_error = e.what();
            spdlog::warn("learning: skipping {}#{} of {}: {}", session_id, turn.turn_index, user_id,
                         e.what());
        }
    }
    if (failures == turns.size()) {
        throw Error("learning_failed", "every turn of session " + session_id +
                                           " failed extraction: " + last_error);
    }
    update_recent_context(user_id, turns);
    apply_behavior_evidence(user_id, state, touched);
    save_state(user_id, state);
    return ids;
}

std::vector<std::string> LearningEngine::handle_feedback_event(const std::string& user_id,
                                                               const std::string& session_id,
                                                               int turn_index) {
    invocations_.fetch_add(1);
    std::lock_guard lock(user_mutex(user_id));
    auto turns = store_.load_session(user_id, session_id);
    if (turn_index < 1 || turn_index > static_cast<int>(turns.size())) {
        throw NotFoundError("turn " + std::to_string(turn_index) + " of session " + session_id);
    }
    const auto& turn = turns[static_cast<std::size_t>(turn_index - 1)];
    if (turn.feedback == memory::Feedback::none) {
        throw PreconditionError("turn " + std::to_string(turn_index) + " carries no feedback");
    }
    auto state = load_state(user_id);
    auto outcome = learn_from_turn(user_id, turn, memory::LearningTrigger::event, true, state);
    apply_behavior_evidence(user_id, state, {outcome.ids.begin(), outcome.ids.end()});
    save_state(user_id, state);
    return outcome.ids;
}

std::vector<std::string> LearningEngine::run_batch(const std::string& user_id) {
    invocations_.fetch_add(1);
    std::lock_guard lock(user_mutex(user_id));
    auto state = load_state(user_id);
    Millis watermark = state.batch_watermark;
    std::vector<std::string> ids;
    for (const auto& info : store_.list_sessions(user_id)) {
        if (info.last_modified <= state.batch_watermark || info.turn_count == 0) continue;
        auto turns = store_.load_session(user_id, info.session_id);
        std::set<std::string> touched;
        std::size_t failures = 0;
        for (const auto& turn : turns) {
            try {
                auto outcome = learn_from_turn(user_id, turn, memory::LearningTrigger::batch, false, state);
                touched.insert(outcome.ids.begin(), outcome.ids.end());
                ids.insert(ids.end(), outcome.ids.begin(), outcome.ids.end());
            } catch (const Error& e) {
                ++failures;
                spdlog::warn("batch learning: skipping {}#{} of {}: {}", info.session_id,
                             turn.turn_index, user_id, e.what());
            }
        }
        if (failures == turns.size()) {
            save_state(user_id, state);
            throw Error("learning_failed", "batch re-scan failed for session " + info.session_id);
        }
        update_recent_context(user_id, turns);
        apply_behavior_evidence(user_id, state, touched);
        watermark = std::max(watermark, info.last_modified);
    }
    state.batch_watermark = watermark;
    save_state(user_id, state);
    return ids;
}

}  // namespace adapt::learning
