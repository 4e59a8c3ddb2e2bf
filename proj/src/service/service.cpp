#include "adapt/service/service.hpp"

#include "adapt/bench/dataset.hpp"
#include "adapt/common/errors.hpp"
#include "adapt/eval/offline.hpp"
#include "adapt/learning/worker.hpp"

#include <spdlog/spdlog.h>

namespace adapt::service {

using nlohmann::json;

namespace {

agent::OrchestratorConfig orchestrator_config(const ServiceConfig& c) {
    agent::OrchestratorConfig o;
    o.context_tokens = c.total_tokens;
    return o;
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

json insight_to_json(const memory::InsightRecord& insight) {
    json j = insight;
    return j;
}

json trace_to_json(const agent::ResponseTrace& trace) {
    json retrieved = json::array();
    for (const auto& s : trace.retrieved) {
        retrieved.push_back({{"insight_id", s.insight.insight_id},
                             {"kind", memory::to_string(s.insight.kind)},
                             {"content", s.insight.content},
                             {"confidence", s.insight.confidence},
                             {"relevance", s.relevance},
                             {"score", s.score}});
    }
    json budget = json::object();
    for (const auto& [slot, usage] : trace.budget_report) {
        budget[slot] = {{"used", usage.used}, {"allowed", usage.allowed}};
    }
    return {{"turn_index", trace.turn_index},
            {"retrieved_insight_ids", trace.retrieved_insight_ids},
            {"retrieved", retrieved},
            {"composed_prompt", trace.composed_prompt},
            {"timings_ms", {{"retrieval", trace.retrieval_ms}, {"assembly", trace.assembly_ms}, {"llm", trace.llm_ms}}},
            {"budget_report", budget},
            {"stages", trace.stages},
            {"summary_degraded", trace.summary_degraded}};
}

memory::Feedback parse_signal(const std::string& signal) {
    if (signal == "up" || signal == "positive") return memory::Feedback::positive;
    if (signal == "down" || signal == "negative") return memory::Feedback::negative;
    if (signal == "none") return memory::Feedback::none;
    throw ValidationError("unknown feedback signal: " + signal);
}

std::shared_ptr<llm::Gateway> make_gateway(const ServiceConfig& config) {
    auto gateway = std::make_shared<llm::Gateway>(config.backend);
    if (config.backend.kind == llm::BackendKind::scripted) {
        eval::install_offline_presets(*gateway, bench::build_trait_pool());
    }
    return gateway;
}

Service::Service(ServiceConfig config) : Service(config, make_gateway(config)) {}

Service::Service(ServiceConfig config, std::shared_ptr<llm::Gateway> gateway)
    : config_((validate(config), std::move(config))),
      gateway_(std::move(gateway)),
      store_(config_.data_root),
      learning_(store_, *gateway_, config_.data_root),
      personalization_(store_),
      queue_(config_.data_root),
      orchestrator_(store_, *gateway_, personalization_, learning_, queue_, orchestrator_config(config_)) {}

Service::~Service() {
    stop_workers();
    orchestrator_.wait_for_background();
}

json Service::chat(const std::string& user_id, const std::string& session_id, const std::string& message) {
    auto result = orchestrator_.handle_query(user_id, session_id, message);
    json out{{"response", result.response}, {"turn_index", result.trace.turn_index}};
    if (config_.include_trace) out["trace"] = trace_to_json(result.trace);
    return out;
}

void Service::feedback(const std::string& user_id, const std::string& session_id, int turn_index,
                       memory::Feedback signal, std::optional<std::string> text) {
    orchestrator_.record_feedback(user_id, session_id, turn_index, signal, std::move(text));
}

json Service::end_session(const std::string& user_id, const std::string& session_id) {
    return {{"ended", orchestrator_.end_session(user_id, session_id)}};
}

json Service::profile(const std::string& user_id) {
    memory::validate_path_component(user_id, "user_id");
    auto p = store_.get_profile(user_id);
    if (!p) throw NotFoundError("profile of user " + user_id);
    json j = *p;
    return j;
}

json Service::patch_profile(const std::string& user_id, const json& patch) {
    memory::validate_path_component(user_id, "user_id");
    if (!patch.is_object()) throw ValidationError("profile patch must be an object");
    auto p = profile_or_new(store_, user_id);
    try {
        for (const auto& [key, value] : patch.items()) {
            if (key == "static_attrs") {
                for (const auto& [attr, v] : value.items()) {
                    if (v.is_null()) {
                        p.static_attrs.erase(attr);
                    } else {
                        p.static_attrs[attr] = v.get<std::string>();
                    }
                }
            } else if (key == "current_goals") {
                p.dynamic_state.current_goals = value.get<std::vector<std::string>>();
            } else if (key == "recent_context") {
                p.dynamic_state.recent_context = value.get<std::string>();
            } else if (key == "emotional_tone") {
                p.dynamic_state.emotional_tone =
                    value.is_null() ? std::nullopt : std::optional<std::string>(value.get<std::string>());
            } else if (key == "predictive") {
                p.predictive = value.get<std::vector<std::string>>();
            } else {
                throw ValidationError("profile field '" + key + "' cannot be patched");
            }
        }
    } catch (const json::exception& e) {
        throw ValidationError(std::string("bad profile patch: ") + e.what());
    }
    p.dynamic_state.updated_at = now_ms();
    json j = store_.upsert_profile(std::move(p));
    return j;
}

json Service::insights(const std::string& user_id, const std::string& status) {
    memory::InsightFilter filter;
    if (status == "all") {
        filter.statuses = std::set<memory::InsightStatus>{memory::InsightStatus::active,
                                                          memory::InsightStatus::superseded,
                                                          memory::InsightStatus::deleted};
    } else {
        filter.statuses = std::set<memory::InsightStatus>{memory::parse_insight_status(status)};
    }
    json out = json::array();
    for (const auto& i : store_.query_insights(user_id, filter)) out.push_back(insight_to_json(i));
    return out;
}

json Service::patch_insight(const std::string& user_id, const std::string& insight_id, const json& patch) {
    if (!patch.is_object()) throw ValidationError("insight patch must be an object");
    auto current = store_.get_insight(user_id, insight_id);
    if (!current) throw NotFoundError("insight " + insight_id + " of user " + user_id);
    if (current->status == memory::InsightStatus::deleted) {
        throw ConflictError("insight " + insight_id + " was deleted");
    }
    memory::InsightPatch p;
    std::optional<memory::InsightStatus> status;
    try {
        for (const auto& [key, value] : patch.items()) {
            if (key == "content") {
                p.content = value.get<std::string>();
            } else if (key == "confidence") {
                p.confidence = value.get<double>();
            } else if (key == "status") {
                status = memory::parse_insight_status(value.get<std::string>());
                if (status == memory::InsightStatus::superseded) {
                    throw ValidationError("superseded is set by learning, not by edits");
                }
            } else {
                throw ValidationError("insight field '" + key + "' cannot be patched");
            }
        }
    } catch (const json::exception& e) {
        throw ValidationError(std::string("bad insight patch: ") + e.what());
    }
    if (p.content || p.confidence) store_.update_insight(user_id, insight_id, p);
    if (status) store_.set_insight_status(user_id, insight_id, *status, std::nullopt);
    return insight_to_json(*store_.get_insight(user_id, insight_id));
}

json Service::delete_insight(const std::string& user_id, const std::string& insight_id) {
    auto current = store_.get_insight(user_id, insight_id);
    if (!current) throw NotFoundError("insight " + insight_id + " of user " + user_id);
    if (current->status == memory::InsightStatus::deleted) {
        throw ConflictError("insight " + insight_id + " is already deleted");
    }
    store_.set_insight_status(user_id, insight_id, memory::InsightStatus::deleted, std::nullopt);
    return insight_to_json(*store_.get_insight(user_id, insight_id));
}

json Service::health() {
    json components = json::object();
    bool ok = true;
    try {
        validate(config_);
        components["memory_store"] = {{"status", "ok"}, {"data_root", config_.data_root.string()}};
    } catch (const Error& e) {
        ok = false;
        components["memory_store"] = {{"status", "error"}, {"detail", e.what()}};
    }
    components["llm_gateway"] = {
        {"status", "ok"},
        {"backend", config_.backend.kind == llm::BackendKind::scripted ? "scripted" : "http_chat"}};
    components["learning_queue"] = {{"status", "ok"},
                                    {"pending", queue_.pending().size()},
                                    {"dead", queue_.dead().size()}};
    components["workers"] = {{"status", "ok"}, {"running", workers_.size()}};
    return {{"status", ok ? "ok" : "degraded"}, {"components", components}};
}

void Service::start_workers() {
    if (!workers_.empty()) return;
    for (std::size_t i = 0; i < config_.workers; ++i) {
        workers_.emplace_back([this](std::stop_token stop) {
            learning::Worker(queue_, learning_).run(stop);
        });
    }
}

void Service::stop_workers() {
    for (auto& w : workers_) w.request_stop();
    workers_.clear();
}

std::size_t Service::drain_queue() {
    orchestrator_.wait_for_background();
    return learning::Worker(queue_, learning_).drain();
}

}  // namespace adapt::service
