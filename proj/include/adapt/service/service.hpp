#pragma once

#include "adapt/agent/orchestrator.hpp"
#include "adapt/learning/engine.hpp"
#include "adapt/learning/queue.hpp"
#include "adapt/llm/gateway.hpp"
#include "adapt/memory/store.hpp"
#include "adapt/personalization/engine.hpp"
#include "adapt/service/config.hpp"

#include <memory>
#include <stop_token>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

namespace adapt::service {

nlohmann::json trace_to_json(const agent::ResponseTrace& trace);
nlohmann::json insight_to_json(const memory::InsightRecord& insight);

// Accepts up/down/positive/negative/none.
memory::Feedback parse_signal(const std::string& signal);

// The assembled system behind both the CLI and the HTTP facade. Every user
// facing operation goes through the orchestrator or the memory store here.
class Service {
public:
    explicit Service(ServiceConfig config);
    // Uses a caller-built gateway (tests, offline presets).
    Service(ServiceConfig config, std::shared_ptr<llm::Gateway> gateway);
    ~Service();

    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    nlohmann::json chat(const std::string& user_id, const std::string& session_id, const std::string& message);
    void feedback(const std::string& user_id, const std::string& session_id, int turn_index,
                  memory::Feedback signal, std::optional<std::string> text = std::nullopt);
    // {"ended": bool}
    nlohmann::json end_session(const std::string& user_id, const std::string& session_id);

    // NotFoundError when the user has no profile.
    nlohmann::json profile(const std::string& user_id);
    // Merges static_attrs (null removes a key), current_goals, recent_context,
    // emotional_tone and predictive. Creates the profile when missing.
    nlohmann::json patch_profile(const std::string& user_id, const nlohmann::json& patch);

    // status: active (default), superseded, deleted or all.
    nlohmann::json insights(const std::string& user_id, const std::string& status = "active");
    // {content?, confidence?, status?}. ConflictError when the insight is deleted.
    nlohmann::json patch_insight(const std::string& user_id, const std::string& insight_id,
                                 const nlohmann::json& patch);
    // Soft delete. ConflictError when already deleted.
    nlohmann::json delete_insight(const std::string& user_id, const std::string& insight_id);

    nlohmann::json health();

    // Background learning workers. start is a no-op when already running.
    void start_workers();
    void stop_workers();
    // Runs every ready learning job on the calling thread.
    std::size_t drain_queue();

    const ServiceConfig& config() const { return config_; }
    memory::FileMemoryStore& store() { return store_; }
    llm::Gateway& gateway() { return *gateway_; }
    learning::JobQueue& queue() { return queue_; }
    learning::LearningEngine& learning() { return learning_; }
    agent::Orchestrator& orchestrator() { return orchestrator_; }

private:
    ServiceConfig config_;
    std::shared_ptr<llm::Gateway> gateway_;
    memory::FileMemoryStore store_;
    learning::LearningEngine learning_;
    personalization::PersonalizationEngine personalization_;
    learning::JobQueue queue_;
    agent::Orchestrator orchestrator_;
    std::vector<std::jthread> workers_;
};

// Gateway for `config.backend`; a scripted backend gets the offline presets.
std::shared_ptr<llm::Gateway> make_gateway(const ServiceConfig& config);

}  // namespace adapt::service
