#pragma once

#include "adapt/learning/engine.hpp"
#include "adapt/learning/queue.hpp"
#include "adapt/llm/gateway.hpp"
#include "adapt/memory/store.hpp"
#include "adapt/personalization/engine.hpp"

#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace adapt::agent {

// Domain tools are registered by the embedding application; none ship built in.
class ToolRegistry {
public:
    using Tool = std::function<std::string(const std::string& input)>;

    void register_tool(const std::string& name, std::string description, Tool tool);
    std::vector<std::pair<std::string, std::string>> list() const;
    // Throws NotFoundError for unknown tools.
    std::string invoke(const std::string& name, const std::string& input) const;

private:
    mutable std::mutex mu_;
    std::map<std::string, std::pair<std::string, Tool>> tools_;
};

struct OrchestratorConfig {
    std::size_t context_tokens = 8000;
    personalization::BudgetFractions fractions;
    // Which feedback signals bypass the queue and run learning right away.
    bool event_on_negative = true;
    bool event_on_positive = false;
    double temperature = 0.0;
    int max_response_tokens = 1024;
};

struct ResponseTrace {
    int turn_index = 0;
    std::vector<std::string> retrieved_insight_ids;
    // Same insights with their relevance and relevance x confidence scores.
    std::vector<personalization::ScoredInsight> retrieved;
    std::string composed_prompt;
    double retrieval_ms = 0.0;
    double assembly_ms = 0.0;
    double llm_ms = 0.0;
    std::map<std::string, personalization::SlotUsage> budget_report;
    // Request-path steps in execution order.
    std::vector<std::string> stages;
    bool summary_degraded = false;
};

struct QueryResult {
    std::string response;
    ResponseTrace trace;
};

struct SessionState {
    std::string user_id;
    std::string session_id;
    std::vector<memory::TurnRecord> working_turns;
    personalization::SessionSummary summary;
    Millis started_at = 0;
};

class Orchestrator {
public:
    Orchestrator(memory::MemoryStore& store, const llm::Gateway& gateway,
                 const personalization::PersonalizationEngine& personalization,
                 learning::LearningEngine& learning, learning::JobQueue& queue,
                 OrchestratorConfig config = {});
    ~Orchestrator();

    // allocate_budget -> [compress_history] -> select_context ->
    // compose_system_prompt -> complete -> append_turn. Never calls into
    // learning. On responder failure the turn is persisted with error=true and
    // the error is rethrown.
    QueryResult handle_query(const std::string& user_id, const std::string& session_id,
                             const std::string& query_text);

    // Stores the feedback; a triggering signal starts event learning in the
    // background and returns without waiting for it.
    void record_feedback(const std::string& user_id, const std::string& session_id, int turn_index,
                         memory::Feedback signal, std::optional<std::string> text = std::nullopt);

    // Enqueues the end-of-session job. Returns false when the session was
    // already ended or a job for it is still open.
    bool end_session(const std::string& user_id, const std::string& session_id);

    // Blocks until background feedback learning started so far has finished.
    void wait_for_background();

    std::optional<SessionState> session_state(const std::string& user_id,
                                              const std::string& session_id) const;
    ToolRegistry& tools() { return tools_; }

private:
    struct Slot {
        std::mutex mu;
        std::optional<SessionState> state;
        bool ended = false;
    };

    std::shared_ptr<Slot> slot(const std::string& user_id, const std::string& session_id);
    void load_state(Slot& s, const std::string& user_id, const std::string& session_id);

    memory::MemoryStore& store_;
    const llm::Gateway& gateway_;
    const personalization::PersonalizationEngine& personalization_;
    learning::LearningEngine& learning_;
    learning::JobQueue& queue_;
    OrchestratorConfig config_;
    ToolRegistry tools_;

    mutable std::mutex mu_;
    std::map<std::pair<std::string, std::string>, std::shared_ptr<Slot>> sessions_;
    std::mutex background_mu_;
    std::vector<std::future<void>> background_;
};

}  // namespace adapt::agent
