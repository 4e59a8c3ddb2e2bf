#pragma once

#include "adapt/learning/extraction.hpp"
#include "adapt/learning/reconcile.hpp"
#include "adapt/llm/gateway.hpp"
#include "adapt/memory/store.hpp"

#include <atomic>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

namespace adapt::learning {

struct LearningConfig {
    ReconcileConfig reconcile;
    // Distinct observations of one behavior before it is promoted to the
    // profile's behavior_patterns.
    int behavior_pattern_min_evidence = 3;
    // "User asked about: ..." lines kept in dynamic_state.recent_context.
    std::size_t recent_context_lines = 10;
};

// Per-user bookkeeping kept next to the memory store at
// learning/{user_id}.json. Not part of the user model.
struct LearningState {
    Millis batch_watermark = 0;
    // insight_id -> "session#turn" observations of that behavior.
    std::map<std::string, std::set<std::string>> behavior_evidence;
};

// Topic line for the recent-context summary: the content words of the first
// question (or sentence) in the message, at most five.
std::string summarize_topic(std::string_view user_message);

// Turns episodic records into semantic insights. Runs outside the request
// path; jobs for one user are serialized.
class LearningEngine {
public:
    LearningEngine(memory::MemoryStore& store, const llm::Gateway& gateway,
                   std::filesystem::path state_root, LearningConfig config = {});

    // Extract -> reconcile -> write for every turn in order. Per-turn extraction
    // failures are logged and skipped; if every turn fails the call throws.
    // Returns the ids of insights added or reinforced.
    std::vector<std::string> process_session(const std::string& user_id,
                                             const std::string& session_id);

    // Single-turn path for explicit feedback. Insights are stored with
    // source=explicit, trigger=event.
    std::vector<std::string> handle_feedback_event(const std::string& user_id,
                                                   const std::string& session_id, int turn_index);

    // Re-scans sessions modified since the user's batch watermark.
    std::vector<std::string> run_batch(const std::string& user_id);

    // Total calls into the three entry points; lets callers prove the request
    // path never enters learning.
    std::size_t invocations() const { return invocations_.load(); }

    LearningState load_state(const std::string& user_id) const;

private:
    struct TurnOutcome {
        std::vector<std::string> ids;
        bool failed = false;
    };

    TurnOutcome learn_from_turn(const std::string& user_id, const memory::TurnRecord& turn,
                                memory::LearningTrigger trigger, bool force_explicit,
                                LearningState& state);
    void apply_behavior_evidence(const std::string& user_id, const LearningState& state,
                                 const std::set<std::string>& touched);
    void update_recent_context(const std::string& user_id,
                               const std::vector<memory::TurnRecord>& turns);
    void save_state(const std::string& user_id, const LearningState& state) const;
    std::mutex& user_mutex(const std::string& user_id);

    memory::MemoryStore& store_;
    const llm::Gateway& gateway_;
    std::filesystem::path state_root_;
    LearningConfig config_;
    std::atomic<std::size_t> invocations_{0};
    std::mutex mu_;
    std::unordered_map<std::string, std::unique_ptr<std::mutex>> user_mutexes_;
};

}  // namespace adapt::learning
