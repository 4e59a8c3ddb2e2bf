#pragma once

#include "adapt/common/util.hpp"
#include "adapt/memory/types.hpp"

#include <filesystem>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace adapt::learning {

struct LearningJob {
    std::string job_id;
    memory::LearningTrigger trigger = memory::LearningTrigger::end_of_session;
    std::string user_id;
    std::string session_id;
    int turn_index = 0;
    int attempts = 0;
    Millis enqueued_at = 0;
    Millis not_before = 0;
    std::string last_error;

    bool operator==(const LearningJob&) const = default;
};

struct QueueConfig {
    int max_attempts = 3;
    Millis base_backoff_ms = 1000;
    Millis max_backoff_ms = 60000;
};

// Durable job queue under {root}/queue/{pending,claimed,dead}. Claiming moves a
// job file into claimed/ by rename; claimed jobs left over from a crash are
// returned to pending/ on construction. At most one job per user is in flight.
class JobQueue {
public:
    explicit JobQueue(std::filesystem::path root, QueueConfig config = {});

    // Idempotent: a pending or claimed job for the same (trigger, user,
    // session, turn) is reused and its id returned.
    std::string enqueue(LearningJob job);

    std::optional<LearningJob> claim(Millis now = now_ms());
    void complete(const LearningJob& job);
    // Retries with exponential backoff until max_attempts, then dead-letters.
    void fail(LearningJob job, const std::string& error, Millis now = now_ms());
    // Dead-letters without further retries.
    void reject(LearningJob job, const std::string& error);

    std::vector<LearningJob> pending() const;
    std::vector<LearningJob> dead() const;
    bool has_open_job(memory::LearningTrigger trigger, const std::string& user_id, const std::string& session_id) const;

    const QueueConfig& config() const { return config_; }

private:
    std::filesystem::path dir(const char* name) const;
    std::vector<LearningJob> list(const char* name) const;
    void release(const std::string& user_id);

    std::filesystem::path root_;
    QueueConfig config_;
    mutable std::mutex mu_;
    std::set<std::string> in_flight_users_;
};

}  // namespace adapt::learning
