#include "adapt/learning/queue.hpp"

#include "adapt/common/errors.hpp"

#include <algorithm>

#include <nlohmann/json.hpp>

namespace adapt::learning {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json to_json(const LearningJob& job) {
    return {{"job_id", job.job_id},           {"trigger", memory::to_string(job.trigger)},
            {"user_id", job.user_id},         {"session_id", job.session_id},
            {"turn_index", job.turn_index},   {"attempts", job.attempts},
            {"enqueued_at", job.enqueued_at}, {"not_before", job.not_before},
            {"last_error", job.last_error}};
}

LearningJob job_from_file(const fs::path& path) {
    try {
        auto j = json::parse(read_file(path));
        LearningJob job;
        job.job_id = j.at("job_id").get<std::string>();
        job.trigger = memory::parse_learning_trigger(j.at("trigger").get<std::string>());
        job.user_id = j.at("user_id").get<std::string>();
        job.session_id = j.value("session_id", "");
        job.turn_index = j.value("turn_index", 0);
        job.attempts = j.value("attempts", 0);
        job.enqueued_at = j.value("enqueued_at", Millis{0});
        job.not_before = j.value("not_before", Millis{0});
        job.last_error = j.value("last_error", "");
        return job;
    } catch (const json::exception& e) {
        throw DecodeError(path.string(), e.what());
    } catch (const ValidationError& e) {
        throw DecodeError(path.string(), e.what());
    }
}

bool same_target(const LearningJob& a, const LearningJob& b) {
    return a.trigger == b.trigger && a.user_id == b.user_id && a.session_id == b.session_id &&
           a.turn_index == b.turn_index;
}

}  // namespace

JobQueue::JobQueue(fs::path root, QueueConfig config) : root_(std::move(root)), config_(config) {
    for (const char* name : {"pending", "claimed", "dead"}) fs::create_directories(dir(name));
    for (const auto& entry : fs::directory_iterator(dir("claimed"))) {
        fs::rename(entry.path(), dir("pending") / entry.path().filename());
    }
}

fs::path JobQueue::dir(const char* name) const { return root_ / "queue" / name; }

std::vector<LearningJob> JobQueue::list(const char* name) const {
    std::vector<LearningJob> jobs;
    for (const auto& entry : fs::directory_iterator(dir(name))) {
        if (entry.path().extension() != ".json") continue;
        jobs.push_back(job_from_file(entry.path()));
    }
    std::sort(jobs.begin(), jobs.end(), [](const LearningJob& a, const LearningJob& b) {
        return a.enqueued_at != b.enqueued_at ? a.enqueued_at < b.enqueued_at : a.job_id < b.job_id;
    });
    return jobs;
}

std::string JobQueue::enqueue(LearningJob job) {
    if (job.user_id.empty()) throw ValidationError("job requires a user_id");
    if (job.trigger != memory::LearningTrigger::batch && job.session_id.empty()) {
        throw ValidationError("job requires a session_id");
    }
    if (job.trigger == memory::LearningTrigger::event && job.turn_index < 1) {
        throw ValidationError("event job requires a turn_index");
    }
    std::lock_guard lock(mu_);
    for (const char* name : {"pending", "claimed"}) {
        for (const auto& open : list(name)) {
            if (same_target(open, job)) return open.job_id;
        }
    }
    if (job.job_id.empty()) job.job_id = random_id();
    if (job.enqueued_at == 0) job.enqueued_at = now_ms();
    write_file_atomic(dir("pending") / (job.job_id + ".json"), to_json(job).dump(2));
    return job.job_id;
}

std::optional<LearningJob> JobQueue::claim(Millis now) {
    std::lock_guard lock(mu_);
    for (auto& job : list("pending")) {
        if (job.not_before > now || in_flight_users_.count(job.user_id)) continue;
        std::error_code ec;
        fs::rename(dir("pending") / (job.job_id + ".json"), dir("claimed") / (job.job_id + ".json"), ec);
        if (ec) continue;
        in_flight_users_.insert(job.user_id);
        return job;
    }
    return std::nullopt;
}

void JobQueue::release(const std::string& user_id) { in_flight_users_.erase(user_id); }

void JobQueue::complete(const LearningJob& job) {
    std::lock_guard lock(mu_);
    fs::remove(dir("claimed") / (job.job_id + ".json"));
    release(job.user_id);
}

void JobQueue::fail(LearningJob job, const std::string& error, Millis now) {
    std::lock_guard lock(mu_);
    job.attempts += 1;
    job.last_error = error;
    const char* target = "dead";
    if (job.attempts < config_.max_attempts) {
        Millis delay = config_.base_backoff_ms;
        for (int i = 1; i < job.attempts && delay < config_.max_backoff_ms; ++i) delay *= 2;
        job.not_before = now + std::min(delay, config_.max_backoff_ms);
        target = "pending";
    }
    write_file_atomic(dir(target) / (job.job_id + ".json"), to_json(job).dump(2));
    fs::remove(dir("claimed") / (job.job_id + ".json"));
    release(job.user_id);
}

void JobQueue::reject(LearningJob job, const std::string& error) {
    std::lock_guard lock(mu_);
    job.attempts += 1;
    job.last_error = error;
    write_file_atomic(dir("dead") / (job.job_id + ".json"), to_json(job).dump(2));
    fs::remove(dir("claimed") / (job.job_id + ".json"));
    release(job.user_id);
}

std::vector<LearningJob> JobQueue::pending() const {
    std::lock_guard lock(mu_);
    return list("pending");
}

std::vector<LearningJob> JobQueue::dead() const {
    std::lock_guard lock(mu_);
    return list("dead");
}

bool JobQueue::has_open_job(memory::LearningTrigger trigger, const std::string& user_id,
                            const std::string& session_id) const {
    std::lock_guard lock(mu_);
    for (const char* name : {"pending", "claimed"}) {
        for (const auto& job : list(name)) {
            if (job.trigger == trigger && job.user_id == user_id && job.session_id == session_id) return true;
        }
    }
    return false;
}

}  // namespace adapt::learning
