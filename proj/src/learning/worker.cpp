#include "adapt/learning/worker.hpp"

#include "adapt/common/errors.hpp"

#include <thread>

#include <spdlog/spdlog.h>

namespace adapt::learning {

bool Worker::run_once() {
    auto job = queue_.claim();
    if (!job) return false;
    try {
        switch (job->trigger) {
            case memory::LearningTrigger::end_of_session: engine_.process_session(job->user_id, job->session_id); break;
            case memory::LearningTrigger::event:
                engine_.handle_feedback_event(job->user_id, job->session_id, job->turn_index);
                break;
            case memory::LearningTrigger::batch: engine_.run_batch(job->user_id); break;
        }
        queue_.complete(*job);
    } catch (const NotFoundError& e) {
        spdlog::warn("learning job {} rejected: {}", job->job_id, e.what());
        queue_.reject(*job, e.what());
    } catch (const PreconditionError& e) {
        spdlog::warn("learning job {} rejected: {}", job->job_id, e.what());
        queue_.reject(*job, e.what());
    } catch (const std::exception& e) {
        spdlog::warn("learning job {} attempt {} failed: {}", job->job_id, job->attempts + 1, e.what());
        queue_.fail(*job, e.what());
    }
    return true;
}

std::size_t Worker::drain() {
    std::size_t n = 0;
    while (run_once()) ++n;
    return n;
}

void Worker::run(std::stop_token stop, std::chrono::milliseconds poll) {
    while (!stop.stop_requested()) {
        if (!run_once()) std::this_thread::sleep_for(poll);
    }
}

}  // namespace adapt::learning
