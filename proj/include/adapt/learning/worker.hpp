#pragma once

#include "adapt/learning/engine.hpp"
#include "adapt/learning/queue.hpp"

#include <chrono>
#include <stop_token>

namespace adapt::learning {

// Pulls jobs from the queue and runs them on the engine. Missing sessions and
// turns are dead-lettered immediately; other failures are retried.
class Worker {
public:
    Worker(JobQueue& queue, LearningEngine& engine) : queue_(queue), engine_(engine) {}

    // Processes at most one ready job. Returns false when none was ready.
    bool run_once();
    // Runs ready jobs until none is left; returns how many were processed.
    std::size_t drain();
    // Polls until stop is requested.
    void run(std::stop_token stop, std::chrono::milliseconds poll = std::chrono::milliseconds(200));

private:
    JobQueue& queue_;
    LearningEngine& engine_;
};

}  // namespace adapt::learning
