#include "adapt/eval/runner.hpp"

#include "adapt/common/errors.hpp"
#include "adapt/common/util.hpp"
#include "adapt/learning/worker.hpp"
#include "adapt/personalization/engine.hpp"

#include <atomic>
#include <fstream>
#include <future>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

namespace adapt::eval {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const char* kLearningSession = "learning";
const char* kEvaluationSession = "evaluation";

template <typename Fn>
void parallel_for(std::size_t count, std::size_t parallelism, Fn fn) {
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < count; i = next++) fn(i);
    };
    std::vector<std::future<void>> workers;
    for (std::size_t w = 0; w < std::max<std::size_t>(1, std::min(parallelism, count)); ++w) {
        workers.push_back(std::async(std::launch::async, work));
    }
    for (auto& f : workers) f.get();
}

Transcript run_baseline(const bench::Trajectory& trajectory, const llm::Gateway& gateway,
                        const agent::OrchestratorConfig& config) {
    Transcript t;
    t.persona_id = trajectory.persona_id;
    t.condition = Condition::baseline;
    personalization::ContextBundle empty;
    empty.user_id = trajectory.persona_id;
    const auto system_prompt = personalization::compose_system_prompt(empty);
    for (const auto& turn : trajectory.turns) {
        TranscriptTurn out{turn.turn_index, turn.phase, turn.user_message, "", system_prompt, false, ""};
        llm::ChatRequest request;
        request.role = llm::Role::responder;
        request.temperature = config.temperature;
        request.max_tokens = config.max_response_tokens;
        request.messages = {{llm::Speaker::system, system_prompt}, {llm::Speaker::user, turn.user_message}};
        try {
            out.response = gateway.complete(request);
        } catch (const Error& e) {
            out.failed = true;
            out.error = e.what();
        }
        t.turns.push_back(std::move(out));
    }
    return t;
}

Transcript run_personalized(const bench::Trajectory& trajectory, const llm::Gateway& gateway,
                            const RunConfig& config) {
    Transcript t;
    t.persona_id = trajectory.persona_id;
    t.condition = Condition::personalized;

    const auto root = config.work_root / trajectory.persona_id;
    fs::remove_all(root);
    fs::create_directories(root);
    memory::FileMemoryStore store(root);
    learning::LearningEngine engine(store, gateway, root);
    personalization::PersonalizationEngine personalization(store);
    learning::JobQueue queue(root, learning::QueueConfig{3, 0, 0});
    agent::Orchestrator orchestrator(store, gateway, personalization, engine, queue, config.orchestrator);

    auto answer = [&](const bench::TrajectoryTurn& turn, const char* session) {
        TranscriptTurn out{turn.turn_index, turn.phase, turn.user_message, "", "", false, ""};
        try {
            auto result = orchestrator.handle_query(trajectory.persona_id, session, turn.user_message);
            out.response = std::move(result.response);
            out.composed_prompt = std::move(result.trace.composed_prompt);
        } catch (const Error& e) {
            out.failed = true;
            out.error = e.what();
        }
        t.turns.push_back(std::move(out));
    };

    for (const auto& turn : trajectory.turns) {
        if (turn.phase == bench::Phase::learning) answer(turn, kLearningSession);
    }
    // Learning must finish before the evaluation phase starts.
    orchestrator.end_session(trajectory.persona_id, kLearningSession);
    learning::Worker(queue, engine).drain();
    for (const auto& job : queue.dead()) {
        spdlog::warn("learning for {} gave up: {}", trajectory.persona_id, job.last_error);
    }
    t.learned_insights = store.query_insights(trajectory.persona_id, {}).size();

    for (const auto& turn : trajectory.turns) {
        if (turn.phase == bench::Phase::evaluation) answer(turn, kEvaluationSession);
    }
    orchestrator.wait_for_background();
    return t;
}

}  // namespace

std::vector<Transcript> run_condition(const bench::Dataset& dataset, Condition condition,
                                      const llm::Gateway& gateway, const RunConfig& config) {
    if (condition == Condition::personalized && config.work_root.empty()) {
        throw ConfigError("the personalized condition needs a work root");
    }
    std::vector<Transcript> out(dataset.trajectories.size());
    parallel_for(out.size(), config.parallelism, [&](std::size_t i) {
        const auto& trajectory = dataset.trajectories[i];
        out[i] = condition == Condition::baseline
                     ? run_baseline(trajectory, gateway, config.orchestrator)
                     : run_personalized(trajectory, gateway, config);
    });
    return out;
}

JudgeOutcome judge_transcripts(const bench::Dataset& dataset, const std::vector<Transcript>& transcripts,
                               const llm::Gateway& gateway, std::size_t parallelism) {
    std::map<std::string, const bench::Persona*> personas;
    for (const auto& p : dataset.personas) personas[p.persona_id] = &p;

    struct Job {
        const Transcript* transcript;
        const TranscriptTurn* turn;
        std::vector<bench::Trait> traits;
    };
    std::vector<Job> jobs;
    std::size_t failed = 0;
    for (const auto& t : transcripts) {
        auto it = personas.find(t.persona_id);
        if (it == personas.end()) throw NotFoundError("persona " + t.persona_id + " is not in the dataset");
        std::vector<bench::Trait> traits;
        for (const auto& id : it->second->traits) traits.push_back(dataset.pool.at(id));
        for (const auto& turn : t.turns) {
            if (turn.phase != bench::Phase::evaluation) continue;
            if (turn.failed) {
                ++failed;
                continue;
            }
            jobs.push_back({&t, &turn, traits});
        }
    }

    std::vector<std::optional<JudgeAssessment>> results(jobs.size());
    parallel_for(jobs.size(), parallelism, [&](std::size_t i) {
        const auto& job = jobs[i];
        try {
            results[i] = judge_turn(job.transcript->persona_id, job.turn->turn_index,
                                    job.transcript->condition, job.traits, job.turn->user_message,
                                    job.turn->response, gateway);
        } catch (const Error& e) {
            spdlog::warn("judging {} turn {} failed: {}", job.transcript->persona_id,
                         job.turn->turn_index, e.what());
        }
    });

    JudgeOutcome outcome;
    outcome.failed_turns = failed;
    for (auto& r : results) {
        if (r) {
            outcome.assessments.push_back(std::move(*r));
        } else {
            ++outcome.failed_turns;
        }
    }
    return outcome;
}

std::string transcript_to_json(const Transcript& transcript) {
    json turns = json::array();
    for (const auto& t : transcript.turns) {
        turns.push_back({{"turn_index", t.turn_index},         {"phase", bench::to_string(t.phase)},
                         {"user_message", t.user_message},     {"response", t.response},
                         {"composed_prompt", t.composed_prompt}, {"failed", t.failed},
                         {"error", t.error}});
    }
    return json{{"persona_id", transcript.persona_id},
                {"condition", to_string(transcript.condition)},
                {"learned_insights", transcript.learned_insights},
                {"turns", turns}}
        .dump();
}

Transcript transcript_from_json(std::string_view json_text) {
    Transcript t;
    try {
        auto j = json::parse(json_text);
        t.persona_id = j.at("persona_id").get<std::string>();
        t.condition = parse_condition(j.at("condition").get<std::string>());
        t.learned_insights = j.value("learned_insights", std::size_t{0});
        for (const auto& turn : j.at("turns")) {
            auto phase = turn.at("phase").get<std::string>();
            t.turns.push_back({turn.at("turn_index").get<int>(),
                               phase == "evaluation" ? bench::Phase::evaluation : bench::Phase::learning,
                               turn.at("user_message").get<std::string>(),
                               turn.value("response", ""),
                               turn.value("composed_prompt", ""),
                               turn.value("failed", false),
                               turn.value("error", "")});
        }
    } catch (const json::exception& e) {
        throw ValidationError(std::string("malformed transcript: ") + e.what());
    }
    return t;
}

void save_jsonl(const fs::path& path, const std::vector<std::string>& lines) {
    std::string text;
    for (const auto& l : lines) text += l + "\n";
    write_file_atomic(path, text);
}

std::vector<std::string> load_jsonl(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw NotFoundError("file " + path.string());
    std::vector<std::string> lines;
    for (std::string line; std::getline(in, line);) {
        if (!trim(line).empty()) lines.push_back(line);
    }
    return lines;
}

void save_assessments(const fs::path& path, const std::vector<JudgeAssessment>& assessments) {
    std::vector<std::string> lines;
    for (const auto& a : assessments) lines.push_back(assessment_to_json(a));
    save_jsonl(path, lines);
}

std::vector<JudgeAssessment> load_assessments(const fs::path& path) {
    std::vector<JudgeAssessment> out;
    std::size_t line_no = 0;
    for (const auto& line : load_jsonl(path)) {
        ++line_no;
        try {
            out.push_back(assessment_from_json(line));
        } catch (const ValidationError& e) {
            throw DecodeError(path.string() + ":" + std::to_string(line_no), e.what());
        }
    }
    return out;
}

}  // namespace adapt::eval
