#pragma once

#include "adapt/agent/orchestrator.hpp"
#include "adapt/bench/dataset.hpp"
#include "adapt/eval/judge.hpp"
#include "adapt/llm/gateway.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace adapt::eval {

struct TranscriptTurn {
    int turn_index = 0;
    bench::Phase phase = bench::Phase::learning;
    std::string user_message;
    std::string response;
    std::string composed_prompt;
    bool failed = false;
    std::string error;

    bool operator==(const TranscriptTurn&) const = default;
};

struct Transcript {
    std::string persona_id;
    Condition condition = Condition::baseline;
    std::vector<TranscriptTurn> turns;
    // Insights stored for the persona when the evaluation phase began.
    std::size_t learned_insights = 0;

    bool operator==(const Transcript&) const = default;
};

struct RunConfig {
    // Parent of the per-persona data roots used by the personalized arm.
    std::filesystem::path work_root;
    agent::OrchestratorConfig orchestrator;
    std::size_t parallelism = 4;
};

// Answers every trajectory under one condition. Baseline: each turn is a
// single stateless call with the unpersonalized system prompt. Personalized:
// a fresh data root per persona, turns 1-8 in one session, end of session,
// a synchronous queue drain, then turns 9-10 in a new session so only learned
// memory can carry the traits forward. Gateway errors mark the turn failed.
std::vector<Transcript> run_condition(const bench::Dataset& dataset, Condition condition,
                                      const llm::Gateway& gateway, const RunConfig& config);

struct JudgeOutcome {
    std::vector<JudgeAssessment> assessments;
    // Evaluation turns that could not be scored (failed response or judge error).
    std::size_t failed_turns = 0;
};

// Judges the evaluation turns of every transcript, bounded parallelism,
// assessments ordered by (persona order, turn).
JudgeOutcome judge_transcripts(const bench::Dataset& dataset, const std::vector<Transcript>& transcripts,
                               const llm::Gateway& gateway, std::size_t parallelism = 4);

std::string transcript_to_json(const Transcript& transcript);
Transcript transcript_from_json(std::string_view json_text);

// One JSON object per line.
void save_jsonl(const std::filesystem::path& path, const std::vector<std::string>& lines);
std::vector<std::string> load_jsonl(const std::filesystem::path& path);

void save_assessments(const std::filesystem::path& path, const std::vector<JudgeAssessment>& assessments);
std::vector<JudgeAssessment> load_assessments(const std::filesystem::path& path);

}  // namespace adapt::eval
