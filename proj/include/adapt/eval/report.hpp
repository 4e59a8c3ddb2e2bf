#pragma once

#include "adapt/eval/judge.hpp"

#include <optional>
#include <string>
#include <vector>

namespace adapt::eval {

// What one observation in the significance tests is.
enum class SampleUnit { persona_mean, per_turn };
std::string to_string(SampleUnit unit);
SampleUnit parse_sample_unit(const std::string& name);

struct ReportConfig {
    SampleUnit unit = SampleUnit::persona_mean;
    // Unit for the perfect-score fraction: a turn scoring 5, or a persona whose
    // evaluation turns all scored 5.
    SampleUnit perfect_unit = SampleUnit::per_turn;
};

struct ConditionMetrics {
    std::size_t n = 0;  // sample units
    std::size_t turns = 0;
    std::size_t failed_turns = 0;
    double mean_score = 0.0;
    std::optional<double> trait_incorporation_rate;
    double perfect_score_fraction = 0.0;

    bool operator==(const ConditionMetrics&) const = default;
};

struct EvalReport {
    ReportConfig config;
    ConditionMetrics baseline;
    ConditionMetrics personalized;
    double delta_score = 0.0;
    std::optional<double> delta_incorporation;
    double delta_perfect = 0.0;
    // Empty when the statistic is undefined for this data (see notes).
    std::optional<double> t_statistic;
    std::optional<double> degrees_of_freedom;
    std::optional<double> p_two_sided;
    std::optional<double> cohens_d;
    std::vector<std::string> notes;
};

// Per-unit score samples for one condition, in persona order.
std::vector<double> score_samples(const std::vector<JudgeAssessment>& assessments, SampleUnit unit);

// Throws PreconditionError when either set is empty and StatsError when a
// condition has fewer than two sample units. Zero-variance data leaves t, p
// or d empty with a note rather than failing.
EvalReport build_report(const std::vector<JudgeAssessment>& baseline,
                        const std::vector<JudgeAssessment>& personalized, ReportConfig config = {},
                        std::size_t baseline_failed = 0, std::size_t personalized_failed = 0);

std::string render_table(const EvalReport& report);
std::string report_to_json(const EvalReport& report);
EvalReport report_from_json(std::string_view json_text);

}  // namespace adapt::eval
