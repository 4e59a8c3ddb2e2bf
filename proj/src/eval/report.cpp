#include "adapt/eval/report.hpp"

#include "adapt/common/errors.hpp"
#include "adapt/eval/stats.hpp"

#include <map>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

namespace adapt::eval {

using nlohmann::json;

std::string to_string(SampleUnit unit) { return unit == SampleUnit::persona_mean ? "persona_mean" : "per_turn"; }

SampleUnit parse_sample_unit(const std::string& name) {
    if (name == "persona_mean" || name == "persona") return SampleUnit::persona_mean;
    if (name == "per_turn" || name == "turn") return SampleUnit::per_turn;
    throw ValidationError("unknown sample unit: " + name);
}

namespace {

// Scores grouped by persona, personas in first-seen order.
std::vector<std::vector<int>> by_persona(const std::vector<JudgeAssessment>& assessments) {
    std::map<std::string, std::size_t> index;
    std::vector<std::vector<int>> groups;
    for (const auto& a : assessments) {
        auto [it, inserted] = index.emplace(a.persona_id, groups.size());
        if (inserted) groups.emplace_back();
        groups[it->second].push_back(a.score);
    }
    return groups;
}

ConditionMetrics metrics(const std::vector<JudgeAssessment>& assessments, const ReportConfig& config,
                         std::size_t failed, const std::vector<double>& samples,
                         std::vector<std::string>& notes, const std::string& name) {
    ConditionMetrics m;
    m.n = samples.size();
    m.turns = assessments.size();
    m.failed_turns = failed;
    m.mean_score = mean(samples);
    try {
        m.trait_incorporation_rate = incorporation_rate(assessments);
    } catch (const UndefinedRateError&) {
        notes.push_back(name + ": trait incorporation is undefined (no relevant traits)");
    }
    std::size_t perfect = 0;
    std::size_t units = 0;
    if (config.perfect_unit == SampleUnit::per_turn) {
        for (const auto& a : assessments) perfect += a.score == 5 ? 1 : 0;
        units = assessments.size();
    } else {
        for (const auto& group : by_persona(assessments)) {
            perfect += std::all_of(group.begin(), group.end(), [](int s) { return s == 5; }) ? 1 : 0;
            ++units;
        }
    }
    m.perfect_score_fraction = static_cast<double>(perfect) / static_cast<double>(units);
    return m;
}

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> opt_from(const json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<double>();
}

json metrics_json(const ConditionMetrics& m) {
    return {{"n", m.n},
            {"turns", m.turns},
            {"failed_turns", m.failed_turns},
            {"mean_score", m.mean_score},
            {"trait_incorporation_rate", opt(m.trait_incorporation_rate)},
            {"perfect_score_fraction", m.perfect_score_fraction}};
}

ConditionMetrics metrics_from(const json& j) {
    ConditionMetrics m;
    m.n = j.at("n").get<std::size_t>();
    m.turns = j.at("turns").get<std::size_t>();
    m.failed_turns = j.at("failed_turns").get<std::size_t>();
    m.mean_score = j.at("mean_score").get<double>();
    m.trait_incorporation_rate = opt_from(j, "trait_incorporation_rate");
    m.perfect_score_fraction = j.at("perfect_score_fraction").get<double>();
    return m;
}

std::string percent(const std::optional<double>& v) {
    return v ? fmt::format("{:.1f}%", *v * 100.0) : std::string("n/a");
}

std::string percent_points(const std::optional<double>& v) {
    return v ? fmt::format("{:+.1f}pp", *v * 100.0) : std::string("n/a");
}

std::string number(const std::optional<double>& v, const char* spec) {
    return v ? fmt::format(fmt::runtime(spec), *v) : std::string("undefined");
}

}  // namespace

std::vector<double> score_samples(const std::vector<JudgeAssessment>& assessments, SampleUnit unit) {
    std::vector<double> out;
    if (unit == SampleUnit::per_turn) {
        for (const auto& a : assessments) out.push_back(a.score);
        return out;
    }
    for (const auto& group : by_persona(assessments)) {
        double sum = 0.0;
        for (int s : group) sum += s;
        out.push_back(sum / static_cast<double>(group.size()));
    }
    return out;
}

EvalReport build_report(const std::vector<JudgeAssessment>& baseline,
                        const std::vector<JudgeAssessment>& personalized, ReportConfig config,
                        std::size_t baseline_failed, std::size_t personalized_failed) {
    if (baseline.empty() || personalized.empty()) {
        throw PreconditionError("both conditions need at least one assessment");
    }
    EvalReport r;
    r.config = config;
    auto a = score_samples(personalized, config.unit);
    auto b = score_samples(baseline, config.unit);
    if (a.size() < 2 || b.size() < 2) {
        throw StatsError("each condition needs at least two " + to_string(config.unit) + " samples");
    }
    r.baseline = metrics(baseline, config, baseline_failed, b, r.notes, "baseline");
    r.personalized = metrics(personalized, config, personalized_failed, a, r.notes, "personalized");
    r.delta_score = r.personalized.mean_score - r.baseline.mean_score;
    if (r.baseline.trait_incorporation_rate && r.personalized.trait_incorporation_rate) {
        r.delta_incorporation = *r.personalized.trait_incorporation_rate - *r.baseline.trait_incorporation_rate;
    }
    r.delta_perfect = r.personalized.perfect_score_fraction - r.baseline.perfect_score_fraction;

    try {
        auto w = welch_t(a, b);
        r.t_statistic = w.t;
        r.degrees_of_freedom = w.df;
        r.p_two_sided = w.p_two_sided;
    } catch (const StatsError& e) {
        r.notes.push_back(std::string("Welch t-test undefined: ") + e.what());
    }
    try {
        r.cohens_d = cohens_d(a, b);
    } catch (const StatsError& e) {
        r.notes.push_back(std::string("Cohen's d undefined: ") + e.what());
    }
    return r;
}

std::string render_table(const EvalReport& r) {
    std::string out;
    out += fmt::format("{:<20}{:>12}{:>14}{:>12}\n", "Metric", "Baseline", "Personalized", "Delta");
    out += fmt::format("{:<20}{:>12.2f}{:>14.2f}{:>+12.2f}\n", "Judge Score (1-5)", r.baseline.mean_score,
                       r.personalized.mean_score, r.delta_score);
    out += fmt::format("{:<20}{:>12}{:>14}{:>12}\n", "Trait Incorp.", percent(r.baseline.trait_incorporation_rate),
                       percent(r.personalized.trait_incorporation_rate), percent_points(r.delta_incorporation));
    out += fmt::format("{:<20}{:>12}{:>14}{:>12}\n", "Perfect (5/5)", percent(r.baseline.perfect_score_fraction),
                       percent(r.personalized.perfect_score_fraction), percent_points(r.delta_perfect));
    out += fmt::format("{:<20}{:>12}{:>14}\n", "n (" + to_string(r.config.unit) + ")", r.baseline.n,
                       r.personalized.n);
    out += fmt::format("{:<20}{:>12}{:>14}\n", "failed turns", r.baseline.failed_turns,
                       r.personalized.failed_turns);
    out += fmt::format("Welch t = {}, df = {}, p = {}; Cohen's d = {}\n", number(r.t_statistic, "{:.4f}"),
                       number(r.degrees_of_freedom, "{:.2f}"), number(r.p_two_sided, "{:.3g}"),
                       number(r.cohens_d, "{:.3f}"));
    for (const auto& note : r.notes) out += "note: " + note + "\n";
    return out;
}

std::string report_to_json(const EvalReport& r) {
    json j{{"unit", to_string(r.config.unit)},
           {"perfect_unit", to_string(r.config.perfect_unit)},
           {"baseline", metrics_json(r.baseline)},
           {"personalized", metrics_json(r.personalized)},
           {"delta_score", r.delta_score},
           {"delta_incorporation", opt(r.delta_incorporation)},
           {"delta_perfect", r.delta_perfect},
           {"t_statistic", opt(r.t_statistic)},
           {"degrees_of_freedom", opt(r.degrees_of_freedom)},
           {"p_two_sided", opt(r.p_two_sided)},
           {"cohens_d", opt(r.cohens_d)},
           {"notes", r.notes}};
    return j.dump(2) + "\n";
}

EvalReport report_from_json(std::string_view json_text) {
    EvalReport r;
    try {
        auto j = json::parse(json_text);
        r.config.unit = parse_sample_unit(j.at("unit").get<std::string>());
        r.config.perfect_unit = parse_sample_unit(j.at("perfect_unit").get<std::string>());
        r.baseline = metrics_from(j.at("baseline"));
        r.personalized = metrics_from(j.at("personalized"));
        r.delta_score = j.at("delta_score").get<double>();
        r.delta_incorporation = opt_from(j, "delta_incorporation");
        r.delta_perfect = j.at("delta_perfect").get<double>();
        r.t_statistic = opt_from(j, "t_statistic");
        r.degrees_of_freedom = opt_from(j, "degrees_of_freedom");
        r.p_two_sided = opt_from(j, "p_two_sided");
        r.cohens_d = opt_from(j, "cohens_d");
        r.notes = j.value("notes", std::vector<std::string>{});
    } catch (const json::exception& e) {
        throw ValidationError(std::string("malformed report: ") + e.what());
    }
    return r;
}

}  // namespace adapt::eval
