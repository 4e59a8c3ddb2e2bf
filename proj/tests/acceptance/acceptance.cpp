// Acceptance run: one PASS/FAIL/SKIP line per criterion, non-zero exit on any FAIL.
// Usage: acceptance [name-substring]

#include "adapt/agent/orchestrator.hpp"
#include "adapt/bench/dataset.hpp"
#include "adapt/common/errors.hpp"
#include "adapt/eval/judge.hpp"
#include "adapt/eval/offline.hpp"
#include "adapt/eval/report.hpp"
#include "adapt/eval/runner.hpp"
#include "adapt/eval/stats.hpp"
#include "adapt/learning/engine.hpp"
#include "adapt/learning/extraction.hpp"
#include "adapt/learning/queue.hpp"
#include "adapt/learning/worker.hpp"
#include "adapt/memory/store.hpp"
#include "adapt/personalization/budget.hpp"
#include "adapt/personalization/engine.hpp"
#include "adapt/service/cli.hpp"
#include "support/fixtures.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/distributions/students_t.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

using namespace adapt;
using adapt::memory::InsightKind;
using adapt::memory::InsightRecord;
using adapt::memory::InsightStatus;
using adapt::testing::make_turn;
using adapt::testing::TempDir;

namespace {

enum class Verdict { pass, fail, skip };

struct Outcome {
    Verdict verdict = Verdict::fail;
    std::string detail;
};

Outcome fail(std::string detail) { return {Verdict::fail, std::move(detail)}; }
Outcome verdict(bool ok, std::string detail) { return {ok ? Verdict::pass : Verdict::fail, std::move(detail)}; }

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

llm::BackendConfig scripted_config(std::string fallback) {
    llm::BackendConfig c;
    c.backoff_ms = 1;
    c.max_retries = 0;
    c.scripted_default = std::move(fallback);
    return c;
}

std::string draft_json(const std::string& type, const std::string& content, double confidence) {
    return nlohmann::json::array({{{"type", type}, {"content", content}, {"confidence", confidence}}})
        .dump();
}

// Full request/learning stack over one data root.
struct Stack {
    explicit Stack(const std::filesystem::path& root, agent::OrchestratorConfig config = {})
        : store(root),
          gw(scripted_config("[]")),
          engine(store, gw, root),
          personalization(store),
          queue(root, learning::QueueConfig{3, 0, 0}),
          orchestrator(store, gw, personalization, engine, queue, config) {}

    memory::FileMemoryStore store;
    llm::Gateway gw;
    learning::LearningEngine engine;
    personalization::PersonalizationEngine personalization;
    learning::JobQueue queue;
    agent::Orchestrator orchestrator;
};

// Eight turns revealing five traits: three life facts and two presentation
// preferences.
struct FixtureTurn {
    std::string message;
    std::string draft;
};

const std::vector<FixtureTurn>& closed_loop_fixture() {
    static const std::vector<FixtureTurn> turns = {
        {"I'm a nurse working night shifts. What should I eat on a break?",
         draft_json("fact", "User is a nurse working night shifts", 0.95)},
        {"I'm lactose intolerant, which snacks are safe?", draft_json("fact", "User is lactose intolerant", 0.95)},
        {"Any tips for sleeping during the day?", "[]"},
        {"I live with two cats. Are any plants toxic to them?", draft_json("fact", "User has two cats", 0.9)},
        {"Please keep answers short, bullet points work best for me.",
         draft_json("preference", "User prefers short bullet point answers", 0.95)},
        {"When you explain something, walk me through it step by step.",
         draft_json("preference", "User prefers step-by-step explanations", 0.9)},
        {"What about hydration during a long shift?",
         draft_json("fact", "User is a nurse working night shifts", 0.8)},
        {"Thanks!", "[]"},
    };
    return turns;
}

void script_fixture(llm::Gateway& gw) {
    for (const auto& t : closed_loop_fixture()) {
        gw.register_script(llm::Matcher::substring("User message: " + t.message), t.draft, llm::Role::learner);
    }
}

// ---------------------------------------------------------------------------

Outcome closed_loop() {
    auto start = std::chrono::steady_clock::now();
    TempDir dir;
    Stack s(dir.path());
    script_fixture(s.gw);
    for (const auto& t : closed_loop_fixture()) s.orchestrator.handle_query("nina", "learn", t.message);
    if (!s.orchestrator.end_session("nina", "learn")) return fail("end_session returned false");
    learning::Worker(s.queue, s.engine).drain();

    auto active = s.store.query_insights("nina", {});
    auto turn9 = s.orchestrator.handle_query("nina", "next", "Can you suggest a dinner I could cook tonight?");
    std::size_t preferences = 0;
    std::vector<std::string> missing;
    for (const auto& r : active) {
        if (r.kind != InsightKind::preference) continue;
        ++preferences;
        if (turn9.trace.composed_prompt.find(r.content) == std::string::npos) missing.push_back(r.content);
    }
    double elapsed = seconds_since(start);
    auto detail = fmt::format("{} active insights, {} preferences, {} missing from turn-9 prompt, {:.2f}s",
                              active.size(), preferences, missing.size(), elapsed);
    return verdict(active.size() >= 5 && preferences == 2 && missing.empty() && elapsed < 5.0, detail);
}

Outcome differentiation() {
    TempDir dir;
    Stack s(dir.path());
    s.gw.register_script(llm::Matcher::substring("Lead with code examples"), "CODE-FIRST ANSWER",
                         llm::Role::responder);
    s.gw.register_script(llm::Matcher::substring("Start with analogies"), "ANALOGY-FIRST ANSWER",
                         llm::Role::responder);
    testing::seed_sarah(s.store);
    testing::seed_marcus(s.store);

    auto prefs = [&](const std::string& user) {
        memory::InsightFilter f;
        f.kinds = std::set<InsightKind>{InsightKind::preference};
        std::set<std::string> out;
        for (const auto& r : s.store.query_insights(user, f)) out.insert(r.content);
        return out;
    };
    auto sp = prefs("sarah");
    auto mp = prefs("marcus");
    bool disjoint = std::none_of(sp.begin(), sp.end(), [&](const std::string& c) { return mp.count(c) > 0; });

    const std::string query = "What is a transformer in AI?";
    auto a = s.orchestrator.handle_query("sarah", "q", query);
    auto b = s.orchestrator.handle_query("marcus", "q", query);
    auto again = s.orchestrator.handle_query("sarah", "q2", query);
    bool prompts_differ = a.trace.composed_prompt != b.trace.composed_prompt;
    bool responses_differ = a.response != b.response;
    bool stable = again.trace.composed_prompt == a.trace.composed_prompt && again.response == a.response;
    return verdict(disjoint && prompts_differ && responses_differ && stable,
                   fmt::format("disjoint={} prompts_differ={} responses_differ={} repeatable={}", disjoint,
                               prompts_differ, responses_differ, stable));
}

Outcome memory_properties() {
    constexpr int kCases = 1000;
    std::mt19937_64 rng(1234);
    TempDir dir;
    int round_trip = 0, isolation = 0, ordering = 0, durability = 0;

    struct Expected {
        memory::UserProfile profile;
        std::vector<memory::TurnRecord> turns;
        std::vector<InsightRecord> insights;
    };
    std::map<std::string, Expected> expected;

    {
        memory::FileMemoryStore store(dir.path());

        // Round trip: what goes in comes back unchanged.
        for (int i = 0; i < kCases; ++i) {
            std::string user = fmt::format("rt-{:04}", i);
            auto& e = expected[user];
            e.profile = store.upsert_profile(testing::random_profile(rng, user));
            e.turns.push_back(testing::random_turn(rng, "s", 1));
            store.append_turn(user, "s", e.turns.back());
            auto ins = testing::random_insight(rng, user, "s", 1);
            ins.insight_id = store.append_insight(ins);
            e.insights.push_back(ins);
            bool ok = store.get_profile(user) == e.profile && store.load_session(user, "s") == e.turns &&
                      store.get_insight(user, ins.insight_id) == ins;
            round_trip += ok;
        }

        // Isolation: a write for one user never shows up for, or changes, another.
        memory::InsightFilter every_status;
        every_status.statuses = {InsightStatus::active, InsightStatus::superseded, InsightStatus::deleted};
        std::uniform_int_distribution<int> who(0, kCases - 1);
        for (int i = 0; i < kCases; ++i) {
            std::string a = fmt::format("rt-{:04}", who(rng));
            std::string b = fmt::format("rt-{:04}", who(rng));
            if (a == b) b = a == "rt-0000" ? "rt-0001" : "rt-0000";
            auto before_b = store.query_insights(b, every_status);
            auto ins = testing::random_insight(rng, a, "s", 1);
            ins.insight_id = store.append_insight(ins);
            expected[a].insights.push_back(ins);
            auto after_b = store.query_insights(b, every_status);
            bool ok = before_b == after_b && !store.get_insight(b, ins.insight_id).has_value() &&
                      store.get_insight(a, ins.insight_id).has_value() &&
                      store.get_profile(b) == expected[b].profile;
            isolation += ok;
        }

        // Ordering: turns in append order, gaps rejected; insights in rank order.
        std::uniform_int_distribution<int> len(1, 12);
        for (int i = 0; i < kCases; ++i) {
            std::string user = fmt::format("ord-{:04}", i);
            std::vector<memory::TurnRecord> turns;
            for (int t = 1, n = len(rng); t <= n; ++t) {
                turns.push_back(testing::random_turn(rng, "s", t));
                store.append_turn(user, "s", turns.back());
            }
            bool rejected = false;
            try {
                store.append_turn(user, "s", testing::random_turn(rng, "s", static_cast<int>(turns.size()) + 2));
            } catch (const SequenceError&) {
                rejected = true;
            }
            std::vector<InsightRecord> batch;
            for (int k = 0, n = len(rng); k < n; ++k) batch.push_back(testing::random_insight(rng, user, "s", 1));
            auto ids = store.append_insights(batch);
            for (std::size_t k = 0; k < ids.size(); ++k) batch[k].insight_id = ids[k];
            std::sort(batch.begin(), batch.end(), [](const InsightRecord& x, const InsightRecord& y) {
                if (x.confidence != y.confidence) return x.confidence > y.confidence;
                if (x.created_at != y.created_at) return x.created_at > y.created_at;
                return x.insight_id < y.insight_id;
            });
            std::vector<InsightRecord> active_expected;
            for (const auto& r : batch) {
                if (r.status == InsightStatus::active) active_expected.push_back(r);
            }
            bool ok = rejected && store.load_session(user, "s") == turns &&
                      store.query_insights(user, {}) == active_expected;
            ordering += ok;
            expected[user] = {store.get_profile(user).value_or(memory::UserProfile{}), turns, {}};
            expected[user].insights = store.query_insights(user, {});
        }
    }

    // Durability: a fresh store over the same root sees everything written.
    memory::FileMemoryStore reopened(dir.path());
    for (const auto& [user, e] : expected) {
        bool ok = reopened.load_session(user, "s") == e.turns;
        if (user.starts_with("rt-")) {
            ok = ok && reopened.get_profile(user) == e.profile;
            for (const auto& r : e.insights) ok = ok && reopened.get_insight(user, r.insight_id) == r;
        } else {
            ok = ok && reopened.query_insights(user, {}) == e.insights;
        }
        durability += ok;
    }
    int users = static_cast<int>(expected.size());
    bool ok = round_trip == kCases && isolation == kCases && ordering == kCases && durability == users;
    return verdict(ok, fmt::format("round-trip {}/{}, isolation {}/{}, ordering {}/{}, durability {}/{}",
                                   round_trip, kCases, isolation, kCases, ordering, kCases, durability,
                                   users));
}

Outcome budget_invariants() {
    const std::vector<std::string> words = {"code",    "python", "depth",  "meeting", "analogy", "coffee",
                                            "graph",   "deploy", "concise", "jargon", "runner",  "teacher",
                                            "cats",    "garden", "budget", "travel",  "bullet",  "vegan"};
    const llm::TokenCounter counter = llm::heuristic_token_count;
    std::mt19937_64 rng(99);
    std::uniform_int_distribution<std::size_t> pick(0, words.size() - 1);
    std::uniform_int_distribution<int> count(0, 60);
    std::uniform_int_distribution<int> len(1, 40);
    std::uniform_int_distribution<int> turns(0, 30);
    std::uniform_int_distribution<int> kind(0, 2);
    std::uniform_int_distribution<int> conf(1, 100);
    auto phrase = [&](int n) {
        std::string s;
        for (int w = 0; w < n; ++w) s += (w ? " " : "") + words[pick(rng)];
        return s;
    };

    TempDir dir;
    memory::FileMemoryStore store(dir.path());
    personalization::PersonalizationEngine engine(store);
    std::size_t sets = 0, violations = 0, share_errors = 0;
    for (std::size_t total : {std::size_t{1000}, std::size_t{8000}, std::size_t{128000}}) {
        auto allocation = personalization::allocate_budget(total);
        double share = 0.15 * static_cast<double>(total);
        if (std::fabs(static_cast<double>(allocation.preferences) - share) > 1.0 ||
            allocation.preferences != total * 15 / 100) {
            ++share_errors;
        }
        for (int i = 0; i < 500; ++i, ++sets) {
            std::string user = fmt::format("b{}-{}", total, i);
            memory::UserProfile p;
            p.user_id = user;
            p.static_attrs = {{"role", phrase(len(rng) / 4 + 1)}, {"expertise_level", "expert"}};
            store.upsert_profile(p);
            store.append_turn(user, "s", make_turn("s", 1, "hello"));
            std::vector<InsightRecord> batch;
            for (int k = 0, n = count(rng); k < n; ++k) {
                InsightRecord r;
                r.user_id = user;
                r.kind = static_cast<InsightKind>(kind(rng));
                r.content = phrase(len(rng));
                r.confidence = conf(rng) / 100.0;
                r.provenance = {"s", 1};
                batch.push_back(r);
            }
            if (!batch.empty()) store.append_insights(batch);
            personalization::SessionView view;
            for (int t = 1, n = turns(rng); t <= n; ++t) {
                view.turns.push_back(make_turn("s", t, phrase(len(rng)), phrase(len(rng) * 3)));
            }
            auto bundle = engine.select_context(user, phrase(3), allocation, counter, &view);

            std::size_t pref = bundle.profile_block.empty() ? 0 : counter(bundle.profile_block);
            for (const auto* list : {&bundle.facts, &bundle.preferences, &bundle.behaviors}) {
                for (const auto& s : *list) pref += counter("- " + s.insight.content);
            }
            std::size_t hist = bundle.session_summary.empty() ? 0 : counter(bundle.session_summary);
            for (const auto& t : bundle.recent_turns) {
                hist += counter("User: " + t.user_message + "\nAssistant: " + t.assistant_message);
            }
            bool ok = pref <= allocation.preferences && hist <= allocation.history;
            for (const auto& [slot, usage] : bundle.budget_report) ok = ok && usage.used <= usage.allowed;
            violations += !ok;
        }
    }
    return verdict(violations == 0 && share_errors == 0,
                   fmt::format("{} insight sets, {} slot overruns, preferences share off in {} of 3 totals",
                               sets, violations, share_errors));
}

Outcome stats_oracle() {
    using big = boost::multiprecision::cpp_bin_float_50;
    auto oracle = [](const std::vector<double>& a, const std::vector<double>& b) {
        auto moments = [](const std::vector<double>& xs) {
            big n = xs.size();
            big sum = 0;
            for (double x : xs) sum += big(x);
            big m = sum / n;
            big ss = 0;
            for (double x : xs) ss += (big(x) - m) * (big(x) - m);
            return std::tuple<big, big, big>{n, m, ss / (n - 1)};
        };
        auto [na, ma, va] = moments(a);
        auto [nb, mb, vb] = moments(b);
        big sa = va / na;
        big sb = vb / nb;
        big t = (ma - mb) / sqrt(sa + sb);
        big df = (sa + sb) * (sa + sb) / (sa * sa / (na - 1) + sb * sb / (nb - 1));
        big d = (ma - mb) / sqrt(((na - 1) * va + (nb - 1) * vb) / (na + nb - 2));
        boost::math::students_t_distribution<long double> dist(static_cast<long double>(df));
        long double p = 2 * boost::math::cdf(boost::math::complement(dist, fabsl(static_cast<long double>(t))));
        return std::array<double, 4>{static_cast<double>(t), static_cast<double>(df), static_cast<double>(d),
                                     static_cast<double>(p)};
    };

    std::mt19937_64 rng(7001);
    std::uniform_int_distribution<int> size(2, 60);
    std::uniform_real_distribution<double> loc(-10.0, 10.0);
    std::uniform_real_distribution<double> scale(0.01, 5.0);
    std::array<double, 4> worst{};
    for (int i = 0; i < 1000; ++i) {
        auto draw = [&] {
            std::normal_distribution<double> dist(loc(rng), scale(rng));
            std::vector<double> xs(static_cast<std::size_t>(size(rng)));
            for (auto& x : xs) x = dist(rng);
            return xs;
        };
        auto a = draw();
        auto b = draw();
        auto w = eval::welch_t(a, b);
        auto o = oracle(a, b);
        std::array<double, 4> got{w.t, w.df, eval::cohens_d(a, b), w.p_two_sided};
        for (int k = 0; k < 4; ++k) worst[k] = std::max(worst[k], std::fabs(got[k] - o[k]));
    }
    auto w = eval::welch_t({1, 2, 3}, {2, 3, 4});
    double d = eval::cohens_d({1, 2, 3}, {2, 3, 4});
    bool example = std::fabs(w.t + 1.224745) < 1e-6 && std::fabs(w.df - 4.0) < 1e-9 && std::fabs(d + 1.0) < 1e-9;
    bool ok = worst[0] <= 1e-9 && worst[1] <= 1e-9 && worst[2] <= 1e-9 && worst[3] <= 1e-6 && example;
    return verdict(ok, fmt::format("max |dt|={:.1e} |ddf|={:.1e} |dd|={:.1e} |dp|={:.1e}; "
                                   "[1,2,3] vs [2,3,4]: t={:.6f} df={:.6f} d={:.6f}",
                                   worst[0], worst[1], worst[2], worst[3], w.t, w.df, d));
}

Outcome bench_determinism() {
    TempDir dir;
    auto generate = [&](const std::string& name) {
        auto path = dir / name;
        std::istringstream in;
        std::ostringstream out, err;
        int code = service::run_command({"--data-root", dir.path().string(), "bench", "generate", "--seed", "7",
                                         "--n", "150", "--out", path.string()},
                                        in, out, err);
        if (code != service::kExitOk) throw std::runtime_error("bench generate failed: " + err.str());
        std::ifstream f(path, std::ios::binary);
        return std::string(std::istreambuf_iterator<char>(f), {});
    };
    auto first = generate("first.json");
    auto second = generate("second.json");
    auto dataset = bench::parse_dataset(first);

    std::set<std::string> pool_ids;
    for (const auto& t : dataset.pool.traits) pool_ids.insert(t.trait_id);
    std::set<std::vector<std::string>> sets;
    bool shapes = dataset.personas.size() == 150 && dataset.trajectories.size() == 150;
    for (const auto& p : dataset.personas) {
        std::set<std::string> distinct(p.traits.begin(), p.traits.end());
        shapes = shapes && p.traits.size() == 5 && distinct.size() == 5 &&
                 std::all_of(p.traits.begin(), p.traits.end(), [&](const std::string& id) { return pool_ids.count(id); });
        sets.insert(std::vector<std::string>(distinct.begin(), distinct.end()));
    }
    bool identical = !first.empty() && first == second;
    return verdict(identical && shapes && sets.size() == 150 && pool_ids.size() == 20,
                   fmt::format("byte-identical={} ({} bytes), {} personas, {} unique trait sets, pool of {}",
                               identical, first.size(), dataset.personas.size(), sets.size(), pool_ids.size()));
}

Outcome request_latency() {
    const std::vector<std::string> words = {
        "python",  "code",   "examples", "vegetarian", "running", "marathon", "garden",  "budget",  "travel",
        "kids",    "remote", "office",   "coffee",     "jazz",    "cats",     "dogs",    "cooking", "hiking",
        "finance", "skiing", "music",    "sleep",      "nurse",   "teacher",  "chess",   "baking",  "cycling",
        "reading", "poetry", "history",  "concise",    "bullet",  "detailed", "analogy", "spanish", "photos"};
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<std::size_t> pick(0, words.size() - 1);
    std::uniform_int_distribution<int> len(3, 10);
    std::uniform_int_distribution<int> kind(0, 2);
    std::uniform_int_distribution<int> conf(30, 100);
    auto phrase = [&](int n) {
        std::string s;
        for (int w = 0; w < n; ++w) s += (w ? " " : "") + words[pick(rng)];
        return s;
    };

    TempDir dir;
    Stack s(dir.path());
    s.gw.register_script(llm::Matcher::substring(""), "ok", llm::Role::responder);
    s.store.append_turn("heavy", "seed", make_turn("seed", 1, "hello"));
    std::vector<InsightRecord> batch;
    for (int i = 0; i < 10000; ++i) {
        InsightRecord r;
        r.user_id = "heavy";
        r.kind = static_cast<InsightKind>(kind(rng));
        r.content = "User " + phrase(len(rng));
        r.confidence = conf(rng) / 100.0;
        r.provenance = {"seed", 1};
        r.created_at = 1'700'000'000'000 + i;
        batch.push_back(r);
    }
    s.store.append_insights(batch);

    std::vector<double> samples;
    for (int i = 0; i < 200; ++i) {
        auto r = s.orchestrator.handle_query("heavy", fmt::format("s{}", i / 10),
                                             "Any advice on " + phrase(4) + "?");
        samples.push_back(r.trace.retrieval_ms + r.trace.assembly_ms);
    }
    std::sort(samples.begin(), samples.end());
    double p50 = samples[samples.size() / 2];
    double p95 = samples[static_cast<std::size_t>(std::ceil(0.95 * samples.size())) - 1];
    return verdict(p95 <= 70.0, fmt::format("10000 insights, 200 requests: p50 {:.2f} ms, p95 {:.2f} ms, max {:.2f} ms",
                                            p50, p95, samples.back()));
}

Outcome idempotence_and_robustness() {
    std::vector<std::string> problems;

    // Processing the same session twice adds nothing.
    {
        TempDir dir;
        Stack s(dir.path());
        script_fixture(s.gw);
        int i = 1;
        for (const auto& t : closed_loop_fixture()) s.store.append_turn("u", "s1", make_turn("s1", i++, t.message));
        s.engine.process_session("u", "s1");
        auto first = s.store.query_insights("u", {});
        s.engine.process_session("u", "s1");
        auto second = s.store.query_insights("u", {});
        std::set<std::string> contents;
        for (const auto& r : second) contents.insert(r.content);
        if (second.size() != first.size() || contents.size() != second.size()) {
            problems.push_back(fmt::format("double processing: {} then {} active", first.size(), second.size()));
        }
    }

    const std::vector<std::string> malformed = {
        "",
        "   ",
        "I could not find anything to learn here.",
        "{",
        "[",
        "[{\"type\": \"fact\", \"content\": \"User",
        "```json\n[{\"type\": \"fact\"\n```",
        "null",
        "42",
        "\"a string\"",
        "true",
        "<html><body>502 Bad Gateway</body></html>",
        "{\"insights\": ",
        "[}",
        "]",
        "[[[[",
        "\xff\xfe\xfd",
        "{'type': 'fact', 'content': 'single quotes'}",
        "Sure! Here you go: {type: fact}",
        "score: five",
    };

    // Learner: every malformed reply ends in a typed extraction error.
    int learner_typed = 0;
    for (std::size_t i = 0; i < malformed.size(); ++i) {
        llm::Gateway gw(scripted_config(malformed[i]));
        try {
            learning::extract_turn_insights(make_turn("s", 1, "I'm a teacher"), gw);
        } catch (const ExtractionParseError&) {
            ++learner_typed;
        } catch (const std::exception& e) {
            problems.push_back(fmt::format("learner reply #{}: {}", i, e.what()));
        }
    }

    // Judge: typed parse errors, and out-of-range scores rejected.
    std::vector<std::string> judge_replies(malformed.begin(), malformed.end());
    judge_replies[0] = R"({"score": 9, "trait_labels": {"vegetarian": "neutral"}, "rationale": "x"})";
    judge_replies[1] = R"({"score": 0, "trait_labels": {"vegetarian": "neutral"}, "rationale": "x"})";
    judge_replies[2] = R"({"score": 4.5, "trait_labels": {"vegetarian": "neutral"}, "rationale": "x"})";
    judge_replies[3] = R"({"score": 4, "trait_labels": {}, "rationale": "x"})";
    judge_replies[4] = R"({"score": 4, "trait_labels": {"vegetarian": "loved"}, "rationale": "x"})";
    auto pool = bench::build_trait_pool();
    std::vector<bench::Trait> traits = {pool.at("vegetarian")};
    int judge_typed = 0;
    for (std::size_t i = 0; i < judge_replies.size(); ++i) {
        llm::Gateway gw(scripted_config(judge_replies[i]));
        try {
            eval::judge_turn("p", 9, eval::Condition::baseline, traits, "q", "r", gw);
            problems.push_back(fmt::format("judge accepted reply #{}", i));
        } catch (const JudgeParseError&) {
            ++judge_typed;
        } catch (const ValidationError&) {
            ++judge_typed;
        } catch (const std::exception& e) {
            problems.push_back(fmt::format("judge reply #{}: {}", i, e.what()));
        }
    }

    // A job that keeps failing is dead-lettered after three attempts.
    std::size_t dead_attempts = 0;
    {
        TempDir dir;
        Stack s(dir.path());
        s.gw.scripted().set_default("garbage");
        s.store.append_turn("u", "bad", make_turn("bad", 1, "unparseable"));
        learning::LearningJob job;
        job.user_id = "u";
        job.session_id = "bad";
        s.queue.enqueue(job);
        learning::Worker(s.queue, s.engine).drain();
        auto dead = s.queue.dead();
        if (dead.size() == 1) dead_attempts = static_cast<std::size_t>(dead[0].attempts);
        if (dead.size() != 1 || dead_attempts != 3 || !s.queue.pending().empty()) {
            problems.push_back(fmt::format("dead letters: {} (attempts {})", dead.size(), dead_attempts));
        }
    }

    auto detail = fmt::format("learner {}/{} typed, judge {}/{} typed, dead-lettered after {} attempts",
                              learner_typed, malformed.size(), judge_typed, judge_replies.size(), dead_attempts);
    for (const auto& p : problems) detail += "; " + p;
    return verdict(problems.empty() && learner_typed == 20 && judge_typed == 20, detail);
}

// Needs a real model. ADAPT_LIVE_BACKEND names a backend config JSON file
// (kind http_chat, endpoint, auth_env, models).
Outcome live_directional() {
    const char* path = std::getenv("ADAPT_LIVE_BACKEND");
    if (path == nullptr || *path == '\0') return {Verdict::skip, "ADAPT_LIVE_BACKEND not set"};
    std::ifstream f(path);
    if (!f) return fail(fmt::format("cannot read {}", path));
    auto config = nlohmann::json::parse(f).get<llm::BackendConfig>();
    llm::Gateway gw(config);

    TempDir dir;
    auto pool = bench::build_trait_pool();
    auto dataset = bench::generate_dataset(7, 10, 5, pool, gw, 2);
    eval::RunConfig run;
    run.work_root = dir.path();
    run.parallelism = 2;
    auto judge = [&](eval::Condition c) {
        auto transcripts = eval::run_condition(dataset, c, gw, run);
        return eval::judge_transcripts(dataset, transcripts, gw, 2);
    };
    auto baseline = judge(eval::Condition::baseline);
    auto personalized = judge(eval::Condition::personalized);
    auto report = eval::build_report(baseline.assessments, personalized.assessments, {},
                                     baseline.failed_turns, personalized.failed_turns);
    return verdict(report.personalized.mean_score > report.baseline.mean_score,
                   fmt::format("persona-mean judge score: personalized {:.3f} vs baseline {:.3f}",
                               report.personalized.mean_score, report.baseline.mean_score));
}

}  // namespace

int main(int argc, char** argv) {
    spdlog::set_level(spdlog::level::off);
    std::string only = argc > 1 ? argv[1] : "";

    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"closed-loop", closed_loop},
        {"differentiation", differentiation},
        {"memory-properties", memory_properties},
        {"budget-invariants", budget_invariants},
        {"statistics-oracle", stats_oracle},
        {"benchmark-determinism", bench_determinism},
        {"request-latency", request_latency},
        {"idempotence-robustness", idempotence_and_robustness},
        {"live-directional", live_directional},
    };

    int failures = 0;
    for (const auto& [name, run] : criteria) {
        if (!only.empty() && name.find(only) == std::string::npos) continue;
        auto start = std::chrono::steady_clock::now();
        Outcome outcome;
        try {
            outcome = run();
        } catch (const std::exception& e) {
            outcome = fail(std::string("exception: ") + e.what());
        }
        const char* label = outcome.verdict == Verdict::pass ? "PASS" : outcome.verdict == Verdict::skip ? "SKIP" : "FAIL";
        failures += outcome.verdict == Verdict::fail;
        std::cout << fmt::format("{} {:<24} {} [{:.2f}s]", label, name, outcome.detail, seconds_since(start))
                  << std::endl;
    }
    return failures == 0 ? 0 : 1;
}
