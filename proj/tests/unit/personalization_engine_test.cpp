#include "adapt/personalization/budget.hpp"
#include "adapt/personalization/engine.hpp"
#include "adapt/personalization/relevance.hpp"

#include "adapt/common/errors.hpp"
#include "adapt/common/util.hpp"
#include "support/fixtures.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

using namespace adapt;
using namespace adapt::personalization;
using adapt::memory::InsightKind;
using adapt::memory::InsightRecord;
using adapt::memory::InsightSource;
using adapt::testing::make_turn;
using adapt::testing::TempDir;

namespace {

const llm::TokenCounter kCounter = llm::heuristic_token_count;

InsightRecord insight(std::string content, InsightSource source = InsightSource::implicit_signal,
                      InsightKind kind = InsightKind::preference, double confidence = 0.9) {
    InsightRecord r;
    r.insight_id = random_id();
    r.user_id = "u";
    r.kind = kind;
    r.content = std::move(content);
    r.confidence = confidence;
    r.source = source;
    r.provenance = {"s", 1};
    return r;
}

bool contains(const std::vector<ScoredInsight>& items, std::string_view needle) {
    return std::any_of(items.begin(), items.end(), [&](const ScoredInsight& s) {
        return s.insight.content.find(needle) != std::string::npos;
    });
}

void check_budget(const ContextBundle& bundle) {
    for (const auto& [slot, usage] : bundle.budget_report) {
        CHECK_MESSAGE(usage.used <= usage.allowed, slot);
    }
    std::size_t pref = bundle.profile_block.empty() ? 0 : kCounter(bundle.profile_block);
    for (const auto* list : {&bundle.facts, &bundle.preferences, &bundle.behaviors}) {
        for (const auto& s : *list) pref += insight_cost(s.insight, kCounter);
    }
    CHECK(pref == bundle.budget_report.at("preferences").used);
    std::size_t hist = bundle.session_summary.empty() ? 0 : kCounter(bundle.session_summary);
    for (const auto& t : bundle.recent_turns) hist += turn_cost(t, kCounter);
    CHECK(hist == bundle.budget_report.at("history").used);
}

}  // namespace

TEST_CASE("allocate_budget") {
    auto a = allocate_budget(8000);
    CHECK(a.system == 800);
    CHECK(a.history == 1600);
    CHECK(a.tools == 800);
    CHECK(a.preferences == 1200);
    CHECK(a.query == 400);
    CHECK(a.free == 3200);
    CHECK(allocate_budget(1000).preferences == 150);
    CHECK_THROWS_AS(allocate_budget(99), BudgetTooSmallError);
    CHECK_NOTHROW(allocate_budget(100));

    BudgetFractions bad;
    bad.free = 0.5;
    CHECK_THROWS_AS(allocate_budget(1000, bad), ValidationError);

    // Oracle: integer percentages.
    const std::array<std::size_t, 6> percent = {10, 20, 10, 15, 5, 40};
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<std::size_t> total(100, 2'000'000);
    for (int i = 0; i < 2000; ++i) {
        auto n = total(rng);
        auto b = allocate_budget(n);
        std::array<std::size_t, 6> got = {b.system, b.history, b.tools, b.preferences, b.query, b.free};
        std::size_t sum = 0;
        for (std::size_t k = 0; k < 6; ++k) {
            CHECK(got[k] == n * percent[k] / 100);
            sum += got[k];
        }
        CHECK(sum <= n);
    }
}

TEST_CASE("score_relevance") {
    CHECK(score_relevance("transformer architecture",
                          insight("prefers code examples for architecture questions")) > 0.0);
    CHECK(score_relevance("transformer architecture", insight("likes hiking")) == 0.0);
    auto imp = score_relevance("code", insight("prefers code", InsightSource::implicit_signal));
    auto exp = score_relevance("code", insight("prefers code", InsightSource::explicit_signal));
    CHECK(exp >= imp);
    CHECK(score_relevance("unrelated", insight("prefers code", InsightSource::explicit_signal)) ==
          doctest::Approx(0.2));
    CHECK(score_relevance("code examples", insight("prefers code examples")) == doctest::Approx(1.0));

    // IDF oracle on a three-document corpus; query terms: "code", "python".
    std::vector<InsightRecord> corpus = {insight("code in python"), insight("code reviews"),
                                         insight("hiking trips")};
    auto scores = LexicalScorer().score("code python", corpus);
    const double idf_code = 1.0 + std::log(4.0 / 3.0);
    const double idf_python = 1.0 + std::log(4.0 / 2.0);
    CHECK(scores[0] == doctest::Approx(1.0));
    CHECK(scores[1] == doctest::Approx(idf_code / (idf_code + idf_python)));
    CHECK(scores[2] == 0.0);
}

TEST_CASE("property: batch scorer agrees with the per-document idf table") {
    std::mt19937_64 rng(17);
    const std::vector<std::string> words = {"code", "codes", "python", "the", "hobbies", "hobby", "run",
                                            "runs", "cats", "user", "depth", "class", "glass"};
    std::uniform_int_distribution<std::size_t> pick(0, words.size() - 1);
    std::uniform_int_distribution<int> len(0, 6);
    auto phrase = [&] {
        std::string s;
        for (int i = 0, n = len(rng); i < n; ++i) s += words[pick(rng)] + " ";
        return s;
    };
    for (int round = 0; round < 200; ++round) {
        std::vector<InsightRecord> corpus;
        for (int i = 0, n = len(rng) * 3; i < n; ++i) {
            corpus.push_back(insight(phrase(), i % 2 ? InsightSource::explicit_signal : InsightSource::implicit_signal));
        }
        auto query = phrase();
        auto scores = LexicalScorer().score(query, corpus);
        IdfTable table(corpus);
        REQUIRE(scores.size() == corpus.size());
        for (std::size_t i = 0; i < corpus.size(); ++i) CHECK(scores[i] == table.relevance(query, corpus[i]));
    }
}

TEST_CASE("select_context on the Sarah fixture") {
    TempDir dir;
    memory::FileMemoryStore store(dir.path());
    testing::seed_sarah(store);
    PersonalizationEngine engine(store);

    auto bundle = engine.select_context("sarah", "What is a transformer in AI?", allocate_budget(8000), kCounter);
    CHECK(contains(bundle.preferences, "prefers code examples over prose"));
    CHECK_FALSE(contains(bundle.preferences, "meetings"));
    CHECK(contains(bundle.facts, "senior ML engineer"));
    CHECK(contains(bundle.behaviors, "runnable code"));
    CHECK(bundle.profile_block.find("- Role: Senior ML engineer") != std::string::npos);
    CHECK(bundle.session_summary.find("User asked about: transformer architecture") != std::string::npos);
    for (const auto& id : bundle.selected_ids()) {
        CHECK(store.get_insight("sarah", id)->status == memory::InsightStatus::active);
    }
    check_budget(bundle);

    auto prompt = compose_system_prompt(bundle);
    CHECK(prompt.find("Lead with code examples") != std::string::npos);
    CHECK(prompt.find("Avoid introductory explanations") != std::string::npos);
    CHECK(prompt.find("Adapt your response style based on user preferences.") != std::string::npos);
    CHECK(prompt.find("meetings") == std::string::npos);
}

TEST_CASE("compose on the Marcus fixture") {
    TempDir dir;
    memory::FileMemoryStore store(dir.path());
    testing::seed_marcus(store);
    PersonalizationEngine engine(store);
    auto bundle = engine.select_context("marcus", "What is a transformer in AI?", allocate_budget(8000), kCounter);
    auto prompt = compose_system_prompt(bundle);
    CHECK(prompt.find("Define technical terms on first use") != std::string::npos);
    CHECK(prompt.find("Start with analogies and conceptual explanations") != std::string::npos);
    CHECK(prompt.find("Build from basics to complexity") != std::string::npos);
    CHECK(prompt.find("Lead with code examples") == std::string::npos);
    CHECK(prompt.find("without definition") == std::string::npos);
}

TEST_CASE("select_context edge cases") {
    TempDir dir;
    memory::FileMemoryStore store(dir.path());
    PersonalizationEngine engine(store);

    SUBCASE("unknown user gets an empty bundle") {
        auto bundle = engine.select_context("nobody", "hi", allocate_budget(1000), kCounter);
        CHECK(bundle.profile_block.empty());
        CHECK(bundle.selected_ids().empty());
        auto prompt = compose_system_prompt(bundle);
        auto pos_ctx = prompt.find("## User Context");
        auto pos_profile = prompt.find("### User Profile");
        auto pos_know = prompt.find("### What You Know About This User");
        auto pos_facts = prompt.find("**Facts:**");
        auto pos_prefs = prompt.find("**Preferences:**");
        auto pos_beh = prompt.find("**Communication patterns:**");
        auto pos_sum = prompt.find("### Recent Conversation Summary");
        REQUIRE(pos_sum != std::string::npos);
        CHECK(pos_ctx < pos_profile);
        CHECK(pos_profile < pos_know);
        CHECK(pos_know < pos_facts);
        CHECK(pos_facts < pos_prefs);
        CHECK(pos_prefs < pos_beh);
        CHECK(pos_beh < pos_sum);
        CHECK(prompt.find('{') == std::string::npos);
        CHECK(prompt.ends_with("Adapt your response style based on user preferences.\n"));
    }

    SUBCASE("zero preferences slot selects nothing") {
        testing::seed_sarah(store, "u");
        auto a = allocate_budget(8000);
        a.preferences = 0;
        auto bundle = engine.select_context("u", "code", a, kCounter);
        CHECK(bundle.selected_ids().empty());
        CHECK(bundle.profile_block.empty());
        CHECK(bundle.budget_report.at("preferences").used == 0);
    }

    SUBCASE("history split keeps the recent tail and a summary") {
        testing::seed_sarah(store, "u");
        SessionView view;
        for (int i = 1; i <= 30; ++i) {
            view.turns.push_back(make_turn("s", i, "question " + std::to_string(i) + std::string(200, 'q'),
                                           std::string(200, 'a')));
        }
        view.summary.text = "discussed deployment";
        view.summary.covers_through_turn = 20;
        auto a = allocate_budget(2000);
        auto bundle = engine.select_context("u", "next", a, kCounter, &view);
        REQUIRE_FALSE(bundle.recent_turns.empty());
        CHECK(bundle.recent_turns.back().turn_index == 30);
        CHECK(bundle.recent_turns.size() < view.turns.size());
        std::size_t tail = 0;
        for (const auto& t : bundle.recent_turns) tail += turn_cost(t, kCounter);
        CHECK(tail <= a.history / 2);
        CHECK(tail + turn_cost(view.turns[30 - bundle.recent_turns.size() - 1], kCounter) > a.history / 2);
        CHECK(bundle.session_summary.starts_with("- Earlier in this conversation: discussed deployment"));
        check_budget(bundle);
    }
}

TEST_CASE("property: budget safety, monotonicity and determinism over random memories") {
    std::mt19937_64 rng(42);
    const std::vector<std::string> words = {"code",  "python", "depth",  "meeting", "analogy", "coffee",
                                            "graph", "deploy", "concise", "jargon", "runner",  "teacher"};
    std::uniform_int_distribution<std::size_t> pick(0, words.size() - 1);
    std::uniform_int_distribution<int> count(0, 40);
    std::uniform_int_distribution<int> kind(0, 2);
    std::uniform_int_distribution<int> len(1, 8);
    std::uniform_int_distribution<int> conf(0, 100);
    std::uniform_int_distribution<std::size_t> total(100, 20000);

    for (int round = 0; round < 60; ++round) {
        TempDir dir;
        memory::FileMemoryStore store(dir.path());
        memory::UserProfile p;
        p.user_id = "u";
        p.static_attrs = {{"role", "role " + words[pick(rng)]}, {"expertise_level", "expert"}};
        store.upsert_profile(p);
        store.append_turn("u", "s", make_turn("s", 1, "hello"));
        for (int i = 0, n = count(rng); i < n; ++i) {
            std::string text;
            for (int w = 0, m = len(rng); w < m; ++w) text += (w ? " " : "") + words[pick(rng)];
            auto r = insight(text, conf(rng) % 2 ? InsightSource::explicit_signal : InsightSource::implicit_signal,
                             static_cast<InsightKind>(kind(rng)), conf(rng) / 100.0);
            r.insight_id.clear();
            r.created_at = static_cast<Millis>(conf(rng));
            store.append_insight(r);
        }
        PersonalizationEngine engine(store);
        std::string query = words[pick(rng)] + " " + words[pick(rng)];

        auto a = allocate_budget(total(rng));
        auto bundle = engine.select_context("u", query, a, kCounter);
        check_budget(bundle);
        CHECK(compose_system_prompt(bundle) ==
              compose_system_prompt(engine.select_context("u", query, a, kCounter)));

        std::set<std::string> previous;
        for (std::size_t pref = 0; pref <= 400; pref += 10) {
            auto grown = a;
            grown.preferences = pref;
            auto b = engine.select_context("u", query, grown, kCounter);
            auto ids = b.selected_ids();
            std::set<std::string> now(ids.begin(), ids.end());
            for (const auto& id : previous) CHECK(now.count(id) == 1);
            previous = std::move(now);
        }
    }
}

TEST_CASE("differentiation: different selections give different prompts") {
    TempDir dir;
    memory::FileMemoryStore store(dir.path());
    testing::seed_sarah(store);
    testing::seed_marcus(store);
    PersonalizationEngine engine(store);
    auto a = allocate_budget(8000);
    auto s = engine.select_context("sarah", "What is a transformer in AI?", a, kCounter);
    auto m = engine.select_context("marcus", "What is a transformer in AI?", a, kCounter);
    CHECK(s.selected_ids() != m.selected_ids());
    CHECK(compose_system_prompt(s) != compose_system_prompt(m));
}

TEST_CASE("fit_to_budget") {
    CHECK(fit_to_budget("abcdefgh", 1, kCounter) == "abcd");
    CHECK(fit_to_budget("abc", 5, kCounter) == "abc");
    CHECK(fit_to_budget("ééééé", 1, kCounter) == "éééé");
    CHECK(fit_to_budget("abc", 0, kCounter).empty());
}

namespace {

llm::BackendConfig fast_config() {
    llm::BackendConfig c;
    c.backoff_ms = 1;
    c.max_retries = 0;
    return c;
}

// Wraps the current summary in SUM(...).
std::string sum_handler(const llm::ChatRequest& request) {
    const auto& text = request.messages.front().text;
    auto begin = text.find("Current summary:\n") + std::string("Current summary:\n").size();
    auto end = text.find("\n\nNew turns:");
    auto prior = text.substr(begin, end - begin);
    return "SUM(" + (prior == "(none)" ? std::string() : prior) + ")";
}

}  // namespace

TEST_CASE("compress_history") {
    llm::Gateway gw(fast_config());
    std::vector<memory::TurnRecord> turns = {make_turn("s", 1, "a", "b"), make_turn("s", 2, "c", "d"),
                                             make_turn("s", 3, "e", "f")};

    SUBCASE("base case covers the new turns") {
        gw.register_script(llm::Matcher::substring("New turns:"), "talked about a and c",
                           llm::Role::summarizer);
        auto s = compress_history({}, {turns[0], turns[1]}, 100, gw);
        CHECK(s.text == "talked about a and c");
        CHECK(s.covers_through_turn == 2);
        CHECK(s.token_length == kCounter(s.text));
        CHECK_FALSE(s.degraded);
    }

    SUBCASE("recursive structure") {
        gw.register_handler(llm::Matcher::substring("New turns:"), sum_handler, llm::Role::summarizer);
        auto s1 = compress_history({}, {turns[0]}, 100, gw);
        auto s2 = compress_history(s1, {turns[0], turns[1]}, 100, gw);
        auto s3 = compress_history(s2, turns, 100, gw);
        CHECK(s1.text == "SUM()");
        CHECK(s2.text == "SUM(SUM())");
        CHECK(s3.text == "SUM(SUM(SUM()))");
        CHECK(s1.covers_through_turn < s2.covers_through_turn);
        CHECK(s2.covers_through_turn < s3.covers_through_turn);
    }

    SUBCASE("failure keeps the input and flags degradation") {
        gw.scripted().inject_failures(10);
        SessionSummary prior{"prior", 1, 2, false};
        auto s = compress_history(prior, {turns[1]}, 100, gw);
        CHECK(s.text == "prior");
        CHECK(s.covers_through_turn == 1);
        CHECK(s.degraded);
    }

    SUBCASE("over budget: one re-summarize, then truncation") {
        gw.register_script(llm::Matcher::substring("Shorten the summary"), std::string(40, 'y'),
                           llm::Role::summarizer);
        gw.register_script(llm::Matcher::substring("New turns:"), std::string(80, 'x'), llm::Role::summarizer);
        auto s = compress_history({}, turns, 5, gw);
        CHECK(gw.calls(llm::Role::summarizer) == 2);
        CHECK(s.text == std::string(20, 'y'));
        CHECK(s.token_length <= 5);
    }

    SUBCASE("no new turns is a precondition error") {
        CHECK_THROWS_AS(compress_history({}, {}, 100, gw), PreconditionError);
        CHECK_THROWS_AS(compress_history({"x", 3, 1, false}, turns, 100, gw), PreconditionError);
    }
}
