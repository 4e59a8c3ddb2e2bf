#include "adapt/agent/orchestrator.hpp"

#include "adapt/common/errors.hpp"
#include "adapt/learning/worker.hpp"
#include "support/fixtures.hpp"

#include <doctest.h>

#include <thread>

#include <nlohmann/json.hpp>

using namespace adapt;
using namespace adapt::agent;
using adapt::testing::TempDir;

namespace {

const std::string kQuery = "What is a transformer in AI?";
const std::string kCodeReply = "Here's the PyTorch implementation of multi-head attention: ...";
const std::string kAnalogyReply = "Think of a transformer like a team of readers working on a document together.";

llm::BackendConfig fast_config() {
    llm::BackendConfig c;
    c.backoff_ms = 1;
    c.max_retries = 0;
    c.scripted_default = "[]";
    return c;
}

struct Env {
    explicit Env(OrchestratorConfig config = {})
        : engine(store, gw, dir.path()),
          personalization(store),
          queue(dir.path(), learning::QueueConfig{3, 0, 0}),
          orchestrator(store, gw, personalization, engine, queue, config) {
        gw.register_script(llm::Matcher::substring("Lead with code examples"), kCodeReply,
                           llm::Role::responder);
        gw.register_script(llm::Matcher::substring("Start with analogies"), kAnalogyReply,
                           llm::Role::responder);
    }

    TempDir dir;
    memory::FileMemoryStore store{dir.path()};
    llm::Gateway gw{fast_config()};
    learning::LearningEngine engine;
    personalization::PersonalizationEngine personalization;
    learning::JobQueue queue;
    Orchestrator orchestrator;
};

std::string draft_json(const std::string& type, const std::string& content, double confidence) {
    return nlohmann::json::array({{{"type", type}, {"content", content}, {"confidence", confidence}}})
        .dump();
}

}  // namespace

TEST_CASE("same query, different users, different responses") {
    Env env;
    testing::seed_sarah(env.store);
    testing::seed_marcus(env.store);

    auto sarah = env.orchestrator.handle_query("sarah", "a", kQuery);
    auto marcus = env.orchestrator.handle_query("marcus", "a", kQuery);
    CHECK(sarah.response == kCodeReply);
    CHECK(marcus.response == kAnalogyReply);
    CHECK(sarah.trace.composed_prompt != marcus.trace.composed_prompt);
    CHECK(sarah.trace.composed_prompt.find("User prefers code examples over prose") != std::string::npos);
    for (const auto& id : sarah.trace.retrieved_insight_ids) {
        CHECK(env.store.get_insight("sarah", id).has_value());
    }
}

TEST_CASE("cold start and request-path shape") {
    Env env;
    auto result = env.orchestrator.handle_query("newbie", "s1", kQuery);
    CHECK(result.response == "[]");
    CHECK(result.trace.turn_index == 1);
    CHECK(result.trace.stages == std::vector<std::string>{"allocate_budget", "select_context",
                                                          "compose_system_prompt", "complete",
                                                          "append_turn"});
    CHECK(result.trace.retrieval_ms >= 0.0);
    CHECK(result.trace.assembly_ms >= 0.0);
    CHECK(result.trace.llm_ms >= 0.0);
    CHECK(result.trace.budget_report.count("preferences") == 1);
    CHECK(env.engine.invocations() == 0);
    CHECK(env.gw.calls(llm::Role::learner) == 0);

    auto turns = env.store.load_session("newbie", "s1");
    REQUIRE(turns.size() == 1);
    CHECK(turns[0].user_message == kQuery);
    CHECK(turns[0].assistant_message == "[]");

    env.orchestrator.handle_query("newbie", "s1", "and attention?");
    CHECK(env.store.load_session("newbie", "s1").size() == 2);
    CHECK(env.engine.invocations() == 0);
    CHECK_THROWS_AS(env.orchestrator.handle_query("newbie", "s1", "  "), ValidationError);
}

TEST_CASE("responder failure persists an error turn and rethrows") {
    Env env;
    env.gw.scripted().inject_failures(1);
    CHECK_THROWS_AS(env.orchestrator.handle_query("u", "s", "hello there"), GatewayUnavailableError);
    auto turns = env.store.load_session("u", "s");
    REQUIRE(turns.size() == 1);
    CHECK(turns[0].error);
    CHECK(turns[0].assistant_message.empty());

    auto next = env.orchestrator.handle_query("u", "s", "retry");
    CHECK(next.trace.turn_index == 2);
}

TEST_CASE("feedback") {
    Env env;
    env.gw.register_script(llm::Matcher::substring("User message: Explain gradient descent"),
                           draft_json("preference", "prefers technical depth", 0.9), llm::Role::learner);
    env.orchestrator.handle_query("u", "s", "Explain gradient descent");

    SUBCASE("thumbs-down runs event learning in the background") {
        env.orchestrator.record_feedback("u", "s", 1, memory::Feedback::negative, "too simple");
        env.orchestrator.wait_for_background();
        auto insights = env.store.query_insights("u", {});
        REQUIRE(insights.size() == 1);
        CHECK(insights[0].content == "prefers technical depth");
        CHECK(insights[0].source == memory::InsightSource::explicit_signal);
        CHECK(insights[0].trigger == memory::LearningTrigger::event);
        CHECK(env.store.load_session("u", "s")[0].feedback == memory::Feedback::negative);
    }
    SUBCASE("thumbs-up only stores feedback") {
        env.orchestrator.record_feedback("u", "s", 1, memory::Feedback::positive);
        env.orchestrator.wait_for_background();
        CHECK(env.engine.invocations() == 0);
        CHECK(env.store.load_session("u", "s")[0].feedback == memory::Feedback::positive);
        CHECK(env.queue.pending().empty());
    }
    SUBCASE("unknown turn") {
        CHECK_THROWS_AS(env.orchestrator.record_feedback("u", "s", 99, memory::Feedback::negative),
                        NotFoundError);
    }
    SUBCASE("failed event learning falls back to the queue") {
        env.gw.scripted().inject_failures(2);
        env.orchestrator.record_feedback("u", "s", 1, memory::Feedback::negative);
        env.orchestrator.wait_for_background();
        auto pending = env.queue.pending();
        REQUIRE(pending.size() == 1);
        CHECK(pending[0].trigger == memory::LearningTrigger::event);
        learning::Worker(env.queue, env.engine).drain();
        CHECK(env.store.query_insights("u", {}).size() == 1);
    }
}

TEST_CASE("end_session") {
    Env env;
    for (int i = 0; i < 8; ++i) env.orchestrator.handle_query("u", "s", "question " + std::to_string(i));
    CHECK(env.orchestrator.end_session("u", "s"));
    auto pending = env.queue.pending();
    REQUIRE(pending.size() == 1);
    CHECK(pending[0].session_id == "s");
    CHECK(pending[0].trigger == memory::LearningTrigger::end_of_session);
    CHECK_FALSE(env.orchestrator.session_state("u", "s").has_value());

    CHECK_FALSE(env.orchestrator.end_session("u", "s"));
    CHECK(env.queue.pending().size() == 1);
    CHECK_THROWS_AS(env.orchestrator.end_session("u", "missing"), NotFoundError);
}

TEST_CASE("closed loop: learned preference reaches the next prompt") {
    Env env;
    env.gw.register_script(llm::Matcher::substring("User message: I'd like answers with Python code"),
                           draft_json("preference", "User prefers Python code examples", 0.9),
                           llm::Role::learner);
    env.orchestrator.handle_query("u", "s1", "I'd like answers with Python code");
    auto before = env.orchestrator.handle_query("u", "s1", "How do I sort a list?");
    CHECK(before.trace.composed_prompt.find("User prefers Python code examples") == std::string::npos);

    env.orchestrator.end_session("u", "s1");
    learning::Worker(env.queue, env.engine).drain();

    auto after = env.orchestrator.handle_query("u", "s2", "How do I sort a list?");
    CHECK(after.trace.composed_prompt.find("User prefers Python code examples") != std::string::npos);
    CHECK(after.response == kCodeReply);
}

TEST_CASE("long sessions fold older turns into the summary") {
    OrchestratorConfig config;
    config.context_tokens = 1000;
    Env env(config);
    env.gw.register_handler(
        llm::Matcher::substring("New turns:"),
        [](const llm::ChatRequest& r) {
            return "summary of " + std::to_string(std::count(r.messages[0].text.begin(),
                                                             r.messages[0].text.end(), '\n')) +
                   " lines";
        },
        llm::Role::summarizer);
    const std::string filler(150, 'z');
    bool compressed = false;
    for (int i = 0; i < 6; ++i) {
        auto r = env.orchestrator.handle_query("u", "s", "q" + std::to_string(i) + " " + filler);
        for (const auto& st : r.trace.stages) compressed = compressed || st == "compress_history";
        CHECK(r.trace.budget_report.at("history").used <= r.trace.budget_report.at("history").allowed);
    }
    CHECK(compressed);
    auto state = env.orchestrator.session_state("u", "s");
    REQUIRE(state.has_value());
    CHECK(state->summary.covers_through_turn > 0);
    CHECK(state->working_turns.size() == 6);
    CHECK(env.store.load_session("u", "s").size() == 6);
}

TEST_CASE("concurrent sessions keep turn order") {
    Env env;
    std::vector<std::thread> threads;
    for (int t = 0; t < 4; ++t) {
        threads.emplace_back([&env, t] {
            for (int i = 0; i < 10; ++i) {
                env.orchestrator.handle_query("u" + std::to_string(t % 2), "s" + std::to_string(t),
                                              "q" + std::to_string(i));
            }
        });
    }
    for (int t = 0; t < 2; ++t) {
        threads.emplace_back([&env] {
            for (int i = 0; i < 10; ++i) env.orchestrator.handle_query("shared", "same", "q");
        });
    }
    for (auto& th : threads) th.join();
    for (int t = 0; t < 4; ++t) {
        CHECK(env.store.load_session("u" + std::to_string(t % 2), "s" + std::to_string(t)).size() == 10);
    }
    auto shared = env.store.load_session("shared", "same");
    REQUIRE(shared.size() == 20);
    for (std::size_t i = 0; i < shared.size(); ++i) CHECK(shared[i].turn_index == static_cast<int>(i + 1));
}

TEST_CASE("tool registry starts empty") {
    Env env;
    CHECK(env.orchestrator.tools().list().empty());
    CHECK_THROWS_AS(env.orchestrator.tools().invoke("calc", "1+1"), NotFoundError);
    env.orchestrator.tools().register_tool("echo", "returns input", [](const std::string& s) { return s; });
    CHECK(env.orchestrator.tools().invoke("echo", "x") == "x");
}
