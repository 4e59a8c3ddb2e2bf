#include "adapt/bench/dataset.hpp"

#include "adapt/common/errors.hpp"
#include "adapt/common/util.hpp"

#include <atomic>
#include <future>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

namespace adapt::assets {
extern const std::string_view synthesis_v1;
}

namespace adapt::bench {

using nlohmann::json;

namespace {

std::optional<std::string> json_object_span(std::string_view reply) {
    auto begin = reply.find('{');
    auto end = reply.rfind('}');
    if (begin == std::string_view::npos || end == std::string_view::npos || end < begin) return std::nullopt;
    return std::string(reply.substr(begin, end - begin + 1));
}

std::uint64_t fnv1a(std::string_view text) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

const std::vector<std::string>& follow_ups() {
    static const std::vector<std::string> lines = {
        "Thanks, could you go into a bit more depth on that?",
        "That helps. What would you do first?",
        "Could you summarize that in a few bullet points?",
        "Are there any common mistakes I should avoid there?",
        "Great, and how long does that usually take?",
        "What would a good next step be after that?",
        "Is there a cheaper way to do the same thing?",
        "Can you give me one concrete example?"};
    return lines;
}

}  // namespace

const std::vector<std::string>& evaluation_topics() {
    static const std::vector<std::string> topics = {
        "Can you explain how compound interest works?",
        "What were the main causes of the French Revolution?",
        "How does a refrigerator keep food cold?",
        "Recommend a classic novel I could read over the next month.",
        "How do vaccines train the immune system?",
        "What should I consider when buying a used car?",
        "Help me plan a budget for a two-week vacation.",
        "How do I start learning to play the guitar?",
        "What is the difference between stocks and bonds?",
        "How can I improve my public speaking?",
        "Suggest a good houseplant that is hard to kill.",
        "How do solar panels generate electricity?",
        "What's a simple way to start journaling?",
        "Explain how a bill becomes a law.",
        "How should I prepare for a job interview?",
        "What are good strategies for learning a new language?",
        "Plan a three-day trip itinerary for me.",
        "How do noise-cancelling headphones work?",
        "Give me tips for taking better photos with my phone.",
        "How does a mortgage work?"};
    return topics;
}

std::string_view synthesis_prompt_template() { return assets::synthesis_v1; }

std::string render_synthesis_prompt(const Persona& persona, const TraitPool& pool) {
    std::string traits;
    for (const auto& id : persona.traits) {
        if (!traits.empty()) traits += '\n';
        traits += "- " + id + ": " + pool.at(id).text;
    }
    return render_template(synthesis_prompt_template(), {{"traits", traits}});
}

std::optional<Trajectory> parse_trajectory_reply(std::string_view reply, const std::string& persona_id) {
    auto span = json_object_span(reply);
    if (!span) return std::nullopt;
    auto j = json::parse(*span, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("turns") || !j["turns"].is_array()) {
        return std::nullopt;
    }
    Trajectory t;
    t.persona_id = persona_id;
    int position = 0;
    for (const auto& item : j["turns"]) {
        ++position;
        if (!item.is_object() || !item.contains("user_message") || !item["user_message"].is_string()) {
            return std::nullopt;
        }
        TrajectoryTurn turn;
        turn.turn_index = item.value("turn_index", position);
        turn.user_message = trim(item["user_message"].get<std::string>());
        turn.phase = turn.turn_index <= kLearningTurns ? Phase::learning : Phase::evaluation;
        t.turns.push_back(std::move(turn));
    }
    return t;
}

Trajectory synthesize_trajectory(const Persona& persona, const TraitPool& pool,
                                 const llm::Gateway& gateway) {
    llm::ChatRequest request;
    request.role = llm::Role::synthesizer;
    request.max_tokens = 2048;
    request.messages = {{llm::Speaker::user, render_synthesis_prompt(persona, pool)}};

    std::string last_reply;
    std::string last_problem;
    for (int attempt = 0; attempt <= kSynthesisRegenerations; ++attempt) {
        last_reply = gateway.complete(request);
        auto candidate = parse_trajectory_reply(last_reply, persona.persona_id);
        if (!candidate) {
            last_problem = "reply is not a turns object";
            continue;
        }
        auto check = validate_trajectory(*candidate, persona, pool);
        if (check.ok) return *candidate;
        last_problem = check.problems.front();
        spdlog::debug("trajectory for {} rejected: {}", persona.persona_id, last_problem);
    }
    throw SynthesisError("trajectory for " + persona.persona_id + " failed validation: " + last_problem,
                         last_reply);
}

Dataset generate_dataset(std::uint64_t seed, std::size_t n, std::size_t k, const TraitPool& pool,
                         const llm::Gateway& gateway, std::size_t parallelism) {
    Dataset d;
    d.seed = seed;
    d.pool = pool;
    d.personas = sample_personas(seed, n, k, pool);
    d.trajectories.resize(d.personas.size());

    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < d.personas.size(); i = next++) {
            d.trajectories[i] = synthesize_trajectory(d.personas[i], pool, gateway);
        }
    };
    std::vector<std::future<void>> workers;
    for (std::size_t w = 0; w < std::max<std::size_t>(1, parallelism); ++w) {
        workers.push_back(std::async(std::launch::async, work));
    }
    for (auto& f : workers) f.get();
    return d;
}

void install_scripted_synthesizer(llm::Gateway& gateway, const TraitPool& pool) {
    auto handler = [pool](const llm::ChatRequest& request) {
        const auto& prompt = request.messages.front().text;
        auto begin = prompt.find("PERSONA TRAITS\n");
        std::vector<std::string> ids;
        if (begin != std::string::npos) {
            std::istringstream in(prompt.substr(begin + 15));
            for (std::string line; std::getline(in, line) && line.starts_with("- ");) {
                ids.push_back(line.substr(2, line.find(':') - 2));
            }
        }
        std::vector<std::string> learning;
        for (const auto& id : ids) learning.push_back(pool.at(id).probe);
        while (learning.size() > kLearningTurns) {
            learning[kLearningTurns - 1] += " " + learning.back();
            learning.pop_back();
        }
        for (std::size_t i = 0; learning.size() < kLearningTurns; ++i) {
            learning.push_back(follow_ups()[i % follow_ups().size()]);
        }
        std::string key;
        for (const auto& id : ids) key += id + ",";
        auto h = fnv1a(key);
        const auto& topics = evaluation_topics();
        auto first = h % topics.size();
        auto second = (first + 1 + (h / topics.size()) % (topics.size() - 1)) % topics.size();

        json turns = json::array();
        for (std::size_t i = 0; i < learning.size(); ++i) {
            turns.push_back({{"turn_index", i + 1}, {"phase", "learning"}, {"user_message", learning[i]}});
        }
        turns.push_back({{"turn_index", 9}, {"phase", "evaluation"}, {"user_message", topics[first]}});
        turns.push_back({{"turn_index", 10}, {"phase", "evaluation"}, {"user_message", topics[second]}});
        return json{{"turns", turns}}.dump();
    };
    gateway.register_handler(llm::Matcher::substring("PERSONA TRAITS"), handler, llm::Role::synthesizer);
}

}  // namespace adapt::bench
