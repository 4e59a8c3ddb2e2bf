#include "adapt/agent/orchestrator.hpp"

#include "adapt/common/errors.hpp"
#include "adapt/common/util.hpp"

#include <chrono>

#include <spdlog/spdlog.h>

namespace adapt::agent {

using personalization::SessionView;

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
    return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

}  // namespace

void ToolRegistry::register_tool(const std::string& name, std::string description, Tool tool) {
    if (name.empty() || !tool) throw ValidationError("tool needs a name and a callable");
    std::lock_guard lock(mu_);
    tools_[name] = {std::move(description), std::move(tool)};
}

std::vector<std::pair<std::string, std::string>> ToolRegistry::list() const {
    std::lock_guard lock(mu_);
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& [name, entry] : tools_) out.emplace_back(name, entry.first);
    return out;
}

std::string ToolRegistry::invoke(const std::string& name, const std::string& input) const {
    Tool tool;
    {
        std::lock_guard lock(mu_);
        auto it = tools_.find(name);
        if (it == tools_.end()) throw NotFoundError("tool " + name);
        tool = it->second.second;
    }
    return tool(input);
}

Orchestrator::Orchestrator(memory::MemoryStore& store, const llm::Gateway& gateway,
                           const personalization::PersonalizationEngine& personalization,
                           learning::LearningEngine& learning, learning::JobQueue& queue,
                           OrchestratorConfig config)
    : store_(store),
      gateway_(gateway),
      personalization_(personalization),
      learning_(learning),
      queue_(queue),
      config_(config) {
    personalization::allocate_budget(config_.context_tokens, config_.fractions);
}

Orchestrator::~Orchestrator() { wait_for_background(); }

std::shared_ptr<Orchestrator::Slot> Orchestrator::slot(const std::string& user_id,
                                                      const std::string& session_id) {
    memory::validate_path_component(user_id, "user_id");
    memory::validate_path_component(session_id, "session_id");
    std::lock_guard lock(mu_);
    auto& s = sessions_[{user_id, session_id}];
    if (!s) s = std::make_shared<Slot>();
    return s;
}

void Orchestrator::load_state(Slot& s, const std::string& user_id, const std::string& session_id) {
    if (s.state) return;
    SessionState state;
    state.user_id = user_id;
    state.session_id = session_id;
    state.working_turns = store_.load_session(user_id, session_id);
    state.started_at = state.working_turns.empty() ? now_ms() : state.working_turns.front().timestamp;
    s.state = std::move(state);
}

QueryResult Orchestrator::handle_query(const std::string& user_id, const std::string& session_id,
                                       const std::string& query_text) {
    if (trim(query_text).empty()) throw ValidationError("query must not be empty");
    auto s = slot(user_id, session_id);
    std::lock_guard lock(s->mu);

    QueryResult result;
    auto& trace = result.trace;
    auto counter = [this](std::string_view text) { return gateway_.count_tokens(text); };

    trace.stages.push_back("allocate_budget");
    auto allocation = personalization::allocate_budget(config_.context_tokens, config_.fractions);

    auto retrieval_start = Clock::now();
    load_state(*s, user_id, session_id);
    s->ended = false;
    auto& state = *s->state;
    trace.retrieval_ms += elapsed_ms(retrieval_start);

    // Turns that no longer fit the verbatim half of the history slot are folded
    // into the running summary.
    std::size_t tail_cost = 0;
    std::size_t tail_start = state.working_turns.size();
    while (tail_start > 0) {
        auto cost = personalization::turn_cost(state.working_turns[tail_start - 1], counter);
        if (tail_cost + cost > allocation.history / 2) break;
        tail_cost += cost;
        --tail_start;
    }
    std::vector<memory::TurnRecord> to_fold;
    for (std::size_t i = 0; i < tail_start; ++i) {
        if (state.working_turns[i].turn_index > state.summary.covers_through_turn) {
            to_fold.push_back(state.working_turns[i]);
        }
    }
    if (!to_fold.empty()) {
        trace.stages.push_back("compress_history");
        auto llm_start = Clock::now();
        state.summary = personalization::compress_history(state.summary, to_fold,
                                                          allocation.history / 2, gateway_);
        trace.summary_degraded = state.summary.degraded;
        state.summary.degraded = false;
        trace.llm_ms += elapsed_ms(llm_start);
    }

    trace.stages.push_back("select_context");
    retrieval_start = Clock::now();
    SessionView view{state.working_turns, state.summary};
    auto bundle = personalization_.select_context(user_id, query_text, allocation, counter, &view);
    trace.retrieval_ms += elapsed_ms(retrieval_start);

    trace.stages.push_back("compose_system_prompt");
    auto assembly_start = Clock::now();
    trace.composed_prompt = personalization::compose_system_prompt(bundle);
    llm::ChatRequest request;
    request.role = llm::Role::responder;
    request.temperature = config_.temperature;
    request.max_tokens = config_.max_response_tokens;
    request.messages.push_back({llm::Speaker::system, trace.composed_prompt});
    for (const auto& t : bundle.recent_turns) {
        if (t.error) continue;
        request.messages.push_back({llm::Speaker::user, t.user_message});
        request.messages.push_back({llm::Speaker::assistant, t.assistant_message});
    }
    request.messages.push_back({llm::Speaker::user, query_text});
    trace.assembly_ms = elapsed_ms(assembly_start);
    trace.retrieved_insight_ids = bundle.selected_ids();
    for (const auto* list : {&bundle.facts, &bundle.preferences, &bundle.behaviors}) {
        trace.retrieved.insert(trace.retrieved.end(), list->begin(), list->end());
    }
    trace.budget_report = bundle.budget_report;

    memory::TurnRecord turn;
    turn.session_id = session_id;
    turn.turn_index = state.working_turns.empty() ? 1 : state.working_turns.back().turn_index + 1;
    turn.user_message = query_text;
    turn.retrieved_insight_ids = trace.retrieved_insight_ids;
    trace.turn_index = turn.turn_index;

    trace.stages.push_back("complete");
    auto llm_start = Clock::now();
    try {
        turn.assistant_message = gateway_.complete(request);
    } catch (const Error& e) {
        trace.llm_ms += elapsed_ms(llm_start);
        spdlog::warn("responder failed for {}/{} turn {}: {}", user_id, session_id, turn.turn_index,
                     e.what());
        turn.error = true;
        turn.timestamp = now_ms();
        store_.append_turn(user_id, session_id, turn);
        state.working_turns.push_back(turn);
        throw;
    }
    trace.llm_ms += elapsed_ms(llm_start);

    trace.stages.push_back("append_turn");
    turn.timestamp = now_ms();
    store_.append_turn(user_id, session_id, turn);
    state.working_turns.push_back(turn);
    result.response = turn.assistant_message;
    return result;
}

void Orchestrator::record_feedback(const std::string& user_id, const std::string& session_id,
                                   int turn_index, memory::Feedback signal,
                                   std::optional<std::string> text) {
    auto s = slot(user_id, session_id);
    {
        std::lock_guard lock(s->mu);
        store_.set_turn_feedback(user_id, session_id, turn_index, signal, text);
        if (s->state) {
            for (auto& t : s->state->working_turns) {
                if (t.turn_index == turn_index) {
                    t.feedback = signal;
                    t.feedback_text = text;
                }
            }
        }
    }
    bool trigger = (signal == memory::Feedback::negative && config_.event_on_negative) ||
                   (signal == memory::Feedback::positive && config_.event_on_positive);
    if (!trigger) return;

    auto task = [this, user_id, session_id, turn_index] {
        try {
            learning_.handle_feedback_event(user_id, session_id, turn_index);
        } catch (const std::exception& e) {
            spdlog::warn("feedback learning for {}/{} turn {} failed, queued for retry: {}", user_id,
                         session_id, turn_index, e.what());
            learning::LearningJob job;
            job.trigger = memory::LearningTrigger::event;
            job.user_id = user_id;
            job.session_id = session_id;
            job.turn_index = turn_index;
            try {
                queue_.enqueue(job);
            } catch (const std::exception& inner) {
                spdlog::error("could not queue feedback job: {}", inner.what());
            }
        }
    };
    std::lock_guard lock(background_mu_);
    std::erase_if(background_, [](std::future<void>& f) {
        return f.wait_for(std::chrono::seconds(0)) == std::future_status::ready;
    });
    background_.push_back(std::async(std::launch::async, std::move(task)));
}

bool Orchestrator::end_session(const std::string& user_id, const std::string& session_id) {
    auto s = slot(user_id, session_id);
    std::lock_guard lock(s->mu);
    if (s->ended) return false;
    bool exists = s->state ? !s->state->working_turns.empty()
                           : !store_.load_session(user_id, session_id).empty();
    if (!exists) throw NotFoundError("session " + session_id + " of user " + user_id);

    s->ended = true;
    s->state.reset();
    if (queue_.has_open_job(memory::LearningTrigger::end_of_session, user_id, session_id)) return false;
    learning::LearningJob job;
    job.trigger = memory::LearningTrigger::end_of_session;
    job.user_id = user_id;
    job.session_id = session_id;
    queue_.enqueue(job);
    return true;
}

void Orchestrator::wait_for_background() {
    std::vector<std::future<void>> pending;
    {
        std::lock_guard lock(background_mu_);
        pending.swap(background_);
    }
    for (auto& f : pending) f.wait();
}

std::optional<SessionState> Orchestrator::session_state(const std::string& user_id,
                                                        const std::string& session_id) const {
    std::lock_guard lock(mu_);
    auto it = sessions_.find({user_id, session_id});
    if (it == sessions_.end()) return std::nullopt;
    std::lock_guard slot_lock(it->second->mu);
    return it->second->state;
}

}  // namespace adapt::agent
