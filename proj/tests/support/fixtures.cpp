#include "fixtures.hpp"

#include "adapt/common/util.hpp"

namespace adapt::testing {

namespace fs = std::filesystem;

TempDir::TempDir() {
    path_ = fs::temp_directory_path() / ("adapt-test-" + random_id().substr(0, 12));
    fs::create_directories(path_);
}

TempDir::~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
}

std::string random_text(std::mt19937_64& rng, std::size_t max_len) {
    static const char* pieces[] = {"a", "b", "c", "x", "y", "z", " ", "\"", "\\", "\n", "{", "}",
                                   "é", "ß", "中", "🙂", "0", "9", "'", ","};
    std::uniform_int_distribution<std::size_t> len(1, max_len);
    std::uniform_int_distribution<std::size_t> pick(0, std::size(pieces) - 1);
    std::string out;
    for (std::size_t i = 0, n = len(rng); i < n; ++i) out += pieces[pick(rng)];
    return out;
}

std::string random_id_token(std::mt19937_64& rng) {
    static const char alphabet[] = "abcdefghijklmnopqrstuvwxyz0123456789-_";
    std::uniform_int_distribution<std::size_t> len(1, 16);
    std::uniform_int_distribution<std::size_t> pick(0, sizeof(alphabet) - 2);
    std::string out;
    for (std::size_t i = 0, n = len(rng); i < n; ++i) out += alphabet[pick(rng)];
    return out;
}

memory::UserProfile random_profile(std::mt19937_64& rng, const std::string& user_id) {
    std::uniform_int_distribution<int> count(0, 4);
    std::uniform_int_distribution<std::int64_t> stamp(0, 4'000'000'000'000);
    memory::UserProfile p;
    p.user_id = user_id;
    static const char* keys[] = {"role", "team", "tenure", "expertise_level",
                                 "preferred_language", "response_style", "verbosity"};
    for (const char* key : keys) {
        if (count(rng) % 2 == 0) p.static_attrs[key] = random_text(rng, 20);
    }
    for (int i = count(rng); i > 0; --i) p.dynamic_state.current_goals.push_back(random_text(rng, 30));
    p.dynamic_state.recent_context = random_text(rng, 60);
    if (count(rng) % 2) p.dynamic_state.emotional_tone = random_text(rng, 8);
    p.dynamic_state.updated_at = stamp(rng);
    for (int i = count(rng); i > 0; --i) {
        p.behavior_patterns.push_back({random_text(rng, 30), count(rng) * 3});
    }
    for (int i = count(rng); i > 0; --i) p.predictive.push_back(random_text(rng, 20));
    p.created_at = stamp(rng);
    p.updated_at = p.created_at;
    return p;
}

memory::TurnRecord random_turn(std::mt19937_64& rng, const std::string& session_id, int index) {
    std::uniform_int_distribution<int> pick(0, 2);
    memory::TurnRecord t;
    t.session_id = session_id;
    t.turn_index = index;
    t.user_message = random_text(rng, 80);
    t.assistant_message = random_text(rng, 120);
    t.feedback = static_cast<memory::Feedback>(pick(rng));
    if (pick(rng) == 0) t.feedback_text = random_text(rng, 20);
    for (int i = pick(rng); i > 0; --i) t.retrieved_insight_ids.push_back(random_id());
    t.timestamp = 1'700'000'000'000 + index;
    t.error = pick(rng) == 0;
    return t;
}

memory::InsightRecord random_insight(std::mt19937_64& rng, const std::string& user_id,
                                     const std::string& session_id, int turn_index) {
    std::uniform_int_distribution<int> pick(0, 2);
    std::uniform_real_distribution<double> conf(0.0, 1.0);
    memory::InsightRecord r;
    r.user_id = user_id;
    r.kind = static_cast<memory::InsightKind>(pick(rng));
    r.content = random_text(rng, 60);
    if (trim(r.content).empty()) r.content = "x" + r.content;
    r.confidence = conf(rng);
    r.source = pick(rng) == 0 ? memory::InsightSource::explicit_signal
                              : memory::InsightSource::implicit_signal;
    r.trigger = static_cast<memory::LearningTrigger>(pick(rng));
    r.provenance = {session_id, turn_index};
    r.created_at = 1'700'000'000'000 + pick(rng) * 1000;
    return r;
}

memory::TurnRecord make_turn(const std::string& session_id, int index, std::string user_message,
                             std::string assistant_message) {
    memory::TurnRecord t;
    t.session_id = session_id;
    t.turn_index = index;
    t.user_message = std::move(user_message);
    t.assistant_message = std::move(assistant_message);
    return t;
}

namespace {

void add_insight(memory::MemoryStore& store, const std::string& user_id, memory::InsightKind kind,
                 std::string content, double confidence, memory::InsightSource source) {
    memory::InsightRecord r;
    r.user_id = user_id;
    r.kind = kind;
    r.content = std::move(content);
    r.confidence = confidence;
    r.source = source;
    r.provenance = {"history", 1};
    store.append_insight(std::move(r));
}

void seed_history_session(memory::MemoryStore& store, const std::string& user_id) {
    if (store.load_session(user_id, "history").empty()) {
        store.append_turn(user_id, "history", make_turn("history", 1, "earlier question", "earlier answer"));
    }
}

}  // namespace

void seed_sarah(memory::MemoryStore& store, const std::string& user_id) {
    using memory::InsightKind;
    using memory::InsightSource;
    memory::UserProfile p;
    p.user_id = user_id;
    p.static_attrs = {{"role", "Senior ML engineer"},
                      {"expertise_level", "expert"},
                      {"language", "English"},
                      {"response_style", "technical"},
                      {"verbosity", "detailed"}};
    p.dynamic_state.recent_context =
        "User asked about: transformer architecture\nUser asked about: attention mechanisms\n"
        "User asked about: deployment optimization\n";
    store.upsert_profile(p);
    seed_history_session(store, user_id);
    const auto ex = InsightSource::explicit_signal;
    const auto im = InsightSource::implicit_signal;
    add_insight(store, user_id, InsightKind::fact, "User is a senior ML engineer", 0.95, ex);
    add_insight(store, user_id, InsightKind::fact, "User works with PyTorch daily", 0.9, im);
    add_insight(store, user_id, InsightKind::fact, "User is debugging a production deployment", 0.85, im);
    add_insight(store, user_id, InsightKind::preference, "User prefers code examples over prose", 0.9, ex);
    add_insight(store, user_id, InsightKind::preference,
                "User wants technical depth without introductory explanations", 0.9, ex);
    add_insight(store, user_id, InsightKind::preference, "User appreciates implementation details", 0.85, im);
    add_insight(store, user_id, InsightKind::preference, "User prefers meetings scheduled before 10am", 0.8, im);
    add_insight(store, user_id, InsightKind::behavior, "User asks short questions expecting detailed answers",
                0.8, im);
    add_insight(store, user_id, InsightKind::behavior,
                "User engages more with responses containing runnable code", 0.8, im);
}

void seed_marcus(memory::MemoryStore& store, const std::string& user_id) {
    using memory::InsightKind;
    using memory::InsightSource;
    memory::UserProfile p;
    p.user_id = user_id;
    p.static_attrs = {{"role", "Product manager"},
                      {"expertise_level", "beginner"},
                      {"language", "English"},
                      {"response_style", "conversational"}};
    store.upsert_profile(p);
    seed_history_session(store, user_id);
    const auto ex = InsightSource::explicit_signal;
    const auto im = InsightSource::implicit_signal;
    add_insight(store, user_id, InsightKind::fact, "User is a product manager", 0.95, ex);
    add_insight(store, user_id, InsightKind::fact, "User is new to AI, three weeks in role", 0.9, ex);
    add_insight(store, user_id, InsightKind::preference, "User appreciates analogies", 0.9, ex);
    add_insight(store, user_id, InsightKind::preference, "User needs definitions for jargon", 0.9, ex);
    add_insight(store, user_id, InsightKind::behavior,
                "User asks follow-up questions when technical terms appear", 0.8, im);
}

}  // namespace adapt::testing
