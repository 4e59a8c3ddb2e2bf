#include "adapt/memory/store.hpp"

#include "adapt/common/errors.hpp"

#include <algorithm>
#include <unordered_set>

#include <nlohmann/json.hpp>

namespace adapt::memory {

namespace fs = std::filesystem;
using nlohmann::json;

void validate_path_component(const std::string& id, const char* what) {
    if (id.empty()) throw ValidationError(std::string(what) + " must be non-empty");
    if (id == "." || id == ".." || id.size() > 200 ||
        id.find_first_of(std::string("/\\\0", 3)) != std::string::npos) {
        throw ValidationError(std::string(what) + " '" + id + "' is not a valid identifier");
    }
}

namespace {

template <typename T>
T decode_file(const fs::path& path) {
    std::string text = read_file(path);
    try {
        return json::parse(text).get<T>();
    } catch (const json::exception& e) {
        throw DecodeError(path.string(), e.what());
    } catch (const ValidationError& e) {
        throw DecodeError(path.string(), e.what());
    }
}

bool insight_order(const InsightRecord& a, const InsightRecord& b) {
    if (a.confidence != b.confidence) return a.confidence > b.confidence;
    if (a.created_at != b.created_at) return a.created_at > b.created_at;
    return a.insight_id < b.insight_id;
}

}  // namespace

FileMemoryStore::FileMemoryStore(fs::path root) : root_(std::move(root)) {
    std::error_code ec;
    for (const char* dir : {"users", "episodic", "semantic"}) {
        fs::create_directories(root_ / dir, ec);
        if (ec) throw IoError("cannot create " + (root_ / dir).string() + ": " + ec.message());
    }
}

fs::path FileMemoryStore::profile_path(const std::string& user_id) const {
    return root_ / "users" / (user_id + ".json");
}

fs::path FileMemoryStore::session_path(const std::string& user_id,
                                       const std::string& session_id) const {
    return root_ / "episodic" / user_id / (session_id + ".json");
}

fs::path FileMemoryStore::semantic_path(const std::string& user_id) const {
    return root_ / "semantic" / (user_id + ".json");
}

std::shared_mutex& FileMemoryStore::user_lock(const std::string& user_id) {
    std::lock_guard guard(locks_mu_);
    auto& slot = locks_[user_id];
    if (!slot) slot = std::make_unique<std::shared_mutex>();
    return *slot;
}

// --- profiles --------------------------------------------------------------

UserProfile FileMemoryStore::upsert_profile(UserProfile profile) {
    validate_path_component(profile.user_id, "user_id");
    profile.updated_at = std::max(now_ms(), profile.created_at);
    validate(profile);
    std::unique_lock lock(user_lock(profile.user_id));
    write_file_atomic(profile_path(profile.user_id), json(profile).dump(2));
    return profile;
}

std::optional<UserProfile> FileMemoryStore::get_profile(const std::string& user_id) {
    validate_path_component(user_id, "user_id");
    std::shared_lock lock(user_lock(user_id));
    auto path = profile_path(user_id);
    if (!fs::exists(path)) return std::nullopt;
    return decode_file<UserProfile>(path);
}

// --- episodic --------------------------------------------------------------

std::vector<TurnRecord> FileMemoryStore::read_session_locked(const std::string& user_id,
                                                             const std::string& session_id) const {
    auto path = session_path(user_id, session_id);
    if (!fs::exists(path)) return {};
    auto turns = decode_file<std::vector<TurnRecord>>(path);
    for (std::size_t i = 0; i < turns.size(); ++i) {
        if (turns[i].turn_index != static_cast<int>(i) + 1) {
            throw DecodeError(path.string(), "turn indices are not contiguous from 1");
        }
    }
    return turns;
}

void FileMemoryStore::write_session_locked(const std::string& user_id,
                                           const std::string& session_id,
                                           const std::vector<TurnRecord>& turns) {
    write_file_atomic(session_path(user_id, session_id), json(turns).dump(2));
}

void FileMemoryStore::append_turn(const std::string& user_id, const std::string& session_id,
                                  TurnRecord turn) {
    validate_path_component(user_id, "user_id");
    validate_path_component(session_id, "session_id");
    if (turn.session_id.empty()) turn.session_id = session_id;
    if (turn.session_id != session_id) {
        throw ValidationError("turn session_id does not match '" + session_id + "'");
    }
    if (turn.timestamp == 0) turn.timestamp = now_ms();

    std::unique_lock lock(user_lock(user_id));
    auto turns = read_session_locked(user_id, session_id);
    int expected = static_cast<int>(turns.size()) + 1;
    if (turn.turn_index != expected) {
        throw SequenceError("session " + session_id + " expects turn " + std::to_string(expected) +
                            ", got " + std::to_string(turn.turn_index));
    }
    turns.push_back(std::move(turn));
    write_session_locked(user_id, session_id, turns);
}

std::vector<TurnRecord> FileMemoryStore::load_session(const std::string& user_id,
                                                      const std::string& session_id) {
    validate_path_component(user_id, "user_id");
    validate_path_component(session_id, "session_id");
    std::shared_lock lock(user_lock(user_id));
    return read_session_locked(user_id, session_id);
}

std::vector<SessionInfo> FileMemoryStore::list_sessions(const std::string& user_id) {
    validate_path_component(user_id, "user_id");
    std::shared_lock lock(user_lock(user_id));
    std::vector<SessionInfo> out;
    auto dir = root_ / "episodic" / user_id;
    if (!fs::exists(dir)) return out;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const auto& p = entry.path();
        if (p.extension() != ".json") continue;
        auto session_id = p.stem().string();
        auto turns = read_session_locked(user_id, session_id);
        SessionInfo info{session_id, static_cast<int>(turns.size()), 0};
        for (const auto& t : turns) info.last_modified = std::max(info.last_modified, t.timestamp);
        out.push_back(std::move(info));
    }
    std::sort(out.begin(), out.end(),
              [](const SessionInfo& a, const SessionInfo& b) { return a.session_id < b.session_id; });
    return out;
}

void FileMemoryStore::set_turn_feedback(const std::string& user_id, const std::string& session_id,
                                        int turn_index, Feedback feedback,
                                        std::optional<std::string> text) {
    validate_path_component(user_id, "user_id");
    validate_path_component(session_id, "session_id");
    std::unique_lock lock(user_lock(user_id));
    auto turns = read_session_locked(user_id, session_id);
    if (turn_index < 1 || turn_index > static_cast<int>(turns.size())) {
        throw NotFoundError("turn " + std::to_string(turn_index) + " of session " + session_id);
    }
    auto& turn = turns[static_cast<std::size_t>(turn_index - 1)];
    turn.feedback = feedback;
    turn.feedback_text = std::move(text);
    write_session_locked(user_id, session_id, turns);
}

// --- semantic --------------------------------------------------------------

std::shared_ptr<const std::vector<InsightRecord>> FileMemoryStore::load_insights_locked(
    const std::string& user_id) {
    auto path = semantic_path(user_id);
    std::error_code ec;
    auto mtime = fs::last_write_time(path, ec);
    if (ec) return std::make_shared<const std::vector<InsightRecord>>();
    auto size = fs::file_size(path, ec);
    {
        std::lock_guard guard(cache_mu_);
        auto it = insight_cache_.find(user_id);
        if (it != insight_cache_.end() && it->second.mtime == mtime && it->second.size == size) {
            return it->second.records;
        }
    }
    auto records =
        std::make_shared<const std::vector<InsightRecord>>(decode_file<std::vector<InsightRecord>>(path));
    std::lock_guard guard(cache_mu_);
    insight_cache_[user_id] = InsightCache{mtime, size, records};
    return records;
}

void FileMemoryStore::store_insights_locked(const std::string& user_id,
                                            std::vector<InsightRecord> records) {
    auto path = semantic_path(user_id);
    write_file_atomic(path, json(records).dump(1));
    std::error_code ec;
    auto mtime = fs::last_write_time(path, ec);
    auto size = fs::file_size(path, ec);
    std::lock_guard guard(cache_mu_);
    if (ec) {
        insight_cache_.erase(user_id);
        return;
    }
    insight_cache_[user_id] =
        InsightCache{mtime, size, std::make_shared<const std::vector<InsightRecord>>(std::move(records))};
}

std::string FileMemoryStore::append_insight(InsightRecord insight) {
    return append_insights({std::move(insight)}).front();
}

std::vector<std::string> FileMemoryStore::append_insights(std::vector<InsightRecord> insights) {
    if (insights.empty()) return {};
    const std::string user_id = insights.front().user_id;
    validate_path_component(user_id, "user_id");
    Millis now = now_ms();
    for (auto& insight : insights) {
        if (insight.user_id != user_id) {
            throw ValidationError("append_insights batch spans several users");
        }
        if (insight.insight_id.empty()) insight.insight_id = random_id();
        if (insight.created_at == 0) insight.created_at = now;
        validate(insight);
        validate_path_component(insight.provenance.session_id, "session_id");
    }

    std::unique_lock lock(user_lock(user_id));
    std::unordered_map<std::string, int> session_sizes;
    for (const auto& insight : insights) {
        const auto& sid = insight.provenance.session_id;
        auto it = session_sizes.find(sid);
        if (it == session_sizes.end()) {
            it = session_sizes.emplace(sid, static_cast<int>(read_session_locked(user_id, sid).size()))
                     .first;
        }
        if (insight.provenance.turn_index > it->second) {
            throw ValidationError("insight provenance refers to missing turn " + sid + "#" +
                                  std::to_string(insight.provenance.turn_index));
        }
    }

    auto current = load_insights_locked(user_id);
    std::vector<InsightRecord> next(*current);
    std::unordered_set<std::string> ids;
    for (const auto& r : next) ids.insert(r.insight_id);
    std::vector<std::string> out;
    for (auto& insight : insights) {
        if (!ids.insert(insight.insight_id).second) {
            throw ValidationError("duplicate insight_id " + insight.insight_id);
        }
        out.push_back(insight.insight_id);
        next.push_back(std::move(insight));
    }
    store_insights_locked(user_id, std::move(next));
    return out;
}

std::vector<InsightRecord> FileMemoryStore::query_insights(const std::string& user_id,
                                                           const InsightFilter& filter) {
    validate_path_component(user_id, "user_id");
    std::shared_ptr<const std::vector<InsightRecord>> all;
    {
        std::shared_lock lock(user_lock(user_id));
        all = load_insights_locked(user_id);
    }
    const std::set<InsightStatus> statuses =
        filter.statuses.value_or(std::set<InsightStatus>{InsightStatus::active});
    std::vector<std::string> terms;
    for (const auto& t : filter.text_terms) terms.push_back(to_lower(t));

    std::vector<InsightRecord> out;
    for (const auto& r : *all) {
        if (!statuses.count(r.status)) continue;
        if (filter.kinds && !filter.kinds->count(r.kind)) continue;
        if (filter.min_confidence && r.confidence < *filter.min_confidence) continue;
        if (!terms.empty()) {
            auto lowered = to_lower(r.content);
            bool all_found = std::all_of(terms.begin(), terms.end(), [&](const std::string& t) {
                return lowered.find(t) != std::string::npos;
            });
            if (!all_found) continue;
        }
        out.push_back(r);
    }
    std::sort(out.begin(), out.end(), insight_order);
    if (filter.limit && out.size() > *filter.limit) out.resize(*filter.limit);
    return out;
}

std::optional<InsightRecord> FileMemoryStore::get_insight(const std::string& user_id,
                                                          const std::string& insight_id) {
    validate_path_component(user_id, "user_id");
    std::shared_lock lock(user_lock(user_id));
    auto all = load_insights_locked(user_id);
    for (const auto& r : *all) {
        if (r.insight_id == insight_id) return r;
    }
    return std::nullopt;
}

void FileMemoryStore::set_insight_status(const std::string& user_id, const std::string& insight_id,
                                         InsightStatus status,
                                         std::optional<std::string> superseded_by) {
    validate_path_component(user_id, "user_id");
    if ((status == InsightStatus::superseded) != superseded_by.has_value()) {
        throw ValidationError("superseded_by is required exactly when status is superseded");
    }
    std::unique_lock lock(user_lock(user_id));
    auto next = *load_insights_locked(user_id);
    auto it = std::find_if(next.begin(), next.end(),
                           [&](const InsightRecord& r) { return r.insight_id == insight_id; });
    if (it == next.end()) throw NotFoundError("insight " + insight_id + " of user " + user_id);
    if (superseded_by) {
        if (*superseded_by == insight_id) throw ValidationError("an insight cannot supersede itself");
        bool known = std::any_of(next.begin(), next.end(), [&](const InsightRecord& r) {
            return r.insight_id == *superseded_by;
        });
        if (!known) throw NotFoundError("superseding insight " + *superseded_by);
    }
    it->status = status;
    it->superseded_by = std::move(superseded_by);
    store_insights_locked(user_id, std::move(next));
}

InsightRecord FileMemoryStore::update_insight(const std::string& user_id,
                                              const std::string& insight_id,
                                              const InsightPatch& patch) {
    validate_path_component(user_id, "user_id");
    std::unique_lock lock(user_lock(user_id));
    auto next = *load_insights_locked(user_id);
    auto it = std::find_if(next.begin(), next.end(),
                           [&](const InsightRecord& r) { return r.insight_id == insight_id; });
    if (it == next.end()) throw NotFoundError("insight " + insight_id + " of user " + user_id);
    InsightRecord updated = *it;
    if (patch.content) updated.content = *patch.content;
    if (patch.confidence) updated.confidence = *patch.confidence;
    validate(updated);
    *it = updated;
    store_insights_locked(user_id, std::move(next));
    return updated;
}

std::vector<std::string> FileMemoryStore::list_users() {
    std::set<std::string> users;
    std::error_code ec;
    for (const auto& entry : fs::directory_iterator(root_ / "users", ec)) {
        if (entry.path().extension() == ".json") users.insert(entry.path().stem().string());
    }
    for (const auto& entry : fs::directory_iterator(root_ / "semantic", ec)) {
        if (entry.path().extension() == ".json") users.insert(entry.path().stem().string());
    }
    for (const auto& entry : fs::directory_iterator(root_ / "episodic", ec)) {
        if (entry.is_directory()) users.insert(entry.path().filename().string());
    }
    return {users.begin(), users.end()};
}

}  // namespace adapt::memory
