#pragma once

#include "adapt/memory/types.hpp"

#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

namespace adapt::memory {

struct InsightFilter {
    std::optional<std::set<InsightKind>> kinds;
    std::optional<double> min_confidence;
    // Defaults to {active} when unset.
    std::optional<std::set<InsightStatus>> statuses;
    // Every term must occur (case-insensitive substring) in the content.
    std::vector<std::string> text_terms;
    std::optional<std::size_t> limit;
};

struct InsightPatch {
    std::optional<std::string> content;
    std::optional<double> confidence;
};

struct SessionInfo {
    std::string session_id;
    int turn_count = 0;
    Millis last_modified = 0;
};

// Storage and retrieval of everything known about users. Makes no decisions
// about what to store; callers do that.
//
// Reads on unknown users return absent/empty. Writes for one user are
// serialized; distinct users proceed in parallel.
class MemoryStore {
public:
    virtual ~MemoryStore() = default;

    // Atomically replaces the profile. Returns what was stored (updated_at refreshed).
    virtual UserProfile upsert_profile(UserProfile profile) = 0;
    virtual std::optional<UserProfile> get_profile(const std::string& user_id) = 0;

    // turn.turn_index must be last+1 (or 1 for a new session); otherwise SequenceError.
    virtual void append_turn(const std::string& user_id, const std::string& session_id,
                             TurnRecord turn) = 0;
    virtual std::vector<TurnRecord> load_session(const std::string& user_id,
                                                 const std::string& session_id) = 0;
    virtual std::vector<SessionInfo> list_sessions(const std::string& user_id) = 0;
    virtual void set_turn_feedback(const std::string& user_id, const std::string& session_id,
                                   int turn_index, Feedback feedback,
                                   std::optional<std::string> text) = 0;

    // Assigns insight_id (and created_at when zero). Returns the id.
    virtual std::string append_insight(InsightRecord insight) = 0;
    // Same as append_insight for a batch belonging to one user; one durable write.
    virtual std::vector<std::string> append_insights(std::vector<InsightRecord> insights) = 0;
    // Sorted by confidence desc, created_at desc, insight_id asc; then truncated.
    virtual std::vector<InsightRecord> query_insights(const std::string& user_id,
                                                      const InsightFilter& filter) = 0;
    virtual std::optional<InsightRecord> get_insight(const std::string& user_id,
                                                     const std::string& insight_id) = 0;
    virtual void set_insight_status(const std::string& user_id, const std::string& insight_id,
                                    InsightStatus status,
                                    std::optional<std::string> superseded_by) = 0;
    virtual InsightRecord update_insight(const std::string& user_id,
                                         const std::string& insight_id,
                                         const InsightPatch& patch) = 0;

    virtual std::vector<std::string> list_users() = 0;
};

// Filesystem backend. Layout under the data root:
//   users/{user_id}.json                   profile object
//   episodic/{user_id}/{session_id}.json   array of turns, ascending turn_index
//   semantic/{user_id}.json                array of insights, append order
class FileMemoryStore final : public MemoryStore {
public:
    explicit FileMemoryStore(std::filesystem::path root);

    const std::filesystem::path& root() const { return root_; }

    UserProfile upsert_profile(UserProfile profile) override;
    std::optional<UserProfile> get_profile(const std::string& user_id) override;

    void append_turn(const std::string& user_id, const std::string& session_id,
                     TurnRecord turn) override;
    std::vector<TurnRecord> load_session(const std::string& user_id,
                                         const std::string& session_id) override;
    std::vector<SessionInfo> list_sessions(const std::string& user_id) override;
    void set_turn_feedback(const std::string& user_id, const std::string& session_id,
                           int turn_index, Feedback feedback,
                           std::optional<std::string> text) override;

    std::string append_insight(InsightRecord insight) override;
    std::vector<std::string> append_insights(std::vector<InsightRecord> insights) override;
    std::vector<InsightRecord> query_insights(const std::string& user_id,
                                              const InsightFilter& filter) override;
    std::optional<InsightRecord> get_insight(const std::string& user_id,
                                             const std::string& insight_id) override;
    void set_insight_status(const std::string& user_id, const std::string& insight_id,
                            InsightStatus status,
                            std::optional<std::string> superseded_by) override;
    InsightRecord update_insight(const std::string& user_id, const std::string& insight_id,
                                 const InsightPatch& patch) override;

    std::vector<std::string> list_users() override;

    std::filesystem::path profile_path(const std::string& user_id) const;
    std::filesystem::path session_path(const std::string& user_id,
                                       const std::string& session_id) const;
    std::filesystem::path semantic_path(const std::string& user_id) const;

private:
    struct InsightCache {
        std::filesystem::file_time_type mtime{};
        std::uintmax_t size = 0;
        std::shared_ptr<const std::vector<InsightRecord>> records;
    };

    std::shared_mutex& user_lock(const std::string& user_id);
    std::shared_ptr<const std::vector<InsightRecord>> load_insights_locked(
        const std::string& user_id);
    void store_insights_locked(const std::string& user_id, std::vector<InsightRecord> records);
    std::vector<TurnRecord> read_session_locked(const std::string& user_id,
                                                const std::string& session_id) const;
    void write_session_locked(const std::string& user_id, const std::string& session_id,
                              const std::vector<TurnRecord>& turns);

    std::filesystem::path root_;
    std::mutex locks_mu_;
    std::unordered_map<std::string, std::unique_ptr<std::shared_mutex>> locks_;
    std::mutex cache_mu_;
    std::unordered_map<std::string, InsightCache> insight_cache_;
};

// Throws ValidationError unless `id` is usable as a single path component.
void validate_path_component(const std::string& id, const char* what);

}  // namespace adapt::memory
