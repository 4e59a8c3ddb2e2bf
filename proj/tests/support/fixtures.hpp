#pragma once

#include "adapt/memory/store.hpp"
#include "adapt/memory/types.hpp"

#include <filesystem>
#include <random>
#include <string>

namespace adapt::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir();
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

private:
    std::filesystem::path path_;
};

// Random printable text of 1..max_len code points, mixing ASCII, quotes,
// newlines and a few multi-byte characters.
std::string random_text(std::mt19937_64& rng, std::size_t max_len);
std::string random_id_token(std::mt19937_64& rng);

memory::UserProfile random_profile(std::mt19937_64& rng, const std::string& user_id);
memory::TurnRecord random_turn(std::mt19937_64& rng, const std::string& session_id, int index);
memory::InsightRecord random_insight(std::mt19937_64& rng, const std::string& user_id,
                                     const std::string& session_id, int turn_index);

memory::TurnRecord make_turn(const std::string& session_id, int index, std::string user_message,
                             std::string assistant_message = "ok");

// Senior ML engineer who wants code and depth; also has an unrelated
// meeting-time preference.
void seed_sarah(memory::MemoryStore& store, const std::string& user_id = "sarah");
// Product manager new to AI who wants analogies and defined terms.
void seed_marcus(memory::MemoryStore& store, const std::string& user_id = "marcus");

}  // namespace adapt::testing
