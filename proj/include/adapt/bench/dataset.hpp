#pragma once

#include "adapt/llm/gateway.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace adapt::bench {

inline constexpr int kDatasetVersion = 1;
inline constexpr int kTurnsPerTrajectory = 10;
inline constexpr int kLearningTurns = 8;

struct Trait {
    std::string trait_id;
    std::string text;
    std::string category;
    // "canonical" for attributes named in the benchmark description,
    // "invented" for the padding added here.
    std::string source;
    // Word prefixes the validator looks for.
    std::vector<std::string> stems;
    // A natural user message that reveals the trait.
    std::string probe;

    bool operator==(const Trait&) const = default;
};

struct TraitPool {
    std::vector<Trait> traits;

    const Trait& at(const std::string& trait_id) const;
    bool operator==(const TraitPool&) const = default;
};

inline const std::vector<std::string> kCategories = {"dietary", "living", "professional",
                                                     "environmental", "lifestyle"};

// Throws ValidationError: exactly 20 traits, unique ids, known categories,
// every category present, non-empty stems.
void validate(const TraitPool& pool);

// The pool shipped as data/trait_pool_v1.json (embedded at build time).
TraitPool build_trait_pool();
TraitPool load_trait_pool(const std::filesystem::path& path);
TraitPool parse_trait_pool(std::string_view json_text);

struct Persona {
    std::string persona_id;
    std::vector<std::string> traits;

    bool operator==(const Persona&) const = default;
};

enum class Phase { learning, evaluation };
std::string to_string(Phase phase);

struct TrajectoryTurn {
    int turn_index = 0;
    std::string user_message;
    Phase phase = Phase::learning;

    bool operator==(const TrajectoryTurn&) const = default;
};

struct Trajectory {
    std::string persona_id;
    std::vector<TrajectoryTurn> turns;

    bool operator==(const Trajectory&) const = default;
};

struct Dataset {
    int version = kDatasetVersion;
    std::uint64_t seed = 0;
    TraitPool pool;
    std::vector<Persona> personas;
    std::vector<Trajectory> trajectories;

    bool operator==(const Dataset&) const = default;
};

// C(n, k), saturating at UINT64_MAX.
std::uint64_t binomial(std::uint64_t n, std::uint64_t k);

// Uniform integer in [0, bound) from raw 64-bit output by rejection, so the
// sequence is identical on every standard library.
std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound);

// Each persona is a uniform k-subset of the pool (trait ids in pool order);
// a repeated set is redrawn. Throws InfeasibleError when k is 0 or exceeds the
// pool, or n exceeds C(pool, k).
std::vector<Persona> sample_personas(std::uint64_t seed, std::size_t n, std::size_t k,
                                     const TraitPool& pool);

// Lowercased tokens of `text` that start with `stem`.
bool matches_stem(std::string_view text, std::string_view stem);
bool mentions_trait(std::string_view text, const Trait& trait);

struct ValidationResult {
    bool ok = true;
    std::vector<std::string> problems;
};

// Ten turns indexed 1..10, phases learning x8 then evaluation x2, every
// persona trait matched in turns 1-8, and no persona trait stem in turns 9-10.
ValidationResult validate_trajectory(const Trajectory& trajectory, const Persona& persona,
                                     const TraitPool& pool);

std::string_view synthesis_prompt_template();
std::string render_synthesis_prompt(const Persona& persona, const TraitPool& pool);

// Parses {"turns": [{turn_index, user_message, phase?}, ...]}; phases are
// assigned from the index. Returns nullopt when the reply has no usable array.
std::optional<Trajectory> parse_trajectory_reply(std::string_view reply, const std::string& persona_id);

inline constexpr int kSynthesisRegenerations = 3;

// One synthesizer call plus up to three regenerations when the candidate
// fails validation. Throws SynthesisError carrying the last raw reply.
Trajectory synthesize_trajectory(const Persona& persona, const TraitPool& pool,
                                 const llm::Gateway& gateway);

// Samples personas and synthesizes one trajectory each with bounded
// parallelism; output order follows persona order.
Dataset generate_dataset(std::uint64_t seed, std::size_t n, std::size_t k, const TraitPool& pool,
                         const llm::Gateway& gateway, std::size_t parallelism = 4);

std::string serialize_dataset(const Dataset& dataset);
Dataset parse_dataset(std::string_view json_text, const std::string& origin = "<memory>");
void save_dataset(const Dataset& dataset, const std::filesystem::path& path);
// Throws DecodeError naming the file on version or schema mismatch.
Dataset load_dataset(const std::filesystem::path& path);

// Deterministic offline synthesizer: reveals each listed trait with its probe,
// pads the learning phase with neutral follow-ups and picks two evaluation
// topics that share no stem with the pool.
void install_scripted_synthesizer(llm::Gateway& gateway, const TraitPool& pool);

// Novel-topic requests used for the evaluation phase by the scripted synthesizer.
const std::vector<std::string>& evaluation_topics();

}  // namespace adapt::bench
