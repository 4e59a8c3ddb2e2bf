#include "adapt/bench/dataset.hpp"

#include "adapt/common/errors.hpp"
#include "adapt/common/util.hpp"

#include <algorithm>
#include <limits>
#include <set>

#include <nlohmann/json.hpp>

namespace adapt::assets {
extern const std::string_view trait_pool_v1;
}

namespace adapt::bench {

using nlohmann::json;

const Trait& TraitPool::at(const std::string& trait_id) const {
    for (const auto& t : traits) {
        if (t.trait_id == trait_id) return t;
    }
    throw NotFoundError("trait " + trait_id);
}

void validate(const TraitPool& pool) {
    if (pool.traits.size() != 20) {
        throw ValidationError("trait pool must hold exactly 20 traits, got " +
                              std::to_string(pool.traits.size()));
    }
    std::set<std::string> ids;
    std::set<std::string> categories;
    for (const auto& t : pool.traits) {
        if (t.trait_id.empty() || !ids.insert(t.trait_id).second) {
            throw ValidationError("trait ids must be unique and non-empty: '" + t.trait_id + "'");
        }
        if (std::find(kCategories.begin(), kCategories.end(), t.category) == kCategories.end()) {
            throw ValidationError("unknown trait category: " + t.category);
        }
        if (t.stems.empty()) throw ValidationError("trait " + t.trait_id + " has no stems");
        categories.insert(t.category);
    }
    if (categories.size() != kCategories.size()) {
        throw ValidationError("every trait category needs at least one trait");
    }
}

namespace {

json trait_to_json(const Trait& t) {
    return {{"trait_id", t.trait_id}, {"text", t.text},   {"category", t.category},
            {"source", t.source},     {"stems", t.stems}, {"probe", t.probe}};
}

Trait trait_from_json(const json& j) {
    Trait t;
    t.trait_id = j.at("trait_id").get<std::string>();
    t.text = j.at("text").get<std::string>();
    t.category = j.at("category").get<std::string>();
    t.source = j.value("source", "canonical");
    t.stems = j.at("stems").get<std::vector<std::string>>();
    t.probe = j.value("probe", "");
    return t;
}

std::string phase_name(Phase p) { return p == Phase::learning ? "learning" : "evaluation"; }

Phase parse_phase(const std::string& s) {
    if (s == "learning") return Phase::learning;
    if (s == "evaluation") return Phase::evaluation;
    throw ValidationError("unknown phase: " + s);
}

}  // namespace

std::string to_string(Phase phase) { return phase_name(phase); }

TraitPool parse_trait_pool(std::string_view json_text) {
    TraitPool pool;
    try {
        auto j = json::parse(json_text);
        for (const auto& t : j.at("traits")) pool.traits.push_back(trait_from_json(t));
    } catch (const json::exception& e) {
        throw ValidationError(std::string("malformed trait pool: ") + e.what());
    }
    validate(pool);
    return pool;
}

TraitPool build_trait_pool() { return parse_trait_pool(assets::trait_pool_v1); }

TraitPool load_trait_pool(const std::filesystem::path& path) {
    try {
        return parse_trait_pool(read_file(path));
    } catch (const ValidationError& e) {
        throw DecodeError(path.string(), e.what());
    }
}

std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
    if (k > n) return 0;
    k = std::min(k, n - k);
    unsigned __int128 result = 1;
    for (std::uint64_t i = 1; i <= k; ++i) {
        result = result * (n - k + i) / i;
        if (result > std::numeric_limits<std::uint64_t>::max()) {
            return std::numeric_limits<std::uint64_t>::max();
        }
    }
    return static_cast<std::uint64_t>(result);
}

std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
    if (bound == 0) throw ValidationError("uniform_below needs a positive bound");
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return x % bound;
}

std::vector<Persona> sample_personas(std::uint64_t seed, std::size_t n, std::size_t k,
                                     const TraitPool& pool) {
    const std::size_t m = pool.traits.size();
    if (k == 0 || k > m) {
        throw InfeasibleError("cannot draw " + std::to_string(k) + " traits from a pool of " +
                              std::to_string(m));
    }
    if (n > binomial(m, k)) {
        throw InfeasibleError("only " + std::to_string(binomial(m, k)) + " distinct " +
                              std::to_string(k) + "-trait sets exist, " + std::to_string(n) +
                              " requested");
    }
    std::mt19937_64 rng(seed);
    std::set<std::vector<std::size_t>> seen;
    std::vector<Persona> personas;
    personas.reserve(n);
    std::vector<std::size_t> index(m);
    while (personas.size() < n) {
        for (std::size_t i = 0; i < m; ++i) index[i] = i;
        for (std::size_t i = 0; i < k; ++i) {
            auto j = i + static_cast<std::size_t>(uniform_below(rng, m - i));
            std::swap(index[i], index[j]);
        }
        std::vector<std::size_t> chosen(index.begin(), index.begin() + static_cast<long>(k));
        std::sort(chosen.begin(), chosen.end());
        if (!seen.insert(chosen).second) continue;

        Persona p;
        char id[32];
        std::snprintf(id, sizeof(id), "persona-%03zu", personas.size() + 1);
        p.persona_id = id;
        for (auto i : chosen) p.traits.push_back(pool.traits[i].trait_id);
        personas.push_back(std::move(p));
    }
    return personas;
}

bool matches_stem(std::string_view text, std::string_view stem) {
    auto lowered_stem = to_lower(stem);
    for (const auto& token : tokenize(text)) {
        if (token.starts_with(lowered_stem)) return true;
    }
    return false;
}

bool mentions_trait(std::string_view text, const Trait& trait) {
    return std::any_of(trait.stems.begin(), trait.stems.end(),
                       [&](const std::string& stem) { return matches_stem(text, stem); });
}

ValidationResult validate_trajectory(const Trajectory& trajectory, const Persona& persona,
                                     const TraitPool& pool) {
    ValidationResult r;
    auto fail = [&r](std::string problem) {
        r.ok = false;
        r.problems.push_back(std::move(problem));
    };
    if (trajectory.turns.size() != kTurnsPerTrajectory) {
        fail("expected 10 turns, got " + std::to_string(trajectory.turns.size()));
        return r;
    }
    for (std::size_t i = 0; i < trajectory.turns.size(); ++i) {
        const auto& t = trajectory.turns[i];
        if (t.turn_index != static_cast<int>(i + 1)) fail("turn " + std::to_string(i + 1) + " has index " + std::to_string(t.turn_index));
        auto expected = t.turn_index <= kLearningTurns ? Phase::learning : Phase::evaluation;
        if (t.phase != expected) fail("turn " + std::to_string(t.turn_index) + " has the wrong phase");
        if (trim(t.user_message).empty()) fail("turn " + std::to_string(t.turn_index) + " is empty");
    }
    for (const auto& id : persona.traits) {
        const auto& trait = pool.at(id);
        bool covered = false;
        for (const auto& t : trajectory.turns) {
            if (t.phase == Phase::learning && mentions_trait(t.user_message, trait)) covered = true;
            if (t.phase == Phase::evaluation && mentions_trait(t.user_message, trait)) {
                fail("evaluation turn " + std::to_string(t.turn_index) + " mentions " + id);
            }
        }
        if (!covered) fail("trait " + id + " never comes up in turns 1-8");
    }
    return r;
}

std::string serialize_dataset(const Dataset& dataset) {
    json pool = json::array();
    for (const auto& t : dataset.pool.traits) pool.push_back(trait_to_json(t));
    json personas = json::array();
    for (const auto& p : dataset.personas) {
        personas.push_back({{"persona_id", p.persona_id}, {"traits", p.traits}});
    }
    json trajectories = json::array();
    for (const auto& tr : dataset.trajectories) {
        json turns = json::array();
        for (const auto& t : tr.turns) {
            turns.push_back({{"turn_index", t.turn_index},
                             {"phase", phase_name(t.phase)},
                             {"user_message", t.user_message}});
        }
        trajectories.push_back({{"persona_id", tr.persona_id}, {"turns", turns}});
    }
    json j{{"version", dataset.version}, {"seed", dataset.seed},          {"pool", pool},
           {"personas", personas},       {"trajectories", trajectories}};
    return j.dump(2) + "\n";
}

Dataset parse_dataset(std::string_view json_text, const std::string& origin) {
    Dataset d;
    try {
        auto j = json::parse(json_text);
        d.version = j.at("version").get<int>();
        if (d.version != kDatasetVersion) {
            throw DecodeError(origin, "unsupported dataset version " + std::to_string(d.version));
        }
        d.seed = j.at("seed").get<std::uint64_t>();
        for (const auto& t : j.at("pool")) d.pool.traits.push_back(trait_from_json(t));
        for (const auto& p : j.at("personas")) {
            d.personas.push_back({p.at("persona_id").get<std::string>(),
                                  p.at("traits").get<std::vector<std::string>>()});
        }
        for (const auto& tr : j.at("trajectories")) {
            Trajectory t;
            t.persona_id = tr.at("persona_id").get<std::string>();
            for (const auto& turn : tr.at("turns")) {
                t.turns.push_back({turn.at("turn_index").get<int>(),
                                   turn.at("user_message").get<std::string>(),
                                   parse_phase(turn.at("phase").get<std::string>())});
            }
            d.trajectories.push_back(std::move(t));
        }
        validate(d.pool);
    } catch (const json::exception& e) {
        throw DecodeError(origin, e.what());
    } catch (const ValidationError& e) {
        throw DecodeError(origin, e.what());
    }
    if (d.personas.size() != d.trajectories.size()) {
        throw DecodeError(origin, "persona and trajectory counts differ");
    }
    for (std::size_t i = 0; i < d.personas.size(); ++i) {
        if (d.personas[i].persona_id != d.trajectories[i].persona_id) {
            throw DecodeError(origin, "trajectory " + std::to_string(i) + " does not match its persona");
        }
        for (const auto& id : d.personas[i].traits) {
            try {
                d.pool.at(id);
            } catch (const NotFoundError&) {
                throw DecodeError(origin, "persona " + d.personas[i].persona_id + " uses unknown trait " + id);
            }
        }
    }
    return d;
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& path) {
    if (dataset.personas.size() != dataset.trajectories.size()) {
        throw ValidationError("every persona needs exactly one trajectory");
    }
    write_file_atomic(path, serialize_dataset(dataset));
}

Dataset load_dataset(const std::filesystem::path& path) {
    return parse_dataset(read_file(path), path.string());
}

}  // namespace adapt::bench
