#pragma once

#include <cstddef>
#include <map>
#include <string>

namespace adapt::personalization {

// Share of the context window given to each slot. Values are resolved to
// millionths, so they must be multiples of 1e-6 and sum to exactly 1.
struct BudgetFractions {
    double system = 0.10;
    double history = 0.20;
    double tools = 0.10;
    double preferences = 0.15;
    double query = 0.05;
    double free = 0.40;
};

struct BudgetAllocation {
    std::size_t total_tokens = 0;
    BudgetFractions fractions;
    std::size_t system = 0;
    std::size_t history = 0;
    std::size_t tools = 0;
    std::size_t preferences = 0;
    std::size_t query = 0;
    std::size_t free = 0;

    std::map<std::string, std::size_t> per_slot() const;
    bool operator==(const BudgetAllocation&) const = default;
};

inline constexpr std::size_t kMinBudgetTokens = 100;

// floor(total * fraction) per slot. Throws BudgetTooSmallError below 100
// tokens and ValidationError for malformed fractions.
BudgetAllocation allocate_budget(std::size_t total_tokens, const BudgetFractions& fractions = {});

}  // namespace adapt::personalization
