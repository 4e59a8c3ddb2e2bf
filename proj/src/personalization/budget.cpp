#include "adapt/personalization/budget.hpp"

#include "adapt/common/errors.hpp"

#include <array>
#include <cmath>

namespace adapt::personalization {

namespace {

constexpr std::int64_t kScale = 1'000'000;

std::int64_t to_ppm(double fraction) {
    if (!(fraction >= 0.0 && fraction <= 1.0)) {
        throw ValidationError("budget fraction out of [0,1]: " + std::to_string(fraction));
    }
    double scaled = fraction * static_cast<double>(kScale);
    auto ppm = std::llround(scaled);
    if (std::abs(scaled - static_cast<double>(ppm)) > 1e-6) {
        throw ValidationError("budget fraction is not a multiple of 1e-6: " + std::to_string(fraction));
    }
    return ppm;
}

}  // namespace

std::map<std::string, std::size_t> BudgetAllocation::per_slot() const {
    return {{"system", system},           {"history", history}, {"tools", tools},
            {"preferences", preferences}, {"query", query},     {"free", free}};
}

BudgetAllocation allocate_budget(std::size_t total_tokens, const BudgetFractions& fractions) {
    if (total_tokens < kMinBudgetTokens) {
        throw BudgetTooSmallError("token budget " + std::to_string(total_tokens) + " is below " +
                                  std::to_string(kMinBudgetTokens));
    }
    const std::array<double, 6> values = {fractions.system,      fractions.history,
                                          fractions.tools,       fractions.preferences,
                                          fractions.query,       fractions.free};
    std::array<std::int64_t, 6> ppm{};
    std::int64_t sum = 0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        ppm[i] = to_ppm(values[i]);
        sum += ppm[i];
    }
    if (sum != kScale) throw ValidationError("budget fractions must sum to 1");

    auto slot = [&](std::size_t i) {
        return static_cast<std::size_t>(static_cast<unsigned __int128>(total_tokens) *
                                        static_cast<unsigned __int128>(ppm[i]) / kScale);
    };
    BudgetAllocation a;
    a.total_tokens = total_tokens;
    a.fractions = fractions;
    a.system = slot(0);
    a.history = slot(1);
    a.tools = slot(2);
    a.preferences = slot(3);
    a.query = slot(4);
    a.free = slot(5);
    return a;
}

}  // namespace adapt::personalization
