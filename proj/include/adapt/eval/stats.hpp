#pragma once

#include <vector>

namespace adapt::eval {

struct WelchResult {
    double t = 0.0;
    double df = 0.0;
    double p_two_sided = 1.0;
};

double mean(const std::vector<double>& xs);
// Unbiased (n - 1) sample variance.
double sample_variance(const std::vector<double>& xs);

// Regularized incomplete beta I_x(a, b) via Lentz's continued fraction.
double incomplete_beta(double a, double b, double x);

// P(T > t) for Student's t with `df` degrees of freedom.
double student_t_sf(double t, double df);

// Welch's unequal-variance t-test. Throws StatsError when either sample has
// fewer than two values or both variances are zero.
WelchResult welch_t(const std::vector<double>& a, const std::vector<double>& b);

// (mean(a) - mean(b)) / pooled sd. Throws StatsError when the pooled variance
// is zero or either sample has fewer than two values.
double cohens_d(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace adapt::eval
