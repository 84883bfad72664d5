#pragma once

#include <cstdint>
#include <span>

namespace aobest
{

/// Two-sided Fisher exact test for the table [[a, n_a - a], [b, n_b - b]].
/// Throws std::invalid_argument if a count exceeds its total.
double fisher_exact(std::uint64_t successes_a, std::uint64_t n_a, std::uint64_t successes_b, std::uint64_t n_b);

struct WelchResult
{
  double t{0.0};
  double df{0.0};
  double p{1.0};
};

/// Welch's unequal-variance t-test, two-sided. Each sample needs at least two values.
WelchResult welch_t(std::span<const double> a, std::span<const double> b);

/// Regularized incomplete beta function I_x(a, b).
double incomplete_beta(double x, double a, double b);

/// Two-sided tail probability P(|T| >= |t|) of Student's t with `df` degrees of freedom.
double student_t_two_sided(double t, double df);

}  // namespace aobest
