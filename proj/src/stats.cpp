#include "aobest/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace aobest
{

namespace
{

double log_choose(std::uint64_t n, std::uint64_t k)
{
  return std::lgamma(static_cast<double>(n) + 1.0) - std::lgamma(static_cast<double>(k) + 1.0) -
         std::lgamma(static_cast<double>(n - k) + 1.0);
}

// continued fraction for the incomplete beta, modified Lentz
double beta_fraction(double x, double a, double b)
{
  constexpr int kMaxIter = 10000;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny)
    d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m)
  {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny)
      d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny)
      c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny)
      d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny)
      c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps)
      return h;
  }
  return h;
}

}  // namespace

double fisher_exact(std::uint64_t successes_a, std::uint64_t n_a, std::uint64_t successes_b, std::uint64_t n_b)
{
  if (successes_a > n_a || successes_b > n_b)
    throw std::invalid_argument("successes cannot exceed the number of trials");
  const std::uint64_t n = n_a + n_b;
  const std::uint64_t k = successes_a + successes_b;
  if (n == 0 || k == 0 || k == n || n_a == 0 || n_b == 0)
    return 1.0;

  const double log_total = log_choose(n, k);
  const auto log_p = [&](std::uint64_t x) { return log_choose(n_a, x) + log_choose(n_b, k - x) - log_total; };

  const std::uint64_t lo = k > n_b ? k - n_b : 0;
  const std::uint64_t hi = std::min(k, n_a);
  const double observed = log_p(successes_a);
  // relative tolerance so tables tied with the observed one are not lost to rounding
  const double threshold = observed + std::log1p(1e-7);
  double p = 0.0;
  for (std::uint64_t x = lo; x <= hi; ++x)
  {
    const double lp = log_p(x);
    if (lp <= threshold)
      p += std::exp(lp);
  }
  return std::clamp(p, 0.0, 1.0);
}

double incomplete_beta(double x, double a, double b)
{
  if (!(a > 0.0) || !(b > 0.0))
    throw std::invalid_argument("incomplete beta needs positive shape parameters");
  if (x <= 0.0)
    return 0.0;
  if (x >= 1.0)
    return 1.0;
  const double log_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  if (x < (a + 1.0) / (a + b + 2.0))
    return std::exp(log_front) * beta_fraction(x, a, b) / a;
  return 1.0 - std::exp(log_front) * beta_fraction(1.0 - x, b, a) / b;
}

double student_t_two_sided(double t, double df)
{
  if (!(df > 0.0))
    throw std::invalid_argument("degrees of freedom must be positive");
  if (std::isinf(t))
    return 0.0;
  const double x = df / (df + t * t);
  return std::clamp(incomplete_beta(x, 0.5 * df, 0.5), 0.0, 1.0);
}

WelchResult welch_t(std::span<const double> a, std::span<const double> b)
{
  if (a.size() < 2 || b.size() < 2)
    throw std::invalid_argument("each sample needs at least two values");
  const auto moments = [](std::span<const double> s) {
    const double n = static_cast<double>(s.size());
    const double mean = std::accumulate(s.begin(), s.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : s)
      ss += (v - mean) * (v - mean);
    return std::pair{mean, ss / (n - 1.0)};
  };
  const auto [ma, va] = moments(a);
  const auto [mb, vb] = moments(b);
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double sa = va / na;
  const double sb = vb / nb;

  WelchResult r;
  if (sa + sb == 0.0)
  {
    if (ma == mb)
      return r;
    r.t = ma > mb ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
    r.df = na + nb - 2.0;
    r.p = 0.0;
    return r;
  }
  r.t = (ma - mb) / std::sqrt(sa + sb);
  r.df = (sa + sb) * (sa + sb) / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
  r.p = student_t_two_sided(r.t, r.df);
  return r;
}

}  // namespace aobest
