#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

#include "aobest/stats.hpp"
#include "oracles.hpp"

using namespace aobest;

TEST_SUITE("stats")
{
  TEST_CASE("fisher examples")
  {
    CHECK(fisher_exact(5, 10, 5, 10) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(fisher_exact(3, 4, 1, 4) == doctest::Approx(0.4857142857).epsilon(1e-9));
    CHECK(fisher_exact(67, 70, 47, 70) == doctest::Approx(1.6308e-5).epsilon(1e-3));
    CHECK(fisher_exact(67, 70, 47, 70) == doctest::Approx(oracle::fisher_enumerate(67, 70, 47, 70)).epsilon(1e-10));
    CHECK(fisher_exact(0, 0, 0, 0) == 1.0);
    CHECK(fisher_exact(0, 10, 0, 10) == 1.0);
    CHECK(fisher_exact(10, 10, 10, 10) == 1.0);
    CHECK_THROWS_AS(fisher_exact(11, 10, 0, 10), std::invalid_argument);
  }

  TEST_CASE("fisher matches exhaustive enumeration on small margins")
  {
    double worst = 0.0;
    for (unsigned na = 0; na <= 30; ++na)
      for (unsigned nb = 0; nb <= 30; ++nb)
        for (unsigned a = 0; a <= na; ++a)
          for (unsigned b = 0; b <= nb; ++b)
          {
            const double p = fisher_exact(a, na, b, nb);
            const double expected = oracle::fisher_enumerate(a, na, b, nb);
            worst = std::max(worst, std::abs(p - expected));
          }
    CHECK(worst <= 1e-12);
  }

  TEST_CASE("fisher symmetries and range")
  {
    std::mt19937_64 rng(12);
    std::uniform_int_distribution<unsigned> n(1, 80);
    for (int i = 0; i < 500; ++i)
    {
      const unsigned na = n(rng), nb = n(rng);
      const unsigned a = std::uniform_int_distribution<unsigned>(0, na)(rng);
      const unsigned b = std::uniform_int_distribution<unsigned>(0, nb)(rng);
      const double p = fisher_exact(a, na, b, nb);
      CHECK(p >= 0.0);
      CHECK(p <= 1.0);
      CHECK(fisher_exact(b, nb, a, na) == doctest::Approx(p).epsilon(1e-12));
      CHECK(fisher_exact(na - a, na, nb - b, nb) == doctest::Approx(p).epsilon(1e-12));
    }
  }

  TEST_CASE("welch examples")
  {
    const std::vector<double> x{0.1, 0.4, 0.3, 0.2};
    const WelchResult same = welch_t(x, x);
    CHECK(same.t == 0.0);
    CHECK(same.p == doctest::Approx(1.0).epsilon(1e-12));

    const std::vector<double> zeros(4, 0.0), ones(4, 1.0);
    CHECK(welch_t(zeros, ones).p == 0.0);
    CHECK(std::isinf(welch_t(zeros, ones).t));
    CHECK(welch_t(zeros, zeros).p == 1.0);

    const std::vector<double> one{1.0};
    CHECK_THROWS_AS(welch_t(one, x), std::invalid_argument);
    CHECK_THROWS_AS(welch_t(x, one), std::invalid_argument);
  }

  TEST_CASE("welch matches the defining formulas and a quadrature oracle")
  {
    std::mt19937_64 rng(31);
    std::uniform_int_distribution<int> size(2, 20);
    std::uniform_real_distribution<double> mean(-1.0, 1.0);
    std::uniform_real_distribution<double> spread(0.05, 1.0);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial)
    {
      std::vector<double> a(size(rng)), b(size(rng));
      std::normal_distribution<double> da(mean(rng), spread(rng)), db(mean(rng), spread(rng));
      for (auto& v : a)
        v = da(rng);
      for (auto& v : b)
        v = db(rng);

      const auto moments = [](const std::vector<double>& s) {
        double m = 0.0;
        for (double v : s)
          m += v;
        m /= s.size();
        double ss = 0.0;
        for (double v : s)
          ss += (v - m) * (v - m);
        return std::pair{m, ss / (s.size() - 1)};
      };
      const auto [ma, va] = moments(a);
      const auto [mb, vb] = moments(b);
      const double qa = va / a.size(), qb = vb / b.size();
      const double t = (ma - mb) / std::sqrt(qa + qb);
      const double df = (qa + qb) * (qa + qb) / (qa * qa / (a.size() - 1) + qb * qb / (b.size() - 1));

      const WelchResult r = welch_t(a, b);
      CHECK(r.t == doctest::Approx(t).epsilon(1e-12));
      CHECK(r.df == doctest::Approx(df).epsilon(1e-12));
      CHECK(r.p >= 0.0);
      CHECK(r.p <= 1.0);
      worst = std::max(worst, std::abs(r.p - oracle::t_two_sided_quadrature(t, df)));
    }
    CHECK(worst <= 1e-6);
  }

  TEST_CASE("t tail and incomplete beta reference points")
  {
    // Cauchy: P(|T| >= 1) = 1/2
    CHECK(student_t_two_sided(1.0, 1.0) == doctest::Approx(0.5).epsilon(1e-12));
    // df = 2 has the closed form 1 - t / sqrt(2 + t^2)
    for (double t : {0.3, 1.0, 2.5, 10.0})
      CHECK(student_t_two_sided(t, 2.0) == doctest::Approx(1.0 - t / std::sqrt(2.0 + t * t)).epsilon(1e-10));
    CHECK(student_t_two_sided(0.0, 5.0) == 1.0);
    CHECK(student_t_two_sided(-2.0, 7.0) == student_t_two_sided(2.0, 7.0));
    CHECK(incomplete_beta(0.0, 2.0, 3.0) == 0.0);
    CHECK(incomplete_beta(1.0, 2.0, 3.0) == 1.0);
    // I_x(1, 1) = x and I_x(a, 1) = x^a
    CHECK(incomplete_beta(0.37, 1.0, 1.0) == doctest::Approx(0.37).epsilon(1e-12));
    CHECK(incomplete_beta(0.6, 3.0, 1.0) == doctest::Approx(0.216).epsilon(1e-12));
    CHECK(incomplete_beta(0.3, 2.5, 4.0) + incomplete_beta(0.7, 4.0, 2.5) == doctest::Approx(1.0).epsilon(1e-12));
  }
}
