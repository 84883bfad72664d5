#include <doctest.h>

#include <cmath>
#include <random>

#include "aobest/geom2d.hpp"
#include "oracles.hpp"

using namespace aobest;

namespace
{
void check_pose(const Pose2& a, const Pose2& b, double tol)
{
  CHECK(std::abs(a.x - b.x) <= tol);
  CHECK(std::abs(a.y - b.y) <= tol);
  CHECK(std::abs(wrap_angle(a.theta - b.theta)) <= tol);
}

// wrap by repeated subtraction, independent of std::remainder
double wrap_reference(double a)
{
  while (a > kPi)
    a -= 2.0 * kPi;
  while (a <= -kPi)
    a += 2.0 * kPi;
  return a;
}
}  // namespace

TEST_SUITE("geom2d")
{
  TEST_CASE("compose with identity and inverse")
  {
    const Pose2 p{0.3, -1.2, 2.5};
    check_pose(compose(Pose2::identity(), p), p, 0.0);
    check_pose(compose(p, Pose2::identity()), p, 1e-15);
    check_pose(compose(p, inverse(p)), Pose2::identity(), 1e-12);
    check_pose(compose(inverse(p), p), Pose2::identity(), 1e-12);
  }

  TEST_CASE("quarter turn maps +x to +y")
  {
    const Pose2 r = compose({1.0, 0.0, kPi / 2.0}, {1.0, 0.0, 0.0});
    CHECK(r.x == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.y == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.theta == doctest::Approx(kPi / 2.0).epsilon(1e-12));
  }

  TEST_CASE("composition renormalizes theta")
  {
    const Pose2 r = compose({0.0, 0.0, 3.0}, {0.0, 0.0, 3.0});
    CHECK(r.theta > -kPi);
    CHECK(r.theta <= kPi);
    CHECK(r.theta == doctest::Approx(wrap_reference(6.0)).epsilon(1e-12));
  }

  TEST_CASE("wrap_angle range and pi boundary")
  {
    CHECK(wrap_angle(kPi) == doctest::Approx(kPi));
    CHECK(wrap_angle(-kPi) == doctest::Approx(kPi));
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-50.0, 50.0);
    for (int i = 0; i < 1000; ++i)
    {
      const double a = u(rng);
      const double w = wrap_angle(a);
      CHECK(w > -kPi);
      CHECK(w <= kPi);
      CHECK(std::abs(w - wrap_reference(a)) < 1e-12);
    }
  }

  TEST_CASE("pose_error examples")
  {
    const Pose2 p{0.4, 0.1, 1.0};
    const PoseError z = pose_error(p, p);
    CHECK(z.dx == 0.0);
    CHECK(z.dy == 0.0);
    CHECK(z.dtheta == 0.0);

    const PoseError t = pose_error({0.01, 0.0, 0.0}, {0.0, 0.0, 0.0});
    CHECK(t.dx == doctest::Approx(0.01));
    CHECK(t.dy == 0.0);
    CHECK(t.dtheta == 0.0);

    const PoseError w = pose_error({0.0, 0.0, 3.1}, {0.0, 0.0, -3.1});
    CHECK(std::abs(w.dtheta - wrap_reference(6.2)) < 1e-12);
    CHECK(w.dtheta == doctest::Approx(-0.0831853).epsilon(1e-6));
  }

  TEST_CASE("polygon validation")
  {
    CHECK_THROWS_AS(ConvexPolygon({{0, 0}, {1, 0}}), std::invalid_argument);
    // clockwise
    CHECK_THROWS_AS(ConvexPolygon({{0, 0}, {0, 1}, {1, 1}, {1, 0}}), std::invalid_argument);
    // reflex vertex
    CHECK_THROWS_AS(ConvexPolygon({{0, 0}, {2, 0}, {1, 0.5}, {2, 2}, {0, 2}}), std::invalid_argument);
    // collinear vertex breaks strict convexity
    CHECK_THROWS_AS(ConvexPolygon({{0, 0}, {1, 0}, {2, 0}, {1, 1}}), std::invalid_argument);
    // self-overlapping star traced twice around
    CHECK_THROWS_AS(ConvexPolygon({{1, 0}, {-0.8, 0.6}, {0.3, -0.95}, {0.3, 0.95}, {-0.8, -0.6}}),
                    std::invalid_argument);
    CHECK_THROWS_AS(ConvexPolygon({{0, 0}, {1, 0}, {0, std::nan("")}}), std::invalid_argument);
    const ConvexPolygon b = ConvexPolygon::box(0, 0, 2, 1);
    CHECK(b.size() == 4);
    for (const auto& n : b.normals())
      CHECK(norm(n) == doctest::Approx(1.0).epsilon(1e-12));
  }

  TEST_CASE("separated squares have no contacts")
  {
    const ConvexPolygon sq = ConvexPolygon::box(-0.5, -0.5, 0.5, 0.5);
    CHECK(contacts(sq, {0, 0, 0}, sq, {2.0, 0, 0}).empty());
    CHECK(contacts(sq, {0, 0, 0.3}, sq, {0, -2.5, -0.2}).empty());
  }

  TEST_CASE("square resting into a wide box")
  {
    const ConvexPolygon sq = ConvexPolygon::box(-0.5, -0.5, 0.5, 0.5);
    const ConvexPolygon floor = ConvexPolygon::box(-10, -1, 10, 0);
    const auto cs = contacts(sq, {0.2, 0.5 - 0.001, 0.0}, floor, Pose2::identity());
    REQUIRE(cs.size() == 2);
    for (const auto& c : cs)
    {
      CHECK(std::abs(c.penetration - 0.001) < 1e-9);
      CHECK(std::abs(c.normal.x) < 1e-12);
      CHECK(c.normal.y == doctest::Approx(1.0).epsilon(1e-12));
    }
    // sorted by (x, y)
    CHECK(cs[0].point.x < cs[1].point.x);
  }

  TEST_CASE("coincident squares report contact")
  {
    const ConvexPolygon sq = ConvexPolygon::box(-0.5, -0.5, 0.5, 0.5);
    const auto cs = contacts(sq, {0.1, 0.2, 0.3}, sq, {0.1, 0.2, 0.3});
    REQUIRE_FALSE(cs.empty());
    CHECK(cs.size() <= 2);
    for (const auto& c : cs)
      CHECK(c.penetration == doctest::Approx(1.0).epsilon(1e-9));
  }

  TEST_CASE("random separated pairs never report contact")
  {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> ang(-kPi, kPi);
    std::uniform_real_distribution<double> gap(1e-6, 0.02);
    for (int trial = 0; trial < 300; ++trial)
    {
      const ConvexPolygon a(oracle::random_convex(rng, 0.05));
      const ConvexPolygon b(oracle::random_convex(rng, 0.04));
      const Pose2 pa{0.0, 0.0, ang(rng)};
      const double tb = ang(rng);
      // push B along a random axis until its projection clears A's by `gap`
      const double phi = ang(rng);
      const Vec2 axis{std::cos(phi), std::sin(phi)};
      double a_max = -1e9, b_min = 1e9;
      for (const auto& v : a.vertices())
        a_max = std::max(a_max, dot(transform_point(pa, v), axis));
      for (const auto& v : b.vertices())
        b_min = std::min(b_min, dot(rotate(v, tb), axis));
      const double shift = a_max - b_min + gap(rng);
      const Pose2 pb{axis.x * shift, axis.y * shift, tb};
      CHECK(contacts(a, pa, b, pb).empty());
    }
  }

  TEST_CASE("penetration matches Minkowski-difference oracle and is symmetric")
  {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> ang(-kPi, kPi);
    std::uniform_real_distribution<double> off(-0.03, 0.03);
    int checked = 0;
    while (checked < 100)
    {
      const ConvexPolygon a(oracle::random_convex(rng, 0.05));
      const ConvexPolygon b(oracle::random_convex(rng, 0.04));
      const Pose2 pa{off(rng), off(rng), ang(rng)};
      const Pose2 pb{off(rng), off(rng), ang(rng)};
      std::vector<Vec2> wa, wb;
      for (const auto& v : a.vertices())
        wa.push_back(transform_point(pa, v));
      for (const auto& v : b.vertices())
        wb.push_back(transform_point(pb, v));
      const double expected = oracle::penetration_depth(wa, wb);
      if (expected < 1e-7)
        continue;
      ++checked;
      const auto ab = contacts(a, pa, b, pb);
      const auto ba = contacts(b, pb, a, pa);
      REQUIRE_FALSE(ab.empty());
      REQUIRE_FALSE(ba.empty());
      double pen_ab = 0.0, pen_ba = 0.0;
      for (const auto& c : ab)
      {
        pen_ab = std::max(pen_ab, c.penetration);
        CHECK(c.penetration >= 0.0);
        CHECK(std::abs(norm(c.normal) - 1.0) < 1e-9);
      }
      for (const auto& c : ba)
        pen_ba = std::max(pen_ba, c.penetration);
      CHECK(std::abs(pen_ab - expected) < 1e-6);
      CHECK(std::abs(pen_ab - pen_ba) < 1e-9);
      CHECK(std::abs(ab[0].normal.x + ba[0].normal.x) < 1e-9);
      CHECK(std::abs(ab[0].normal.y + ba[0].normal.y) < 1e-9);
    }
  }

  TEST_CASE("signed distance to a box")
  {
    WorldPolygon w;
    w.assign(ConvexPolygon::box(0, 0, 2, 1), Pose2::identity());
    CHECK(signed_distance(w, {1.0, 0.5}) == doctest::Approx(-0.5));
    CHECK(signed_distance(w, {1.0, 1.25}) == doctest::Approx(0.25));
  }
}
