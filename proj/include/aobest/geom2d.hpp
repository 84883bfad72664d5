#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace aobest
{

inline constexpr double kPi = 3.14159265358979323846;

double wrap_angle_slow(double angle);

/// Wraps an angle to (-pi, pi].
inline double wrap_angle(double angle)
{
  return angle > -kPi && angle <= kPi ? angle : wrap_angle_slow(angle);
}

struct Vec2
{
  double x{0.0};
  double y{0.0};

  constexpr Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  constexpr Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  constexpr Vec2 operator-() const { return {-x, -y}; }
  constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
  constexpr bool operator==(const Vec2&) const = default;
};

constexpr double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(const Vec2& a, const Vec2& b) { return a.x * b.y - a.y * b.x; }
/// Cross product of a scalar (out-of-plane) with a vector: w x v.
constexpr Vec2 cross(double w, const Vec2& v) { return {-w * v.y, w * v.x}; }
inline double norm(const Vec2& v) { return std::hypot(v.x, v.y); }

/// Planar rigid transform (SE(2)); theta is kept in (-pi, pi].
struct Pose2
{
  double x{0.0};
  double y{0.0};
  double theta{0.0};

  static constexpr Pose2 identity() { return {}; }
  Vec2 translation() const { return {x, y}; }
  bool operator==(const Pose2&) const = default;
};

/// Planar twist expressed in the world frame.
struct Twist2
{
  double vx{0.0};
  double vy{0.0};
  double omega{0.0};

  bool operator==(const Twist2&) const = default;
};

/// Planar wrench (force and torque) expressed in the world frame.
struct Wrench2
{
  double fx{0.0};
  double fy{0.0};
  double tau{0.0};

  bool operator==(const Wrench2&) const = default;
};

Pose2 inverse(const Pose2& p);
Vec2 transform_point(const Pose2& p, const Vec2& v);

inline Vec2 rotate(const Vec2& v, double angle)
{
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

inline Pose2 compose(const Pose2& a, const Pose2& b)
{
  const Vec2 t = rotate({b.x, b.y}, a.theta);
  return {a.x + t.x, a.y + t.y, wrap_angle(a.theta + b.theta)};
}

struct PoseError
{
  double dx{0.0};
  double dy{0.0};
  double dtheta{0.0};
};

/// World-frame deviation of `actual` from `desired`, angle wrapped to (-pi, pi].
inline PoseError pose_error(const Pose2& actual, const Pose2& desired)
{
  return {actual.x - desired.x, actual.y - desired.y, wrap_angle(actual.theta - desired.theta)};
}

/**
 * Strictly convex polygon in body coordinates, counter-clockwise winding.
 * Construction validates the invariants and throws std::invalid_argument.
 */
class ConvexPolygon
{
public:
  explicit ConvexPolygon(std::vector<Vec2> vertices);

  /// Axis-aligned box spanning [x0, x1] x [y0, y1].
  static ConvexPolygon box(double x0, double y0, double x1, double y1);

  const std::vector<Vec2>& vertices() const { return vertices_; }
  /// Outward unit edge normals; normals()[i] belongs to edge (v[i], v[i+1]).
  const std::vector<Vec2>& normals() const { return normals_; }
  std::size_t size() const { return vertices_.size(); }

  bool operator==(const ConvexPolygon& o) const { return vertices_ == o.vertices_; }

private:
  std::vector<Vec2> vertices_;
  std::vector<Vec2> normals_;
};

/// Contact between body A and body B. The normal points from B into A.
struct ContactPoint
{
  Vec2 point;
  Vec2 normal;
  double penetration{0.0};
};

/// Polygon placed in the world: vertices and normals already transformed.
struct WorldPolygon
{
  std::vector<Vec2> vertices;
  std::vector<Vec2> normals;
  Vec2 lo;
  Vec2 hi;

  void assign(const ConvexPolygon& poly, const Pose2& pose);
  bool aabb_overlaps(const WorldPolygon& o, double margin = 0.0) const
  {
    return lo.x <= o.hi.x + margin && o.lo.x <= hi.x + margin && lo.y <= o.hi.y + margin &&
           o.lo.y <= hi.y + margin;
  }
};

/// Up to two contact points sharing one normal.
struct Manifold
{
  std::array<ContactPoint, 2> points{};
  std::size_t count{0};

  std::span<const ContactPoint> view() const { return {points.data(), count}; }
};

/// Allocation-free narrow phase used by the simulator. Returns false when separated.
bool collide(const WorldPolygon& a, const WorldPolygon& b, Manifold& out);

/**
 * Contact manifold between two placed convex polygons (separating-axis test
 * over the edge normals of both, reference/incident face clipping).
 * Empty iff separated; otherwise at most two points sorted by coordinates.
 */
std::vector<ContactPoint> contacts(const ConvexPolygon& bodyA, const Pose2& poseA,
                                   const ConvexPolygon& bodyB, const Pose2& poseB);

/// Signed distance from a point to a polygon boundary (negative inside).
double signed_distance(const WorldPolygon& poly, const Vec2& p);

}  // namespace aobest
