#include "aobest/geom2d.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace aobest
{

double wrap_angle_slow(double angle)
{
  double wrapped = std::remainder(angle, 2.0 * kPi);
  // remainder() maps to [-pi, pi]; fold -pi onto +pi
  if (wrapped <= -kPi)
    wrapped += 2.0 * kPi;
  return wrapped;
}

Pose2 inverse(const Pose2& p)
{
  const Vec2 t = rotate({-p.x, -p.y}, -p.theta);
  return {t.x, t.y, wrap_angle(-p.theta)};
}

Vec2 transform_point(const Pose2& p, const Vec2& v)
{
  return rotate(v, p.theta) + Vec2{p.x, p.y};
}

ConvexPolygon::ConvexPolygon(std::vector<Vec2> vertices) : vertices_(std::move(vertices))
{
  const std::size_t n = vertices_.size();
  if (n < 3)
    throw std::invalid_argument("polygon needs at least 3 vertices, got " + std::to_string(n));
  for (const auto& v : vertices_)
    if (!std::isfinite(v.x) || !std::isfinite(v.y))
      throw std::invalid_argument("polygon vertex is not finite");

  normals_.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
  {
    const Vec2& a = vertices_[i];
    const Vec2& b = vertices_[(i + 1) % n];
    const Vec2& c = vertices_[(i + 2) % n];
    const Vec2 edge = b - a;
    const double len = norm(edge);
    if (len <= 1e-12)
      throw std::invalid_argument("polygon has a degenerate edge");
    if (cross(edge, c - b) <= 1e-15)
      throw std::invalid_argument("polygon is not strictly convex with counter-clockwise winding");
    normals_.push_back({edge.y / len, -edge.x / len});
  }
  // a star-shaped turn sequence can pass the local test; total turning must be one revolution
  double turning = 0.0;
  for (std::size_t i = 0; i < n; ++i)
  {
    const Vec2& n0 = normals_[i];
    const Vec2& n1 = normals_[(i + 1) % n];
    turning += std::atan2(cross(n0, n1), dot(n0, n1));
  }
  if (std::abs(turning - 2.0 * kPi) > 1e-6)
    throw std::invalid_argument("polygon winds more than once");
}

ConvexPolygon ConvexPolygon::box(double x0, double y0, double x1, double y1)
{
  return ConvexPolygon({{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}});
}

void WorldPolygon::assign(const ConvexPolygon& poly, const Pose2& pose)
{
  const std::size_t n = poly.size();
  vertices.resize(n);
  normals.resize(n);
  const double c = std::cos(pose.theta);
  const double s = std::sin(pose.theta);
  lo = {std::numeric_limits<double>::max(), std::numeric_limits<double>::max()};
  hi = {std::numeric_limits<double>::lowest(), std::numeric_limits<double>::lowest()};
  for (std::size_t i = 0; i < n; ++i)
  {
    const Vec2& v = poly.vertices()[i];
    const Vec2& nb = poly.normals()[i];
    vertices[i] = {c * v.x - s * v.y + pose.x, s * v.x + c * v.y + pose.y};
    normals[i] = {c * nb.x - s * nb.y, s * nb.x + c * nb.y};
    lo = {std::min(lo.x, vertices[i].x), std::min(lo.y, vertices[i].y)};
    hi = {std::max(hi.x, vertices[i].x), std::max(hi.y, vertices[i].y)};
  }
}

namespace
{

struct AxisResult
{
  double separation{std::numeric_limits<double>::lowest()};
  std::size_t edge{0};
};

// Largest signed separation of `other` from the faces of `ref`.
AxisResult max_separation(const WorldPolygon& ref, const WorldPolygon& other)
{
  AxisResult best;
  for (std::size_t i = 0; i < ref.vertices.size(); ++i)
  {
    const Vec2& n = ref.normals[i];
    const Vec2& v = ref.vertices[i];
    double min_proj = std::numeric_limits<double>::max();
    for (const auto& w : other.vertices)
      min_proj = std::min(min_proj, dot(n, w - v));
    if (min_proj > best.separation)
      best = {min_proj, i};
    if (best.separation > 0.0)
      break;
  }
  return best;
}

// Keeps the part of segment [in0, in1] on the inner side of the plane dot(n, x) <= offset.
std::size_t clip_segment(const std::array<Vec2, 2>& in, std::array<Vec2, 2>& out, const Vec2& n,
                         double offset)
{
  std::size_t count = 0;
  const double d0 = dot(n, in[0]) - offset;
  const double d1 = dot(n, in[1]) - offset;
  if (d0 <= 0.0)
    out[count++] = in[0];
  if (d1 <= 0.0)
    out[count++] = in[1];
  if (d0 * d1 < 0.0)
  {
    const double t = d0 / (d0 - d1);
    out[count++] = in[0] + (in[1] - in[0]) * t;
  }
  return count;
}

}  // namespace

bool collide(const WorldPolygon& a, const WorldPolygon& b, Manifold& out)
{
  out.count = 0;
  const AxisResult sep_a = max_separation(a, b);
  if (sep_a.separation > 0.0)
    return false;
  const AxisResult sep_b = max_separation(b, a);
  if (sep_b.separation > 0.0)
    return false;

  // reference face: the axis of least penetration
  const bool ref_is_a = sep_a.separation >= sep_b.separation;
  const WorldPolygon& ref = ref_is_a ? a : b;
  const WorldPolygon& inc = ref_is_a ? b : a;
  const std::size_t ref_edge = ref_is_a ? sep_a.edge : sep_b.edge;
  const Vec2 ref_normal = ref.normals[ref_edge];

  // incident face: most anti-parallel edge of the other polygon
  std::size_t inc_edge = 0;
  double min_dot = std::numeric_limits<double>::max();
  for (std::size_t i = 0; i < inc.normals.size(); ++i)
  {
    const double d = dot(ref_normal, inc.normals[i]);
    if (d < min_dot)
    {
      min_dot = d;
      inc_edge = i;
    }
  }
  const std::size_t nr = ref.vertices.size();
  const std::size_t ni = inc.vertices.size();
  const Vec2 r0 = ref.vertices[ref_edge];
  const Vec2 r1 = ref.vertices[(ref_edge + 1) % nr];
  std::array<Vec2, 2> incident{inc.vertices[inc_edge], inc.vertices[(inc_edge + 1) % ni]};

  // normal from B into A
  const Vec2 normal = ref_is_a ? -ref_normal : ref_normal;
  const double face_offset = dot(ref_normal, r0);

  const Vec2 tangent = (r1 - r0) * (1.0 / norm(r1 - r0));
  std::array<Vec2, 2> clip1{};
  std::array<Vec2, 2> clip2{};
  if (clip_segment(incident, clip1, -tangent, -dot(tangent, r0)) == 2 &&
      clip_segment(clip1, clip2, tangent, dot(tangent, r1)) == 2)
  {
    for (const auto& p : clip2)
    {
      const double separation = dot(ref_normal, p) - face_offset;
      if (separation <= 0.0)
        out.points[out.count++] = ContactPoint{p, normal, -separation};
    }
  }
  if (out.count == 0)
  {
    // clipping degenerated (tiny faces or deep overlap): report the deepest incident vertex
    std::size_t deepest = 0;
    double min_sep = std::numeric_limits<double>::max();
    for (std::size_t i = 0; i < ni; ++i)
    {
      const double s = dot(ref_normal, inc.vertices[i]) - face_offset;
      if (s < min_sep)
      {
        min_sep = s;
        deepest = i;
      }
    }
    out.points[0] = ContactPoint{inc.vertices[deepest], normal, std::max(0.0, -min_sep)};
    out.count = 1;
  }
  if (out.count == 2)
  {
    const auto& p0 = out.points[0].point;
    const auto& p1 = out.points[1].point;
    if (p1.x < p0.x || (p1.x == p0.x && p1.y < p0.y))
      std::swap(out.points[0], out.points[1]);
  }
  return true;
}

std::vector<ContactPoint> contacts(const ConvexPolygon& bodyA, const Pose2& poseA,
                                   const ConvexPolygon& bodyB, const Pose2& poseB)
{
  WorldPolygon a;
  WorldPolygon b;
  a.assign(bodyA, poseA);
  b.assign(bodyB, poseB);
  Manifold m;
  if (!collide(a, b, m))
    return {};
  return {m.points.begin(), m.points.begin() + static_cast<std::ptrdiff_t>(m.count)};
}

double signed_distance(const WorldPolygon& poly, const Vec2& p)
{
  const std::size_t n = poly.vertices.size();
  double max_face = std::numeric_limits<double>::lowest();
  for (std::size_t i = 0; i < n; ++i)
    max_face = std::max(max_face, dot(poly.normals[i], p - poly.vertices[i]));
  if (max_face <= 0.0)
    return max_face;
  double best = std::numeric_limits<double>::max();
  for (std::size_t i = 0; i < n; ++i)
  {
    const Vec2 a = poly.vertices[i];
    const Vec2 ab = poly.vertices[(i + 1) % n] - a;
    const double t = std::clamp(dot(p - a, ab) / dot(ab, ab), 0.0, 1.0);
    best = std::min(best, norm(p - (a + ab * t)));
  }
  return best;
}

}  // namespace aobest
