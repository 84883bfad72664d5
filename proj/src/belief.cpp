#include "aobest/belief.hpp"

#include <algorithm>
#include <stdexcept>

namespace aobest
{

std::size_t Belief::alive_count() const
{
  return static_cast<std::size_t>(
      std::count_if(particles.begin(), particles.end(), [](const Particle& p) { return p.alive; }));
}

double Belief::alive_fraction() const
{
  if (particles.empty())
    return 0.0;
  return static_cast<double>(alive_count()) / static_cast<double>(particles.size());
}

Belief sample_initial_belief(const Pose2& nominal_grasp, const UncertaintyModel& model, std::size_t n,
                             Rng& rng, double t_start)
{
  if (n == 0)
    throw std::invalid_argument("initial belief needs at least one particle");
  if (model.sigma_trans < 0.0 || model.sigma_rot < 0.0)
    throw std::invalid_argument("uncertainty standard deviations must be non-negative");

  Belief b;
  b.setpoint_pose = nominal_grasp;
  b.time = t_start;
  b.particles.reserve(n);
  std::normal_distribution<double> unit(0.0, 1.0);
  const Pose2 to_frame = inverse(nominal_grasp);
  for (std::size_t i = 0; i < n; ++i)
  {
    // draw order is fixed (x, y, theta) so a seed reproduces the set exactly
    const double nx = unit(rng) * model.sigma_trans;
    const double ny = unit(rng) * model.sigma_trans;
    const double nt = unit(rng) * model.sigma_rot;
    const Pose2 object{nominal_grasp.x + nx, nominal_grasp.y + ny, wrap_angle(nominal_grasp.theta + nt)};
    Particle p;
    p.pose = nominal_grasp;
    p.grasp = (nx == 0.0 && ny == 0.0 && nt == 0.0) ? Pose2::identity() : compose(to_frame, object);
    b.particles.push_back(p);
  }
  return b;
}

double weighted_distance(const Pose2& p, const Pose2& goal, double rot_weight)
{
  const PoseError e = pose_error(p, goal);
  const double r = rot_weight * e.dtheta;
  return std::sqrt(e.dx * e.dx + e.dy * e.dy + r * r);
}

std::size_t goal_count(const Belief& b, const GoalRegion& g)
{
  std::size_t inside = 0;
  for (const auto& p : b.particles)
    if (p.alive && weighted_distance(p.object_pose(), g.goal_pose, g.rot_weight) < g.radius)
      ++inside;
  return inside;
}

bool in_goal(const Belief& b, const GoalRegion& g)
{
  if (b.particles.empty())
    return false;
  // compare counts, not fractions, so boundary cases like 9/10 vs 0.9 are exact
  const double needed = g.gamma * static_cast<double>(b.particles.size());
  return static_cast<double>(goal_count(b, g)) >= needed - 1e-9;
}

bool is_valid(const Belief& b, double eta)
{
  if (b.particles.empty())
    return false;
  const double needed = eta * static_cast<double>(b.particles.size());
  return static_cast<double>(b.alive_count()) >= needed - 1e-9;
}

Pose2 mean_pose(const Belief& b)
{
  double sx = 0.0;
  double sy = 0.0;
  double ss = 0.0;
  double sc = 0.0;
  std::size_t n = 0;
  for (const auto& p : b.particles)
  {
    if (!p.alive)
      continue;
    const Pose2 o = p.object_pose();
    sx += o.x;
    sy += o.y;
    ss += std::sin(o.theta);
    sc += std::cos(o.theta);
    ++n;
  }
  if (n == 0)
    throw std::invalid_argument("mean_pose needs at least one alive particle");
  const double inv = 1.0 / static_cast<double>(n);
  return {sx * inv, sy * inv, wrap_angle(std::atan2(ss, sc))};
}

}  // namespace aobest
