#pragma once

#include <cstddef>
#include <random>
#include <vector>

#include "aobest/geom2d.hpp"

namespace aobest
{

using Rng = std::mt19937_64;

/**
 * One hypothesis of the grasped object.
 *
 * `pose` and `twist` describe the compliant frame the impedance acts on. The
 * object geometry is rigidly attached at `grasp` relative to that frame, so the
 * object pose is `pose ∘ grasp`. A nominal grasp is the identity.
 */
struct Particle
{
  Pose2 pose;
  Twist2 twist;
  Pose2 grasp;
  bool alive{true};

  Pose2 object_pose() const { return compose(pose, grasp); }
  bool operator==(const Particle&) const = default;
};

/// Particle set sharing one impedance set-point.
struct Belief
{
  std::vector<Particle> particles;
  Pose2 setpoint_pose;
  Twist2 setpoint_twist;
  double time{0.0};
  double accumulated_cost{0.0};

  std::size_t size() const { return particles.size(); }
  std::size_t alive_count() const;
  double alive_fraction() const;
  bool operator==(const Belief&) const = default;
};

struct UncertaintyModel
{
  double sigma_trans{2.5e-3};
  double sigma_rot{0.015};

  bool operator==(const UncertaintyModel&) const = default;
};

struct GoalRegion
{
  Pose2 goal_pose;
  double radius{1e-3};
  double gamma{0.9};
  /// Converts rotation error into the length unit of the goal metric [m/rad].
  double rot_weight{0.1};

  bool operator==(const GoalRegion&) const = default;
};

/**
 * Draws N object hypotheses around the nominal grasp. The compliant frame of
 * every particle and the set-point start at `nominal_grasp`; the object pose of
 * particle i is the nominal pose plus independent Gaussian noise.
 */
Belief sample_initial_belief(const Pose2& nominal_grasp, const UncertaintyModel& model, std::size_t n,
                             Rng& rng, double t_start = 0.0);

/// sqrt(dx^2 + dy^2 + (w * dtheta)^2) with dtheta wrapped.
double weighted_distance(const Pose2& p, const Pose2& goal, double rot_weight);

/// Alive particles with object pose strictly inside the goal ball make up at least gamma of N.
bool in_goal(const Belief& b, const GoalRegion& g);

/// Number of alive particles inside the goal ball.
std::size_t goal_count(const Belief& b, const GoalRegion& g);

/// Alive fraction is at least eta.
bool is_valid(const Belief& b, double eta);

/// Mean object pose of alive particles (circular mean for the angle). Throws if none is alive.
Pose2 mean_pose(const Belief& b);

}  // namespace aobest
