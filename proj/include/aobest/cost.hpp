#pragma once

#include <optional>
#include <span>

#include "aobest/geom2d.hpp"

namespace aobest
{

struct Belief;

struct CostParams
{
  /// Floor rate keeping the immediate cost strictly positive [W].
  double epsilon{1e-3};
  /// Optional upper clip of the belief-level rate [W].
  std::optional<double> l_max_clip;

  bool operator==(const CostParams&) const = default;
};

/// Power spent stretching the virtual spring: max(0, -h . xdot) [W].
double immediate_particle_cost(const Wrench2& h, const Twist2& object_twist);

/// epsilon + (1/N) * sum of alive particle costs, optionally clipped.
double immediate_belief_cost(std::span<const double> alive_particle_costs, std::size_t particle_count,
                             const CostParams& params);

/// Same rate computed from a belief and the wrench measured on each of its particles.
double immediate_belief_cost(const Belief& b, std::span<const Wrench2> wrenches, const CostParams& params);

/// Left Riemann step of the trajectory cost integral.
double accumulate(double cost_so_far, double rate, double dt);

}  // namespace aobest
