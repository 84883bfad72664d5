#include "aobest/cost.hpp"

#include <algorithm>
#include <stdexcept>

#include "aobest/belief.hpp"

namespace aobest
{

double immediate_particle_cost(const Wrench2& h, const Twist2& object_twist)
{
  const double power = h.fx * object_twist.vx + h.fy * object_twist.vy + h.tau * object_twist.omega;
  return power >= 0.0 ? 0.0 : -power;
}

double immediate_belief_cost(std::span<const double> alive_particle_costs, std::size_t particle_count,
                             const CostParams& params)
{
  double sum = 0.0;
  for (double c : alive_particle_costs)
    sum += c;
  double rate = params.epsilon;
  if (particle_count > 0)
    rate += sum / static_cast<double>(particle_count);
  if (params.l_max_clip)
    rate = std::min(rate, *params.l_max_clip);
  return rate;
}

double immediate_belief_cost(const Belief& b, std::span<const Wrench2> wrenches, const CostParams& params)
{
  if (wrenches.size() != b.particles.size())
    throw std::invalid_argument("one wrench per particle expected");
  std::vector<double> costs;
  costs.reserve(b.particles.size());
  for (std::size_t i = 0; i < b.particles.size(); ++i)
    if (b.particles[i].alive)
      costs.push_back(immediate_particle_cost(wrenches[i], b.particles[i].twist));
  return immediate_belief_cost(costs, b.particles.size(), params);
}

double accumulate(double cost_so_far, double rate, double dt)
{
  if (!(dt > 0.0))
    throw std::invalid_argument("accumulate requires dt > 0");
  return cost_so_far + rate * dt;
}

}  // namespace aobest
