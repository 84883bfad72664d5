#include "aobest/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

namespace aobest
{

void PlannerConfig::validate(double dt) const
{
  if (iteration_budget == 0)
    throw std::invalid_argument("iteration budget must be positive");
  if (wall_clock_budget && !(*wall_clock_budget > 0.0))
    throw std::invalid_argument("wall-clock budget must be positive");
  if (!(segment_min > 0.0) || segment_max < segment_min)
    throw std::invalid_argument("segment duration bounds must satisfy 0 < min <= max");
  if (std::floor(segment_max / dt + 1e-9) < std::ceil(segment_min / dt - 1e-9))
    throw std::invalid_argument("segment duration bounds contain no multiple of dt");
  if (bounds.lo.vx > bounds.hi.vx || bounds.lo.vy > bounds.hi.vy || bounds.lo.omega > bounds.hi.omega)
    throw std::invalid_argument("control bounds are not ordered");
  if (!(grid.dx > 0.0) || !(grid.dy > 0.0) || !(grid.dtheta > 0.0))
    throw std::invalid_argument("grid cell sizes must be positive");
  if (particles == 0)
    throw std::invalid_argument("particle count must be positive");
  if (!(gamma > 0.0) || gamma > 1.0 || eta < 0.0 || eta > 1.0)
    throw std::invalid_argument("gamma must lie in (0, 1] and eta in [0, 1]");
  if (!(cost.epsilon > 0.0))
    throw std::invalid_argument("cost epsilon must be positive");
  if (!(t_max > 0.0))
    throw std::invalid_argument("T_max must be positive");
}

std::size_t CellKeyHash::operator()(const CellKey& k) const noexcept
{
  std::uint64_t h = 1469598103934665603ULL;
  for (auto v : k)
  {
    h ^= static_cast<std::uint64_t>(v);
    h *= 1099511628211ULL;
  }
  return static_cast<std::size_t>(h);
}

CellKey Grid::key(const Pose2& mean) const
{
  return {static_cast<std::int64_t>(std::floor(mean.x / size_.dx)),
          static_cast<std::int64_t>(std::floor(mean.y / size_.dy)),
          static_cast<std::int64_t>(std::floor(mean.theta / size_.dtheta))};
}

void Grid::insert(const CellKey& key, std::size_t node)
{
  auto [it, inserted] = index_.try_emplace(key, cells_.size());
  if (inserted)
  {
    occupied_.push_back(key);
    cells_.emplace_back();
  }
  cells_[it->second].push_back(node);
}

const std::vector<std::size_t>* Grid::find(const CellKey& key) const
{
  const auto it = index_.find(key);
  return it == index_.end() ? nullptr : &cells_[it->second];
}

std::size_t Tree::add(TreeNode node)
{
  const std::size_t index = nodes_.size();
  grid_.insert(node.cell, index);
  nodes_.push_back(std::move(node));
  return index;
}

std::size_t sample_weighted(const Tree& tree, Rng& rng)
{
  if (tree.empty())
    throw std::invalid_argument("cannot sample from an empty tree");
  const Grid& grid = tree.grid();
  std::uniform_int_distribution<std::size_t> pick_cell(0, grid.occupied_cells() - 1);
  const auto& cell = grid.cell(pick_cell(rng));
  std::uniform_int_distribution<std::size_t> pick_node(0, cell.size() - 1);
  return cell[pick_node(rng)];
}

ControlSegment sample_control(const PlannerConfig& cfg, double dt, Rng& rng)
{
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto lerp = [](double lo, double hi, double u) { return lo == hi ? lo : lo + (hi - lo) * u; };

  const auto k_min = static_cast<std::int64_t>(std::ceil(cfg.segment_min / dt - 1e-9));
  const auto k_max = static_cast<std::int64_t>(std::floor(cfg.segment_max / dt + 1e-9));
  const double raw = lerp(cfg.segment_min, cfg.segment_max, unit(rng));
  const std::int64_t k = std::clamp(static_cast<std::int64_t>(std::llround(raw / dt)), k_min, k_max);

  ControlSegment seg;
  seg.duration = static_cast<double>(k) * dt;
  seg.target_twist.vx = lerp(cfg.bounds.lo.vx, cfg.bounds.hi.vx, unit(rng));
  seg.target_twist.vy = lerp(cfg.bounds.lo.vy, cfg.bounds.hi.vy, unit(rng));
  seg.target_twist.omega = lerp(cfg.bounds.lo.omega, cfg.bounds.hi.omega, unit(rng));
  return seg;
}

Budget::Budget(std::size_t iterations, std::optional<double> seconds)
    : limit_(iterations), seconds_(seconds), start_(std::chrono::steady_clock::now())
{
}

bool Budget::exhausted() const
{
  if (used_ >= limit_)
    return true;
  return seconds_ && elapsed() >= *seconds_;
}

double Budget::elapsed() const
{
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
}

namespace
{
const char* reason_name(PropagationStatus s)
{
  switch (s)
  {
    case PropagationStatus::invalid:
      return "invalid";
    case PropagationStatus::over_cost:
      return "over_cost";
    case PropagationStatus::over_time:
      return "over_time";
    case PropagationStatus::completed:
      break;
  }
  return "completed";
}
}  // namespace

void EventLog::node_added(std::size_t iteration, std::size_t node, std::size_t parent, const Belief& b,
                          std::size_t in_goal_count)
{
  nlohmann::json j{{"event", "node_added"}, {"iteration", iteration}, {"node", node},
                   {"parent", parent},      {"time", b.time},        {"cost", b.accumulated_cost},
                   {"alive", b.alive_count()}, {"in_goal", in_goal_count}};
  if (b.alive_count() > 0)
  {
    const Pose2 m = mean_pose(b);
    j["mean_pose"] = {m.x, m.y, m.theta};
  }
  out_ << j.dump() << '\n';
}

void EventLog::rejected(std::size_t iteration, std::size_t parent, PropagationStatus reason)
{
  out_ << nlohmann::json{{"event", "rejected"}, {"iteration", iteration}, {"parent", parent},
                         {"reason", reason_name(reason)}}
              .dump()
       << '\n';
}

void EventLog::goal_reached(std::size_t iteration, std::size_t node, double cost)
{
  out_ << nlohmann::json{{"event", "goal_reached"}, {"iteration", iteration}, {"node", node}, {"cost", cost}}
              .dump()
       << '\n';
}

void EventLog::bound_lowered(std::size_t iteration, double cost)
{
  out_ << nlohmann::json{{"event", "bound_lowered"}, {"iteration", iteration}, {"cost", cost}}.dump() << '\n';
}

Planner::Planner(const Simulator& sim, GoalRegion goal, PlannerConfig cfg, EventLog* events, WorkerPool* pool)
    : sim_(sim), goal_(goal), cfg_(std::move(cfg)), events_(events), pool_(pool)
{
  cfg_.validate(sim_.dt());
  goal_.gamma = cfg_.gamma;
  if (!(goal_.radius > 0.0) || !(goal_.rot_weight > 0.0))
    throw std::invalid_argument("goal radius and rotation weight must be positive");
}

namespace
{
Trajectory extract(const Tree& tree, std::size_t leaf)
{
  std::vector<std::size_t> chain;
  for (std::optional<std::size_t> i = leaf; i; i = tree[*i].parent)
    chain.push_back(*i);
  Trajectory t;
  for (auto it = chain.rbegin(); it != chain.rend(); ++it)
  {
    const TreeNode& node = tree[*it];
    t.beliefs.push_back(node.belief);
    if (node.incoming)
    {
      t.segments.push_back(*node.incoming);
      t.edges.push_back(node.edge);
    }
  }
  t.cost = tree[leaf].belief.accumulated_cost;
  return t;
}
}  // namespace

PlanResult Planner::b_est(const Belief& start, double cost_bound, Rng& rng) const
{
  Budget budget(cfg_.iteration_budget, cfg_.wall_clock_budget);
  return b_est(start, cost_bound, rng, budget);
}

PlanResult Planner::b_est(const Belief& start, double cost_bound, Rng& rng, Budget& budget) const
{
  if (!is_valid(start, cfg_.eta))
    throw std::invalid_argument("start belief is not valid");
  const auto t0 = std::chrono::steady_clock::now();
  PlanResult result;
  Tree tree(cfg_.grid);

  TreeNode root;
  root.belief = start;
  root.cell = tree.grid().key(mean_pose(start));
  root.edge.alive_end = static_cast<std::uint32_t>(start.alive_count());
  const std::size_t root_index = tree.add(std::move(root));
  if (events_ != nullptr)
    events_->node_added(budget.used(), root_index, root_index, start, goal_count(start, goal_));

  const auto finish = [&](std::optional<std::size_t> leaf) {
    if (leaf)
      result.trajectory = extract(tree, *leaf);
    result.stats.nodes = tree.size();
    result.stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return result;
  };

  if (in_goal(start, goal_) && start.accumulated_cost < cost_bound)
  {
    if (events_ != nullptr)
      events_->goal_reached(budget.used(), root_index, start.accumulated_cost);
    return finish(root_index);
  }

  const PropagationGate gate{cfg_.eta, cost_bound, cfg_.t_max};
  while (!budget.exhausted())
  {
    budget.consume();
    ++result.stats.iterations;
    const std::size_t parent = sample_weighted(tree, rng);
    const ControlSegment seg = sample_control(cfg_, sim_.dt(), rng);
    PropagationResult prop = sim_.propagate(tree[parent].belief, seg, cfg_.cost, gate, pool_);

    if (prop.status != PropagationStatus::completed)
    {
      switch (prop.status)
      {
        case PropagationStatus::invalid:
          ++result.stats.rejected_invalid;
          break;
        case PropagationStatus::over_cost:
          ++result.stats.rejected_cost;
          break;
        default:
          ++result.stats.rejected_time;
          break;
      }
      if (events_ != nullptr)
        events_->rejected(budget.used(), parent, prop.status);
      continue;
    }

    TreeNode child;
    child.parent = parent;
    child.incoming = seg;
    child.edge = EdgeSummary{prop.trace.segment_cost, prop.trace.min_survival,
                             static_cast<std::uint32_t>(prop.belief.alive_count()), prop.trace.max_force,
                             prop.trace.max_torque};
    child.cell = tree.grid().key(mean_pose(prop.belief));
    child.belief = std::move(prop.belief);
    const bool reached = in_goal(child.belief, goal_);
    const std::size_t index = tree.add(std::move(child));
    if (events_ != nullptr)
      events_->node_added(budget.used(), index, parent, tree[index].belief, goal_count(tree[index].belief, goal_));
    if (reached)
    {
      if (events_ != nullptr)
        events_->goal_reached(budget.used(), index, tree[index].belief.accumulated_cost);
      return finish(index);
    }
  }
  return finish(std::nullopt);
}

AoResult Planner::ao_b_est(const Belief& start, Rng& rng) const
{
  AoResult result;
  Budget budget(cfg_.iteration_budget, cfg_.wall_clock_budget);
  double bound = std::numeric_limits<double>::infinity();
  while (!budget.exhausted())
  {
    PlanResult round = b_est(start, bound, rng, budget);
    ++result.rounds;
    result.stats.iterations += round.stats.iterations;
    result.stats.nodes += round.stats.nodes;
    result.stats.rejected_invalid += round.stats.rejected_invalid;
    result.stats.rejected_cost += round.stats.rejected_cost;
    result.stats.rejected_time += round.stats.rejected_time;
    if (!round.trajectory)
      continue;
    bound = round.trajectory->cost;
    result.improvements.push_back({budget.used(), budget.elapsed(), bound});
    result.best = std::move(round.trajectory);
    if (events_ != nullptr)
      events_->bound_lowered(budget.used(), bound);
    // a zero-segment solution cannot be improved upon
    if (result.best->segments.empty())
      break;
  }
  result.stats.seconds = budget.elapsed();
  return result;
}

}  // namespace aobest
