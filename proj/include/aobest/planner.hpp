#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <unordered_map>
#include <vector>

#include "aobest/belief.hpp"
#include "aobest/cost.hpp"
#include "aobest/sim.hpp"

namespace aobest
{

/// Per-component bounds of the commanded set-point twist.
struct ControlBounds
{
  Twist2 lo{-0.05, -0.05, -0.2};
  Twist2 hi{0.05, 0.05, 0.2};

  bool operator==(const ControlBounds&) const = default;
};

struct GridCellSize
{
  double dx{5e-3};
  double dy{5e-3};
  double dtheta{0.05};

  bool operator==(const GridCellSize&) const = default;
};

struct PlannerConfig
{
  std::size_t iteration_budget{20000};
  /// Optional wall-clock cap; makes results machine dependent.
  std::optional<double> wall_clock_budget;
  double segment_min{0.1};
  double segment_max{0.5};
  ControlBounds bounds;
  GridCellSize grid;
  std::size_t particles{10};
  double gamma{0.9};
  double eta{0.8};
  CostParams cost;
  double t_max{20.0};
  std::uint64_t seed{0};

  /// Throws std::invalid_argument when budgets or bounds are malformed.
  void validate(double dt) const;
};

using CellKey = std::array<std::int64_t, 3>;

struct CellKeyHash
{
  std::size_t operator()(const CellKey& k) const noexcept;
};

/// Coarse discretization of the mean object pose; every node sits in exactly one cell.
class Grid
{
public:
  explicit Grid(GridCellSize size = {}) : size_(size) {}

  CellKey key(const Pose2& mean) const;
  void insert(const CellKey& key, std::size_t node);

  std::size_t occupied_cells() const { return occupied_.size(); }
  const std::vector<std::size_t>& cell(std::size_t index) const { return cells_[index]; }
  const std::vector<std::size_t>* find(const CellKey& key) const;

private:
  GridCellSize size_;
  std::unordered_map<CellKey, std::size_t, CellKeyHash> index_;
  std::vector<CellKey> occupied_;
  std::vector<std::vector<std::size_t>> cells_;
};

/// Statistics of the segment leading into a node.
struct EdgeSummary
{
  double segment_cost{0.0};
  double min_survival{1.0};
  std::uint32_t alive_end{0};
  double max_force{0.0};
  double max_torque{0.0};

  bool operator==(const EdgeSummary&) const = default;
};

struct TreeNode
{
  Belief belief;
  std::optional<std::size_t> parent;
  std::optional<ControlSegment> incoming;
  EdgeSummary edge;
  CellKey cell{};
};

class Tree
{
public:
  explicit Tree(GridCellSize size = {}) : grid_(size) {}

  std::size_t add(TreeNode node);
  std::size_t size() const { return nodes_.size(); }
  bool empty() const { return nodes_.empty(); }
  const TreeNode& operator[](std::size_t i) const { return nodes_[i]; }
  const Grid& grid() const { return grid_; }

private:
  std::vector<TreeNode> nodes_;
  Grid grid_;
};

/// Uniform occupied cell, then uniform node within it. Returns the node index.
std::size_t sample_weighted(const Tree& tree, Rng& rng);

/// Random duration (multiple of dt) and random target twist inside the bounds.
ControlSegment sample_control(const PlannerConfig& cfg, double dt, Rng& rng);

/// Root-to-goal trajectory. beliefs[0] is the start; beliefs[i + 1] follows segments[i].
struct Trajectory
{
  std::vector<ControlSegment> segments;
  std::vector<Belief> beliefs;
  std::vector<EdgeSummary> edges;
  double cost{0.0};
};

struct PlannerStats
{
  std::size_t iterations{0};
  std::size_t nodes{0};
  std::size_t rejected_invalid{0};
  std::size_t rejected_cost{0};
  std::size_t rejected_time{0};
  double seconds{0.0};
};

struct PlanResult
{
  std::optional<Trajectory> trajectory;
  PlannerStats stats;

  bool success() const { return trajectory.has_value(); }
};

struct Improvement
{
  std::size_t iteration{0};
  double seconds{0.0};
  double cost{0.0};
};

struct AoResult
{
  std::optional<Trajectory> best;
  std::vector<Improvement> improvements;
  PlannerStats stats;
  std::size_t rounds{0};

  bool success() const { return best.has_value(); }
};

/// Iteration (and optional wall-clock) allowance shared across planner rounds.
class Budget
{
public:
  Budget(std::size_t iterations, std::optional<double> seconds);

  bool exhausted() const;
  void consume() { ++used_; }
  std::size_t used() const { return used_; }
  double elapsed() const;

private:
  std::size_t limit_;
  std::size_t used_{0};
  std::optional<double> seconds_;
  std::chrono::steady_clock::time_point start_;
};

/// Writes newline-delimited JSON planner events.
class EventLog
{
public:
  explicit EventLog(std::ostream& out) : out_(out) {}

  void node_added(std::size_t iteration, std::size_t node, std::size_t parent, const Belief& b,
                  std::size_t in_goal_count);
  void rejected(std::size_t iteration, std::size_t parent, PropagationStatus reason);
  void goal_reached(std::size_t iteration, std::size_t node, double cost);
  void bound_lowered(std::size_t iteration, double cost);

private:
  std::ostream& out_;
};

/**
 * Belief-space expansive space tree planner and its cost-bounded optimizing loop.
 * The tree level is single threaded; `pool` only parallelizes particle propagation.
 */
class Planner
{
public:
  Planner(const Simulator& sim, GoalRegion goal, PlannerConfig cfg, EventLog* events = nullptr,
          WorkerPool* pool = nullptr);

  /// Grows a tree until a goal belief with cost below `cost_bound` is found or the budget ends.
  PlanResult b_est(const Belief& start, double cost_bound, Rng& rng, Budget& budget) const;
  PlanResult b_est(const Belief& start, double cost_bound, Rng& rng) const;

  /// Repeats b_est, lowering the bound to the incumbent's cost, until the budget ends.
  AoResult ao_b_est(const Belief& start, Rng& rng) const;

  const PlannerConfig& config() const { return cfg_; }
  const GoalRegion& goal() const { return goal_; }

private:
  const Simulator& sim_;
  GoalRegion goal_;
  PlannerConfig cfg_;
  EventLog* events_;
  WorkerPool* pool_;
};

}  // namespace aobest
