#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "aobest/parallel.hpp"
#include "aobest/planner.hpp"
#include "aobest/tasks.hpp"

namespace aobest
{

inline constexpr int kArtifactSchemaVersion = 1;

/// Sub-streams of a plan seed.
inline constexpr std::uint64_t kStartStream = 1;
inline constexpr std::uint64_t kPlannerStream = 2;
inline constexpr std::uint64_t kEvaluationStream = 3;

/// Independent 64-bit stream seed derived from a user seed (splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// Start belief for a plan. N = 1 is the noise-unaware baseline: the single particle is the nominal grasp.
Belief make_start_belief(const Task& task, std::size_t particles, std::uint64_t seed);

enum class Algorithm
{
  b_est,
  ao_b_est,
};

const char* algorithm_name(Algorithm a);
Algorithm parse_algorithm(const std::string& name);

struct PlanRequest
{
  std::size_t particles{10};
  std::size_t budget{100000};
  std::optional<double> wall_clock;
  std::uint64_t seed{0};
  Algorithm algorithm{Algorithm::ao_b_est};
};

PlannerConfig planner_config(const Task& task, const PlanRequest& request);

struct PlanOutcome
{
  PlanRequest request;
  Belief start;
  AoResult result;  // b_est runs are reported as a single round
};

PlanOutcome plan(const Task& task, const PlanRequest& request, WorkerPool* pool = nullptr,
                 EventLog* events = nullptr);

/// Trajectory artifact. Everything outside "timing" is a deterministic function of task and request.
nlohmann::json trajectory_json(const Task& task, const PlanOutcome& outcome);

/// Hash of an artifact with its "timing" and "content_hash" members removed.
std::string content_hash(const nlohmann::json& artifact);

/// Raised when an artifact does not belong to the task it is used with.
class ArtifactMismatch : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Checks schema version and task hash; throws ArtifactMismatch or std::invalid_argument.
void check_trajectory(const Task& task, const nlohmann::json& trajectory);

std::vector<ControlSegment> segments_from_json(const nlohmann::json& trajectory);

struct ReplaySegment
{
  double recorded_cost{0.0};
  double replayed_cost{0.0};
  std::uint32_t recorded_alive{0};
  std::uint32_t replayed_alive{0};
  double recorded_min_survival{1.0};
  double replayed_min_survival{1.0};
  bool belief_matches{false};
};

struct ReplayReport
{
  std::vector<ReplaySegment> segments;
  double recorded_cost{0.0};
  double replayed_cost{0.0};
  bool valid{false};
  bool in_goal{false};
  /// Every cost, survival statistic and particle state equals the recorded one bit for bit.
  bool exact{false};

  nlohmann::json to_json() const;
};

/// Re-executes the plan from the regenerated start belief.
ReplayReport replay(const Task& task, const nlohmann::json& trajectory, WorkerPool* pool = nullptr);

struct Rollout
{
  std::size_t index{0};
  std::uint64_t seed{0};
  bool success{false};
  bool culled{false};
  double final_distance{0.0};
  double min_survival{1.0};
  double cost{0.0};
  double max_force{0.0};
  double max_torque{0.0};
};

struct EvaluationReport
{
  std::vector<Rollout> rollouts;
  std::size_t successes{0};
  double success_rate{0.0};
  nlohmann::json config;

  nlohmann::json to_json() const;
};

/// Executes the open-loop plan against `rollouts` freshly drawn single hypotheses.
EvaluationReport evaluate(const Task& task, const std::vector<ControlSegment>& segments, std::size_t rollouts,
                          std::uint64_t seed, WorkerPool* pool = nullptr);
/// Same, after checking the artifact against the task.
EvaluationReport evaluate(const Task& task, const nlohmann::json& trajectory, std::size_t rollouts,
                          std::uint64_t seed, WorkerPool* pool = nullptr);

struct SweepSettings
{
  std::vector<std::size_t> particles;
  std::vector<std::size_t> budgets;
  std::size_t repetitions{1};
  std::uint64_t seed{0};
  std::size_t rollouts{100};
  Algorithm algorithm{Algorithm::ao_b_est};
  std::optional<double> wall_clock;
};

struct SweepRow
{
  std::size_t particles{0};
  std::size_t budget{0};
  std::size_t repetition{0};
  std::uint64_t seed{0};
  bool solved{false};
  std::optional<std::size_t> first_solution_iteration;
  std::optional<double> first_cost;
  std::optional<double> final_cost;
  std::optional<double> eval_success_rate;
  std::size_t eval_rollouts{0};
};

/// Repetition r uses the same seed for every setting, so settings are compared on common random numbers.
std::vector<SweepRow> sweep(const Task& task, const SweepSettings& settings, WorkerPool* pool = nullptr,
                            std::ostream* progress = nullptr);

void write_sweep_header(std::ostream& out);
void write_sweep_row(std::ostream& out, const SweepRow& row);
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);
std::vector<SweepRow> read_sweep_csv(std::istream& in);

/// Round-trip-exact decimal rendering used in CSV output.
std::string format_double(double v);

}  // namespace aobest
