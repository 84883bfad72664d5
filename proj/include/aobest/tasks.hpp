#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "aobest/belief.hpp"
#include "aobest/planner.hpp"
#include "aobest/sim.hpp"

namespace aobest
{

inline constexpr int kTaskSchemaVersion = 1;

/// Everything needed to plan and execute one assembly problem. SI units, radians.
struct Task
{
  std::string name;
  std::string description;
  std::vector<StaticBody> scene;
  BodyParams object;
  Pose2 nominal_grasp;
  UncertaintyModel uncertainty;
  ImpedanceParams gains;
  SimLimits limits;
  ContactParams contact;
  Vec2 gravity;
  GoalRegion goal;
  double eta{0.8};
  ControlBounds control;
  double segment_min{0.1};
  double segment_max{0.5};
  CostParams cost;
  double t_max{20.0};
  GridCellSize grid;
  std::size_t default_particles{10};
  std::size_t default_budget{20000};

  SimulationModel simulation_model() const;
  /// Planner configuration seeded from the task's defaults.
  PlannerConfig planner_config() const;

  bool operator==(const Task&) const = default;
};

/// Load/validation failure. `path` names the offending field, e.g. "object.polygons[0]".
class TaskError : public std::runtime_error
{
public:
  enum class Kind
  {
    schema,
    invariant,
    io,
  };

  TaskError(Kind kind, std::string path, const std::string& message);

  Kind kind() const { return kind_; }
  const std::string& path() const { return path_; }

private:
  Kind kind_;
  std::string path_;
};

nlohmann::json task_to_json(const Task& task);
/// Parses and validates; throws TaskError.
Task task_from_json(const nlohmann::json& j);

Task load_task(const std::filesystem::path& path);
void save_task(const Task& task, const std::filesystem::path& path);

/// Checks the invariants that the schema cannot express; throws TaskError(invariant).
void validate_task(const Task& task);

/// Stable 64-bit FNV-1a hash of the canonical task JSON, as 16 hex digits.
std::string task_hash(const Task& task);

std::vector<std::string> builtin_names();
/// One of peg2d, rail2d, puzzle2d; throws std::invalid_argument otherwise.
Task builtin(std::string_view name);

/// Builtin name or path to a task file.
Task resolve_task(const std::string& name_or_path);

/// Stable 64-bit FNV-1a over bytes.
std::uint64_t fnv1a(std::string_view bytes);

}  // namespace aobest
