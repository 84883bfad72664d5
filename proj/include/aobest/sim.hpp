#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "aobest/belief.hpp"
#include "aobest/cost.hpp"
#include "aobest/geom2d.hpp"

namespace aobest
{

class WorkerPool;

/// Diagonal Cartesian impedance gains.
struct ImpedanceParams
{
  double kp_trans{1000.0};
  double kp_rot{60.0};
  double kd_trans{0.0};
  double kd_rot{0.0};

  bool operator==(const ImpedanceParams&) const = default;
};

/// Inertial and surface properties of the compliant frame plus the grasped part.
struct BodyParams
{
  double mass{1.0};
  double inertia{0.01};
  std::vector<ConvexPolygon> shape;
  double friction{0.3};

  bool operator==(const BodyParams&) const = default;
};

struct SimLimits
{
  double max_force{30.0};
  double max_torque{3.0};
  double dt{1e-3};
  int solver_iterations{16};

  bool operator==(const SimLimits&) const = default;
};

struct ContactParams
{
  /// Penetration tolerated before positional correction kicks in [m].
  double slop{1e-4};
  /// Fraction of excess penetration removed per step.
  double baumgarte{0.2};

  bool operator==(const ContactParams&) const = default;
};

struct StaticBody
{
  std::string name;
  std::vector<ConvexPolygon> shape;
  Pose2 pose;

  bool operator==(const StaticBody&) const = default;
};

struct SimulationModel
{
  std::vector<StaticBody> scene;
  BodyParams body;
  ImpedanceParams gains;
  SimLimits limits;
  ContactParams contact;
  Vec2 gravity;

  bool operator==(const SimulationModel&) const = default;
};

/// Returns 2 * sqrt(kp * m). Throws on non-positive input.
double critical_damping(double kp, double mass_or_inertia);

/**
 * Spring-damper deflection wrench h = Kp (x_o - x_d) + Kd (xdot_o - xdot_d)
 * measured at the particle's compliant frame. The wrench applied to the body is -h.
 */
Wrench2 impedance_wrench(const Particle& p, const Pose2& setpoint_pose, const Twist2& setpoint_twist,
                         const ImpedanceParams& gains);

bool exceeds_limits(const Wrench2& h, const SimLimits& limits);

/// Set-point motion over one fixed step: pose at step start, twist ramping linearly.
struct SetpointStep
{
  Pose2 pose;
  Pose2 pose_end;
  Twist2 twist_begin;
  Twist2 twist_end;
};

/// Set-point pose after one step of a linearly ramping twist (trapezoidal, exact for the ramp).
Pose2 advance_setpoint(const Pose2& pose, const Twist2& twist_begin, const Twist2& twist_end, double dt);

/// Diagnostics of one particle step.
struct StepRecord
{
  Wrench2 wrench;
  double max_penetration{0.0};
  std::size_t contact_count{0};
};

/**
 * Piecewise-linear set-point twist command: the set-point twist ramps from its
 * value at segment start to `target_twist` over `substeps * dt`.
 */
struct ControlSegment
{
  Twist2 target_twist;
  double duration{0.0};

  bool operator==(const ControlSegment&) const = default;
};

/// Per-substep statistics of one propagated segment.
struct SegmentTrace
{
  std::vector<double> cost_rate;
  std::vector<std::uint32_t> alive;
  double segment_cost{0.0};
  double min_survival{1.0};
  /// Largest force norm / torque magnitude measured on particles that were not culled.
  double max_force{0.0};
  double max_torque{0.0};

  bool operator==(const SegmentTrace&) const = default;
};

/// Optional early-exit conditions for propagate; rejection decisions match a full run.
struct PropagationGate
{
  double eta{0.0};
  double cost_bound{std::numeric_limits<double>::infinity()};
  double time_limit{std::numeric_limits<double>::infinity()};
};

enum class PropagationStatus
{
  completed,
  invalid,
  over_cost,
  over_time,
};

struct PropagationResult
{
  Belief belief;
  SegmentTrace trace;
  PropagationStatus status{PropagationStatus::completed};
};

/**
 * Deterministic planar impedance simulator. Holds the static scene in world
 * coordinates and the exact per-step transition of the free spring-damper.
 */
class Simulator
{
public:
  explicit Simulator(SimulationModel model);

  const SimulationModel& model() const { return model_; }
  double dt() const { return model_.limits.dt; }

  /// One fixed step. A particle whose wrench exceeds the limits is returned with alive = false.
  Particle step(const Particle& p, const SetpointStep& sp, StepRecord* record = nullptr) const;

  /// Number of substeps in a segment; throws if duration is not a positive multiple of dt.
  std::size_t substeps(const ControlSegment& seg) const;

  /**
   * Advances the shared set-point along the segment and steps every alive particle
   * through all substeps. Dead particles are kept and flagged. Particles may be
   * processed by `pool`; the output does not depend on the thread count.
   */
  PropagationResult propagate(const Belief& belief, const ControlSegment& seg, const CostParams& cost,
                              const PropagationGate& gate = {}, WorkerPool* pool = nullptr) const;

  /// Largest penetration of the particle's object against the scene.
  double penetration(const Particle& p) const;

private:
  struct Channel
  {
    // exact transition of e'' = -k/m e - c/m e' + a over dt
    std::array<double, 4> phi{};
    std::array<double, 2> gamma{};
  };

  static Channel make_channel(double k, double c, double m, double dt);

  SimulationModel model_;
  Channel trans_;
  Channel rot_;
  std::vector<WorldPolygon> scene_world_;
  double object_radius_{0.0};
};

/// Convenience single step with an explicit scene and a constant set-point twist.
Particle step(const Particle& p, const std::vector<StaticBody>& scene, const Pose2& setpoint_pose,
              const Twist2& setpoint_twist, const ImpedanceParams& gains, const BodyParams& body,
              const SimLimits& limits);

}  // namespace aobest
