#include "aobest/sim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "aobest/parallel.hpp"

namespace aobest
{

double critical_damping(double kp, double mass_or_inertia)
{
  if (!(kp > 0.0) || !(mass_or_inertia > 0.0))
    throw std::invalid_argument("critical_damping needs positive stiffness and inertia");
  return 2.0 * std::sqrt(kp * mass_or_inertia);
}

Wrench2 impedance_wrench(const Particle& p, const Pose2& setpoint_pose, const Twist2& setpoint_twist,
                         const ImpedanceParams& gains)
{
  const PoseError e = pose_error(p.pose, setpoint_pose);
  return {gains.kp_trans * e.dx + gains.kd_trans * (p.twist.vx - setpoint_twist.vx),
          gains.kp_trans * e.dy + gains.kd_trans * (p.twist.vy - setpoint_twist.vy),
          gains.kp_rot * e.dtheta + gains.kd_rot * (p.twist.omega - setpoint_twist.omega)};
}

bool exceeds_limits(const Wrench2& h, const SimLimits& limits)
{
  return h.fx * h.fx + h.fy * h.fy > limits.max_force * limits.max_force || std::abs(h.tau) > limits.max_torque;
}

Pose2 advance_setpoint(const Pose2& pose, const Twist2& twist_begin, const Twist2& twist_end, double dt)
{
  return {pose.x + 0.5 * (twist_begin.vx + twist_end.vx) * dt,
          pose.y + 0.5 * (twist_begin.vy + twist_end.vy) * dt,
          wrap_angle(pose.theta + 0.5 * (twist_begin.omega + twist_end.omega) * dt)};
}

namespace
{

using Mat3 = std::array<double, 9>;

Mat3 mul(const Mat3& a, const Mat3& b)
{
  Mat3 r{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k)
        r[i * 3 + j] += a[i * 3 + k] * b[k * 3 + j];
  return r;
}

// Scaling and squaring with a truncated Taylor series; the argument is tiny in practice.
Mat3 expm(Mat3 a)
{
  double n = 0.0;
  for (double v : a)
    n = std::max(n, std::abs(v));
  int squarings = 0;
  while (n > 0.5)
  {
    n *= 0.5;
    ++squarings;
  }
  const double scale = std::ldexp(1.0, -squarings);
  for (double& v : a)
    v *= scale;
  Mat3 result{1, 0, 0, 0, 1, 0, 0, 0, 1};
  Mat3 term = result;
  for (int k = 1; k <= 20; ++k)
  {
    term = mul(term, a);
    for (double& v : term)
      v /= k;
    for (int i = 0; i < 9; ++i)
      result[i] += term[i];
  }
  for (int s = 0; s < squarings; ++s)
    result = mul(result, result);
  return result;
}

struct ContactRow
{
  Vec2 r;
  Vec2 n;
  Vec2 t;
  double rn{0.0};
  double rt{0.0};
  double kn{0.0};
  double kt{0.0};
  double bias{0.0};
  double ln{0.0};
  double lt{0.0};
};

struct Workspace
{
  std::vector<WorldPolygon> object;
  std::vector<ContactPoint> points;
  std::vector<ContactRow> rows;
};

Workspace& workspace()
{
  thread_local Workspace ws;
  return ws;
}

}  // namespace

Simulator::Channel Simulator::make_channel(double k, double c, double m, double dt)
{
  // augmented system [e, e', 1] with constant forcing acceleration
  const Mat3 a{0.0, dt, 0.0, -k / m * dt, -c / m * dt, dt, 0.0, 0.0, 0.0};
  const Mat3 e = expm(a);
  Channel ch;
  ch.phi = {e[0], e[1], e[3], e[4]};
  ch.gamma = {e[2], e[5]};
  return ch;
}

Simulator::Simulator(SimulationModel model) : model_(std::move(model))
{
  const auto& b = model_.body;
  const auto& g = model_.gains;
  const auto& l = model_.limits;
  if (!(b.mass > 0.0) || !(b.inertia > 0.0))
    throw std::invalid_argument("body mass and inertia must be positive");
  if (!(g.kp_trans > 0.0) || !(g.kp_rot > 0.0) || !(g.kd_trans > 0.0) || !(g.kd_rot > 0.0))
    throw std::invalid_argument("impedance gains must be positive");
  if (!(l.dt > 0.0) || !(l.max_force > 0.0) || !(l.max_torque > 0.0) || l.solver_iterations < 1)
    throw std::invalid_argument("simulation limits must be positive");
  if (b.friction < 0.0)
    throw std::invalid_argument("friction must be non-negative");
  if (b.shape.empty())
    throw std::invalid_argument("body needs at least one polygon");

  trans_ = make_channel(g.kp_trans, g.kd_trans, b.mass, l.dt);
  rot_ = make_channel(g.kp_rot, g.kd_rot, b.inertia, l.dt);

  for (const auto& body : model_.scene)
    for (const auto& poly : body.shape)
    {
      WorldPolygon w;
      w.assign(poly, body.pose);
      scene_world_.push_back(std::move(w));
    }
  for (const auto& poly : b.shape)
    for (const auto& v : poly.vertices())
      object_radius_ = std::max(object_radius_, norm(v));
  // covers rounding in the vertex transform
  object_radius_ = object_radius_ * (1.0 + 1e-12) + 1e-12;
}

std::size_t Simulator::substeps(const ControlSegment& seg) const
{
  const double ratio = seg.duration / dt();
  const double rounded = std::round(ratio);
  if (!(seg.duration > 0.0) || rounded < 1.0 || std::abs(ratio - rounded) > 1e-6)
    throw std::invalid_argument("segment duration must be a positive multiple of dt");
  return static_cast<std::size_t>(rounded);
}

double Simulator::penetration(const Particle& p) const
{
  const Pose2 object = p.object_pose();
  double worst = 0.0;
  WorldPolygon w;
  Manifold m;
  for (const auto& poly : model_.body.shape)
  {
    w.assign(poly, object);
    for (const auto& s : scene_world_)
      if (w.aabb_overlaps(s) && collide(w, s, m))
        for (const auto& c : m.view())
          worst = std::max(worst, c.penetration);
  }
  return worst;
}

Particle Simulator::step(const Particle& p, const SetpointStep& sp, StepRecord* record) const
{
  Particle out = p;
  if (!p.alive)
    return out;
  const auto& body = model_.body;
  const auto& limits = model_.limits;
  const double dt = limits.dt;

  const Wrench2 h = impedance_wrench(p, sp.pose, sp.twist_begin, model_.gains);
  if (record != nullptr)
    *record = StepRecord{h, 0.0, 0};
  if (exceeds_limits(h, limits))
  {
    out.alive = false;
    return out;
  }

  Workspace& ws = workspace();
  ws.points.clear();
  const Pose2 object = p.object_pose();
  // broad phase on the bounding circle of the object around its origin
  const Vec2 lo{object.x - object_radius_, object.y - object_radius_};
  const Vec2 hi{object.x + object_radius_, object.y + object_radius_};
  bool near_scene = false;
  for (const auto& s : scene_world_)
    if (lo.x <= s.hi.x && s.lo.x <= hi.x && lo.y <= s.hi.y && s.lo.y <= hi.y)
    {
      near_scene = true;
      break;
    }
  if (near_scene)
  {
    ws.object.resize(body.shape.size());
    for (std::size_t i = 0; i < body.shape.size(); ++i)
      ws.object[i].assign(body.shape[i], object);
    Manifold m;
    for (const auto& w : ws.object)
      for (const auto& s : scene_world_)
        if (w.aabb_overlaps(s) && collide(w, s, m))
          for (const auto& c : m.view())
            ws.points.push_back(c);
  }

  if (ws.points.empty())
  {
    // free flight: exact spring-damper transition per channel
    const PoseError e = pose_error(p.pose, sp.pose);
    const double inv_dt = 1.0 / dt;
    const double ax = model_.gravity.x - (sp.twist_end.vx - sp.twist_begin.vx) * inv_dt;
    const double ay = model_.gravity.y - (sp.twist_end.vy - sp.twist_begin.vy) * inv_dt;
    const double aw = -(sp.twist_end.omega - sp.twist_begin.omega) * inv_dt;
    const auto advance = [](const Channel& ch, double e0, double v0, double a, double& e1, double& v1) {
      e1 = ch.phi[0] * e0 + ch.phi[1] * v0 + ch.gamma[0] * a;
      v1 = ch.phi[2] * e0 + ch.phi[3] * v0 + ch.gamma[1] * a;
    };
    double ex = 0.0, vx = 0.0, ey = 0.0, vy = 0.0, et = 0.0, vt = 0.0;
    advance(trans_, e.dx, p.twist.vx - sp.twist_begin.vx, ax, ex, vx);
    advance(trans_, e.dy, p.twist.vy - sp.twist_begin.vy, ay, ey, vy);
    advance(rot_, e.dtheta, p.twist.omega - sp.twist_begin.omega, aw, et, vt);
    out.pose = {sp.pose_end.x + ex, sp.pose_end.y + ey, wrap_angle(sp.pose_end.theta + et)};
    out.twist = {sp.twist_end.vx + vx, sp.twist_end.vy + vy, sp.twist_end.omega + vt};
    return out;
  }

  // contact: semi-implicit Euler with sequential impulses on the predicted velocity
  const double inv_m = 1.0 / body.mass;
  const double inv_i = 1.0 / body.inertia;
  Vec2 v{p.twist.vx + (model_.gravity.x - h.fx * inv_m) * dt,
         p.twist.vy + (model_.gravity.y - h.fy * inv_m) * dt};
  double w = p.twist.omega - h.tau * inv_i * dt;

  const double slop = model_.contact.slop;
  const double beta = model_.contact.baumgarte / dt;
  double max_pen = 0.0;
  ws.rows.clear();
  for (const auto& c : ws.points)
  {
    ContactRow row;
    row.r = c.point - p.pose.translation();
    row.n = c.normal;
    row.t = {-c.normal.y, c.normal.x};
    row.rn = cross(row.r, row.n);
    row.rt = cross(row.r, row.t);
    row.kn = 1.0 / (inv_m + inv_i * row.rn * row.rn);
    row.kt = 1.0 / (inv_m + inv_i * row.rt * row.rt);
    row.bias = beta * std::max(c.penetration - slop, 0.0);
    max_pen = std::max(max_pen, c.penetration);
    ws.rows.push_back(row);
  }
  const double mu = body.friction;
  for (int it = 0; it < limits.solver_iterations; ++it)
  {
    // once a sweep changes no impulse, every later sweep repeats it exactly
    bool changed = false;
    for (auto& row : ws.rows)
    {
      Vec2 vrel = v + cross(w, row.r);
      const double vt = dot(vrel, row.t);
      double lt = row.lt - row.kt * vt;
      lt = std::clamp(lt, -mu * row.ln, mu * row.ln);
      double dl = lt - row.lt;
      changed = changed || dl != 0.0;
      row.lt = lt;
      v = v + row.t * (dl * inv_m);
      w += dl * inv_i * row.rt;

      vrel = v + cross(w, row.r);
      const double vn = dot(vrel, row.n);
      const double ln = std::max(row.ln + row.kn * (row.bias - vn), 0.0);
      dl = ln - row.ln;
      changed = changed || dl != 0.0;
      row.ln = ln;
      v = v + row.n * (dl * inv_m);
      w += dl * inv_i * row.rn;
    }
    if (!changed)
      break;
  }
  if (record != nullptr)
  {
    record->max_penetration = max_pen;
    record->contact_count = ws.rows.size();
  }
  out.pose = {p.pose.x + v.x * dt, p.pose.y + v.y * dt, wrap_angle(p.pose.theta + w * dt)};
  out.twist = {v.x, v.y, w};
  return out;
}

PropagationResult Simulator::propagate(const Belief& belief, const ControlSegment& seg, const CostParams& cost,
                                       const PropagationGate& gate, WorkerPool* pool) const
{
  const std::size_t steps = substeps(seg);
  const double dt = this->dt();
  const std::size_t n = belief.particles.size();

  PropagationResult result;
  result.belief = belief;
  Belief& out = result.belief;
  const double end_time = belief.time + static_cast<double>(steps) * dt;
  if (end_time > gate.time_limit + 1e-12)
  {
    result.status = PropagationStatus::over_time;
    return result;
  }

  // shared set-point schedule
  std::vector<SetpointStep> schedule(steps);
  {
    const Twist2 u0 = belief.setpoint_twist;
    const Twist2 u1 = seg.target_twist;
    const auto twist_at = [&](std::size_t k) {
      if (k == steps)
        return u1;
      const double s = static_cast<double>(k) / static_cast<double>(steps);
      return Twist2{u0.vx + (u1.vx - u0.vx) * s, u0.vy + (u1.vy - u0.vy) * s,
                    u0.omega + (u1.omega - u0.omega) * s};
    };
    Pose2 pose = belief.setpoint_pose;
    Twist2 tw = u0;
    for (std::size_t k = 0; k < steps; ++k)
    {
      const Twist2 next = twist_at(k + 1);
      const Pose2 pose_next = advance_setpoint(pose, tw, next, dt);
      schedule[k] = {pose, pose_next, tw, next};
      pose = pose_next;
      tw = next;
    }
  }

  constexpr std::size_t kNotDead = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> death(n, kNotDead);
  for (std::size_t i = 0; i < n; ++i)
    if (!out.particles[i].alive)
      death[i] = 0;
  std::vector<double> costs(n * steps, 0.0);
  std::vector<double> max_force(n, 0.0);  // squared norm
  std::vector<double> max_torque(n, 0.0);

  auto& trace = result.trace;
  trace.cost_rate.reserve(steps);
  trace.alive.reserve(steps);
  double segment_cost = 0.0;
  const double needed_alive = gate.eta * static_cast<double>(n) - 1e-9;
  const double base_cost = belief.accumulated_cost;

  constexpr std::size_t kChunk = 50;
  for (std::size_t k0 = 0; k0 < steps; k0 += kChunk)
  {
    const std::size_t k1 = std::min(steps, k0 + kChunk);
    const auto body = [&](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i)
      {
        Particle& p = out.particles[i];
        for (std::size_t k = k0; k < k1 && p.alive; ++k)
        {
          StepRecord rec;
          const Particle next = step(p, schedule[k], &rec);
          if (!next.alive)
          {
            death[i] = k;
            p.alive = false;
            break;
          }
          costs[i * steps + k] = immediate_particle_cost(rec.wrench, p.twist);
          max_force[i] = std::max(max_force[i], rec.wrench.fx * rec.wrench.fx + rec.wrench.fy * rec.wrench.fy);
          max_torque[i] = std::max(max_torque[i], std::abs(rec.wrench.tau));
          p = next;
        }
      }
    };
    if (pool != nullptr)
      pool->run(n, body);
    else
      body(0, n);

    // fixed-order reduction, independent of the schedule above
    std::vector<double> alive_costs;
    alive_costs.reserve(n);
    for (std::size_t k = k0; k < k1; ++k)
    {
      alive_costs.clear();
      std::uint32_t alive = 0;
      for (std::size_t i = 0; i < n; ++i)
      {
        if (death[i] > k)
        {
          alive_costs.push_back(costs[i * steps + k]);
          ++alive;
        }
      }
      const double rate = immediate_belief_cost(alive_costs, n, cost);
      segment_cost = accumulate(segment_cost, rate, dt);
      trace.cost_rate.push_back(rate);
      trace.alive.push_back(alive);
      if (static_cast<double>(alive) < needed_alive)
        result.status = PropagationStatus::invalid;
      else if (base_cost + segment_cost >= gate.cost_bound)
        result.status = PropagationStatus::over_cost;
      if (result.status != PropagationStatus::completed)
        break;
    }
    if (result.status != PropagationStatus::completed)
      break;
  }

  // the state reached at the segment end is measured against the limits as well
  if (result.status == PropagationStatus::completed)
  {
    const Pose2 sp_end = steps > 0 ? schedule.back().pose_end : belief.setpoint_pose;
    std::uint32_t alive = 0;
    for (std::size_t i = 0; i < n; ++i)
    {
      Particle& p = out.particles[i];
      if (!p.alive)
        continue;
      const Wrench2 h = impedance_wrench(p, sp_end, seg.target_twist, model_.gains);
      if (exceeds_limits(h, model_.limits))
      {
        p.alive = false;
        continue;
      }
      max_force[i] = std::max(max_force[i], h.fx * h.fx + h.fy * h.fy);
      max_torque[i] = std::max(max_torque[i], std::abs(h.tau));
      ++alive;
    }
    if (!trace.alive.empty())
      trace.alive.back() = alive;
    if (static_cast<double>(alive) < needed_alive)
      result.status = PropagationStatus::invalid;
    out.setpoint_pose = sp_end;
    out.setpoint_twist = seg.target_twist;
    out.time = end_time;
  }

  for (std::size_t i = 0; i < n; ++i)
  {
    if (out.particles[i].alive)
    {
      trace.max_force = std::max(trace.max_force, std::sqrt(max_force[i]));
      trace.max_torque = std::max(trace.max_torque, max_torque[i]);
    }
  }
  trace.segment_cost = segment_cost;
  trace.min_survival = 1.0;
  if (n > 0)
    for (auto a : trace.alive)
      trace.min_survival = std::min(trace.min_survival, static_cast<double>(a) / static_cast<double>(n));
  out.accumulated_cost = base_cost + segment_cost;
  return result;
}

Particle step(const Particle& p, const std::vector<StaticBody>& scene, const Pose2& setpoint_pose,
              const Twist2& setpoint_twist, const ImpedanceParams& gains, const BodyParams& body,
              const SimLimits& limits)
{
  SimulationModel model;
  model.scene = scene;
  model.body = body;
  model.gains = gains;
  model.limits = limits;
  const Simulator sim(std::move(model));
  const SetpointStep sp{setpoint_pose, advance_setpoint(setpoint_pose, setpoint_twist, setpoint_twist, limits.dt),
                        setpoint_twist, setpoint_twist};
  return sim.step(p, sp);
}

}  // namespace aobest
