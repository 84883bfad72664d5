#include "aobest/harness.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace aobest
{

using nlohmann::json;

namespace
{

json pose_json(const Pose2& p) { return {p.x, p.y, p.theta}; }
json twist_json(const Twist2& t) { return {{"vx", t.vx}, {"vy", t.vy}, {"omega", t.omega}}; }

json belief_json(const Belief& b)
{
  json particles = json::array();
  for (const auto& p : b.particles)
    particles.push_back({{"pose", pose_json(p.pose)},
                         {"twist", {p.twist.vx, p.twist.vy, p.twist.omega}},
                         {"grasp", pose_json(p.grasp)},
                         {"alive", p.alive}});
  return {{"time", b.time},
          {"accumulated_cost", b.accumulated_cost},
          {"setpoint_pose", pose_json(b.setpoint_pose)},
          {"setpoint_twist", {b.setpoint_twist.vx, b.setpoint_twist.vy, b.setpoint_twist.omega}},
          {"particles", particles}};
}

std::string iso_timestamp()
{
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string hex64(std::uint64_t v)
{
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

json planner_config_json(const PlannerConfig& c)
{
  return {{"iteration_budget", c.iteration_budget},
          {"wall_clock_budget", c.wall_clock_budget ? json(*c.wall_clock_budget) : json(nullptr)},
          {"segment_min", c.segment_min},
          {"segment_max", c.segment_max},
          {"control_lo", twist_json(c.bounds.lo)},
          {"control_hi", twist_json(c.bounds.hi)},
          {"grid", {c.grid.dx, c.grid.dy, c.grid.dtheta}},
          {"particles", c.particles},
          {"gamma", c.gamma},
          {"eta", c.eta},
          {"epsilon", c.cost.epsilon},
          {"t_max", c.t_max},
          {"seed", c.seed}};
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream)
{
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Belief make_start_belief(const Task& task, std::size_t particles, std::uint64_t seed)
{
  Rng rng(derive_seed(seed, kStartStream));
  if (particles == 1)
    return sample_initial_belief(task.nominal_grasp, UncertaintyModel{0.0, 0.0}, 1, rng);
  return sample_initial_belief(task.nominal_grasp, task.uncertainty, particles, rng);
}

const char* algorithm_name(Algorithm a) { return a == Algorithm::b_est ? "b-est" : "ao-b-est"; }

Algorithm parse_algorithm(const std::string& name)
{
  if (name == "b-est" || name == "best")
    return Algorithm::b_est;
  if (name == "ao-b-est" || name == "ao")
    return Algorithm::ao_b_est;
  throw std::invalid_argument("unknown algorithm '" + name + "' (expected b-est or ao-b-est)");
}

PlannerConfig planner_config(const Task& task, const PlanRequest& request)
{
  PlannerConfig cfg = task.planner_config();
  cfg.particles = request.particles;
  cfg.iteration_budget = request.budget;
  cfg.wall_clock_budget = request.wall_clock;
  cfg.seed = request.seed;
  return cfg;
}

PlanOutcome plan(const Task& task, const PlanRequest& request, WorkerPool* pool, EventLog* events)
{
  const Simulator sim(task.simulation_model());
  const PlannerConfig cfg = planner_config(task, request);
  const Planner planner(sim, task.goal, cfg, events, pool);

  PlanOutcome out;
  out.request = request;
  out.start = make_start_belief(task, request.particles, request.seed);
  Rng rng(derive_seed(request.seed, kPlannerStream));
  if (request.algorithm == Algorithm::ao_b_est)
  {
    out.result = planner.ao_b_est(out.start, rng);
    return out;
  }
  Budget budget(cfg.iteration_budget, cfg.wall_clock_budget);
  PlanResult r = planner.b_est(out.start, std::numeric_limits<double>::infinity(), rng, budget);
  out.result.stats = r.stats;
  out.result.rounds = 1;
  if (r.trajectory)
  {
    out.result.improvements.push_back({budget.used(), budget.elapsed(), r.trajectory->cost});
    out.result.best = std::move(r.trajectory);
  }
  return out;
}

json trajectory_json(const Task& task, const PlanOutcome& outcome)
{
  const PlanRequest& req = outcome.request;
  const AoResult& res = outcome.result;
  const PlannerConfig cfg = planner_config(task, req);

  json config{{"algorithm", algorithm_name(req.algorithm)},
              {"seed", req.seed},
              {"particles", req.particles},
              {"budget", req.budget},
              {"wall_clock", req.wall_clock ? json(*req.wall_clock) : json(nullptr)},
              {"planner", planner_config_json(cfg)}};

  json segments = json::array();
  json improvements = json::array();
  json timing{{"created_at", iso_timestamp()}, {"planning_seconds", res.stats.seconds}};
  json improvement_seconds = json::array();
  for (const auto& imp : res.improvements)
  {
    improvements.push_back({{"iteration", imp.iteration}, {"cost", imp.cost}});
    improvement_seconds.push_back(imp.seconds);
  }
  timing["improvement_seconds"] = improvement_seconds;

  const Simulator sim(task.simulation_model());
  if (res.best)
  {
    const Trajectory& t = *res.best;
    for (std::size_t i = 0; i < t.segments.size(); ++i)
    {
      const auto& s = t.segments[i];
      const auto& e = t.edges[i];
      segments.push_back({{"target_twist", twist_json(s.target_twist)},
                          {"duration", s.duration},
                          {"substeps", sim.substeps(s)},
                          {"cost", e.segment_cost},
                          {"min_survival", e.min_survival},
                          {"alive_end", e.alive_end},
                          {"max_force", e.max_force},
                          {"max_torque", e.max_torque},
                          {"belief_end", belief_json(t.beliefs[i + 1])}});
    }
  }

  json j{{"schema_version", kArtifactSchemaVersion},
         {"kind", "trajectory"},
         {"task", {{"name", task.name}, {"hash", task_hash(task)}}},
         {"config", config},
         {"config_hash", hex64(fnv1a(config.dump()))},
         {"success", res.success()},
         {"cost", res.best ? json(res.best->cost) : json(nullptr)},
         {"duration", res.best ? json(res.best->beliefs.back().time - res.best->beliefs.front().time) : json(nullptr)},
         {"start_belief", belief_json(outcome.start)},
         {"segments", segments},
         {"improvements", improvements},
         {"stats",
          {{"iterations", res.stats.iterations},
           {"nodes", res.stats.nodes},
           {"rounds", res.rounds},
           {"rejected_invalid", res.stats.rejected_invalid},
           {"rejected_cost", res.stats.rejected_cost},
           {"rejected_time", res.stats.rejected_time}}},
         {"timing", timing}};
  j["content_hash"] = content_hash(j);
  return j;
}

std::string content_hash(const json& artifact)
{
  json copy = artifact;
  copy.erase("timing");
  copy.erase("content_hash");
  return hex64(fnv1a(copy.dump()));
}

void check_trajectory(const Task& task, const json& trajectory)
{
  if (!trajectory.is_object() || trajectory.value("schema_version", -1) != kArtifactSchemaVersion ||
      trajectory.value("kind", "") != "trajectory")
    throw std::invalid_argument("not a trajectory artifact with schema_version " +
                                std::to_string(kArtifactSchemaVersion));
  const std::string recorded = trajectory.at("task").at("hash").get<std::string>();
  const std::string actual = task_hash(task);
  if (recorded != actual)
    throw ArtifactMismatch("trajectory was planned for task hash " + recorded + " but the task hashes to " +
                           actual + "; re-plan against the current task");
  if (!trajectory.at("success").get<bool>())
    throw std::invalid_argument("trajectory artifact records a planning failure and has no segments to execute");
}

std::vector<ControlSegment> segments_from_json(const json& trajectory)
{
  std::vector<ControlSegment> out;
  for (const auto& s : trajectory.at("segments"))
  {
    const json& t = s.at("target_twist");
    out.push_back({{t.at("vx").get<double>(), t.at("vy").get<double>(), t.at("omega").get<double>()},
                   s.at("duration").get<double>()});
  }
  return out;
}

json ReplayReport::to_json() const
{
  json segs = json::array();
  for (const auto& s : segments)
    segs.push_back({{"recorded_cost", s.recorded_cost},
                    {"replayed_cost", s.replayed_cost},
                    {"recorded_alive", s.recorded_alive},
                    {"replayed_alive", s.replayed_alive},
                    {"recorded_min_survival", s.recorded_min_survival},
                    {"replayed_min_survival", s.replayed_min_survival},
                    {"belief_matches", s.belief_matches}});
  return {{"schema_version", kArtifactSchemaVersion},
          {"kind", "replay"},
          {"recorded_cost", recorded_cost},
          {"replayed_cost", replayed_cost},
          {"valid", valid},
          {"in_goal", in_goal},
          {"exact", exact},
          {"segments", segs}};
}

ReplayReport replay(const Task& task, const json& trajectory, WorkerPool* pool)
{
  check_trajectory(task, trajectory);
  const json& config = trajectory.at("config");
  const Simulator sim(task.simulation_model());
  const std::size_t particles = config.at("particles").get<std::size_t>();
  const std::uint64_t seed = config.at("seed").get<std::uint64_t>();
  const json& planner = config.at("planner");
  CostParams cost = task.cost;
  cost.epsilon = planner.at("epsilon").get<double>();
  const double eta = planner.at("eta").get<double>();

  ReplayReport report;
  report.recorded_cost = trajectory.at("cost").get<double>();
  Belief b = make_start_belief(task, particles, seed);
  bool exact = belief_json(b) == trajectory.at("start_belief");
  bool valid = true;
  const auto segments = segments_from_json(trajectory);
  const PropagationGate gate{eta};
  for (std::size_t i = 0; i < segments.size(); ++i)
  {
    const json& rec = trajectory.at("segments").at(i);
    PropagationResult r = sim.propagate(b, segments[i], cost, gate, pool);
    ReplaySegment s;
    s.recorded_cost = rec.at("cost").get<double>();
    s.replayed_cost = r.trace.segment_cost;
    s.recorded_alive = rec.at("alive_end").get<std::uint32_t>();
    s.replayed_alive = static_cast<std::uint32_t>(r.belief.alive_count());
    s.recorded_min_survival = rec.at("min_survival").get<double>();
    s.replayed_min_survival = r.trace.min_survival;
    s.belief_matches = belief_json(r.belief) == rec.at("belief_end");
    exact = exact && s.belief_matches && s.recorded_cost == s.replayed_cost && s.recorded_alive == s.replayed_alive &&
            s.recorded_min_survival == s.replayed_min_survival;
    valid = valid && r.status == PropagationStatus::completed;
    report.segments.push_back(s);
    b = std::move(r.belief);
  }
  report.replayed_cost = b.accumulated_cost;
  report.valid = valid;
  GoalRegion goal = task.goal;
  goal.gamma = planner.at("gamma").get<double>();
  report.in_goal = in_goal(b, goal);
  report.exact = exact && report.replayed_cost == report.recorded_cost;
  return report;
}

json EvaluationReport::to_json() const
{
  json rows = json::array();
  for (const auto& r : rollouts)
    rows.push_back({{"index", r.index},
                    {"seed", r.seed},
                    {"success", r.success},
                    {"culled", r.culled},
                    {"final_distance", r.final_distance},
                    {"min_survival", r.min_survival},
                    {"cost", r.cost},
                    {"max_force", r.max_force},
                    {"max_torque", r.max_torque}});
  return {{"schema_version", kArtifactSchemaVersion},
          {"kind", "evaluation"},
          {"config", config},
          {"rollouts", rows},
          {"successes", successes},
          {"rollout_count", rollouts.size()},
          {"success_rate", success_rate}};
}

EvaluationReport evaluate(const Task& task, const std::vector<ControlSegment>& segments, std::size_t rollouts,
                          std::uint64_t seed, WorkerPool* pool)
{
  const Simulator sim(task.simulation_model());
  EvaluationReport report;
  report.rollouts.resize(rollouts);
  const std::uint64_t base = derive_seed(seed, kEvaluationStream);
  const PropagationGate gate{1.0};

  const auto body = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i)
    {
      Rollout& r = report.rollouts[i];
      r.index = i;
      r.seed = derive_seed(base, i);
      Rng rng(r.seed);
      Belief b = sample_initial_belief(task.nominal_grasp, task.uncertainty, 1, rng);
      for (const auto& seg : segments)
      {
        PropagationResult p = sim.propagate(b, seg, task.cost, gate);
        r.max_force = std::max(r.max_force, p.trace.max_force);
        r.max_torque = std::max(r.max_torque, p.trace.max_torque);
        r.min_survival = std::min(r.min_survival, p.trace.min_survival);
        b = std::move(p.belief);
        if (p.status != PropagationStatus::completed)
        {
          r.culled = true;
          break;
        }
      }
      r.cost = b.accumulated_cost;
      r.final_distance = weighted_distance(b.particles[0].object_pose(), task.goal.goal_pose, task.goal.rot_weight);
      r.success = !r.culled && b.particles[0].alive && r.final_distance < task.goal.radius;
    }
  };
  if (pool != nullptr)
    pool->run(rollouts, body);
  else
    body(0, rollouts);

  for (const auto& r : report.rollouts)
    report.successes += r.success ? 1 : 0;
  report.success_rate =
      rollouts == 0 ? 0.0 : static_cast<double>(report.successes) / static_cast<double>(rollouts);
  report.config = {{"task", {{"name", task.name}, {"hash", task_hash(task)}}},
                   {"rollouts", rollouts},
                   {"seed", seed},
                   {"segments", segments.size()}};
  return report;
}

EvaluationReport evaluate(const Task& task, const json& trajectory, std::size_t rollouts, std::uint64_t seed,
                          WorkerPool* pool)
{
  check_trajectory(task, trajectory);
  EvaluationReport report = evaluate(task, segments_from_json(trajectory), rollouts, seed, pool);
  report.config["trajectory_content_hash"] = trajectory.value("content_hash", "");
  report.config["trajectory_config_hash"] = trajectory.value("config_hash", "");
  return report;
}

std::vector<SweepRow> sweep(const Task& task, const SweepSettings& settings, WorkerPool* pool, std::ostream* progress)
{
  std::vector<SweepRow> rows;
  for (std::size_t n : settings.particles)
    for (std::size_t budget : settings.budgets)
      for (std::size_t rep = 0; rep < settings.repetitions; ++rep)
      {
        SweepRow row;
        row.particles = n;
        row.budget = budget;
        row.repetition = rep;
        row.seed = derive_seed(settings.seed, rep);

        PlanRequest req;
        req.particles = n;
        req.budget = budget;
        req.wall_clock = settings.wall_clock;
        req.seed = row.seed;
        req.algorithm = settings.algorithm;
        const PlanOutcome out = plan(task, req, pool);
        row.solved = out.result.success();
        if (row.solved)
        {
          row.first_solution_iteration = out.result.improvements.front().iteration;
          row.first_cost = out.result.improvements.front().cost;
          row.final_cost = out.result.best->cost;
          const EvaluationReport report =
              evaluate(task, out.result.best->segments, settings.rollouts, derive_seed(row.seed, kEvaluationStream), pool);
          row.eval_success_rate = report.success_rate;
          row.eval_rollouts = settings.rollouts;
        }
        if (progress != nullptr)
        {
          write_sweep_row(*progress, row);
          progress->flush();
        }
        rows.push_back(row);
      }
  return rows;
}

std::string format_double(double v)
{
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

void write_sweep_header(std::ostream& out)
{
  out << "particles,budget,repetition,seed,solved,first_solution_iteration,first_cost,final_cost,"
         "eval_success_rate,eval_rollouts\r\n";
}

void write_sweep_row(std::ostream& out, const SweepRow& r)
{
  const auto opt = [](const auto& v) -> std::string {
    if (!v)
      return "";
    if constexpr (std::is_same_v<std::decay_t<decltype(*v)>, double>)
      return format_double(*v);
    else
      return std::to_string(*v);
  };
  out << r.particles << ',' << r.budget << ',' << r.repetition << ',' << r.seed << ',' << (r.solved ? 1 : 0) << ','
      << opt(r.first_solution_iteration) << ',' << opt(r.first_cost) << ',' << opt(r.final_cost) << ','
      << opt(r.eval_success_rate) << ',' << r.eval_rollouts << "\r\n";
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows)
{
  write_sweep_header(out);
  for (const auto& r : rows)
    write_sweep_row(out, r);
}

std::vector<SweepRow> read_sweep_csv(std::istream& in)
{
  std::vector<SweepRow> rows;
  std::string line;
  bool header = true;
  while (std::getline(in, line))
  {
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    if (line.empty())
      continue;
    if (header)
    {
      header = false;
      continue;
    }
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ','))
      f.push_back(cell);
    if (line.back() == ',')
      f.emplace_back();
    if (f.size() != 10)
      throw std::invalid_argument("malformed sweep row: " + line);
    SweepRow r;
    r.particles = std::stoull(f[0]);
    r.budget = std::stoull(f[1]);
    r.repetition = std::stoull(f[2]);
    r.seed = std::stoull(f[3]);
    r.solved = f[4] == "1";
    if (!f[5].empty())
      r.first_solution_iteration = std::stoull(f[5]);
    if (!f[6].empty())
      r.first_cost = std::stod(f[6]);
    if (!f[7].empty())
      r.final_cost = std::stod(f[7]);
    if (!f[8].empty())
      r.eval_success_rate = std::stod(f[8]);
    r.eval_rollouts = std::stoull(f[9]);
    rows.push_back(r);
  }
  return rows;
}

}  // namespace aobest
