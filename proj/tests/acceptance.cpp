// Statistical and property acceptance runs. Prints one PASS/FAIL line per criterion and exits
// non-zero if any fails. Expect roughly an hour on a single core.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "aobest/harness.hpp"
#include "aobest/stats.hpp"
#include "oracles.hpp"

using namespace aobest;
using nlohmann::json;

namespace
{

struct Verdict
{
  int id;
  bool pass;
  std::string detail;
};

std::vector<Verdict> verdicts;
std::string oracle_detail, table_detail;
bool oracle_pass = false, table_pass = false;

void record(int id, bool pass, std::string detail)
{
  std::fprintf(stderr, "[criterion %d] %s %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
  verdicts.push_back({id, pass, std::move(detail)});
}

std::string fmt(const char* f, auto... args)
{
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double median(std::vector<double> v)
{
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

class Stopwatch
{
public:
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count(); }

private:
  std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

std::unique_ptr<WorkerPool> env_pool()
{
  const std::size_t n = threads_from_env();
  return n > 1 ? std::make_unique<WorkerPool>(n) : nullptr;
}

// Wrench checks over every successful rollout seen anywhere in the run.
std::size_t checked_successes = 0;
std::size_t limit_violations = 0;

void audit(const Task& task, const EvaluationReport& report)
{
  for (const auto& r : report.rollouts)
  {
    if (!r.success)
      continue;
    ++checked_successes;
    if (r.max_force > task.limits.max_force || r.max_torque > task.limits.max_torque)
      ++limit_violations;
  }
}

void spring_damper_fidelity()
{
  const Stopwatch clock;
  const Task task = builtin("peg2d");
  SimulationModel m = task.simulation_model();
  m.scene.clear();
  m.gravity = {0.0, 0.0};
  m.limits.dt = 1e-3;
  const Simulator sim(m);
  const double x0 = 0.01, th0 = 0.05;
  const double wt = std::sqrt(m.gains.kp_trans / m.body.mass);
  const double wr = std::sqrt(m.gains.kp_rot / m.body.inertia);
  Particle p;
  p.pose = {x0, 0.0, th0};
  const SetpointStep hold{Pose2::identity(), Pose2::identity(), {}, {}};
  double worst = 0.0, overshoot = 0.0;
  for (int k = 1; k <= 2000; ++k)
  {
    p = sim.step(p, hold);
    const double t = k * m.limits.dt;
    const double xr = oracle::critically_damped(x0, wt, t);
    const double tr = oracle::critically_damped(th0, wr, t);
    if (xr > 1e-3 * x0)
      worst = std::max(worst, std::abs(p.pose.x - xr) / xr);
    if (tr > 1e-3 * th0)
      worst = std::max(worst, std::abs(p.pose.theta - tr) / tr);
    overshoot = std::max({overshoot, -p.pose.x / x0, -p.pose.theta / th0});
  }
  const double secs = clock.seconds();
  record(1, worst < 1e-3 && overshoot < 1e-3 && secs < 1.0,
         fmt("max relative error %.3g (< 1e-3), overshoot %.3g%% (< 0.1%%), %.3f s (< 1 s)", worst, 100.0 * overshoot,
             secs));
}

void determinism()
{
  const Stopwatch clock;
  const Task task = builtin("peg2d");
  PlanRequest req;
  req.particles = 10;
  req.budget = 20000;
  req.seed = 5;
  req.algorithm = Algorithm::ao_b_est;

  struct Run
  {
    std::string plan, replay, evaluation;
    bool exact{false};
  };
  const auto pipeline = [&](std::size_t threads) {
    std::unique_ptr<WorkerPool> pool = threads > 1 ? std::make_unique<WorkerPool>(threads) : nullptr;
    Run r;
    json traj = trajectory_json(task, plan(task, req, pool.get()));
    const ReplayReport rep = replay(task, traj, pool.get());
    const EvaluationReport ev = evaluate(task, traj, 100, derive_seed(req.seed, kEvaluationStream), pool.get());
    audit(task, ev);
    r.exact = rep.exact && traj["success"].get<bool>();
    traj.erase("timing");
    r.plan = traj.dump();
    r.replay = rep.to_json().dump();
    r.evaluation = ev.to_json().dump();
    return r;
  };

  const Run base = pipeline(1);
  bool identical = base.exact;
  std::string detail = fmt("reference plan %s", base.exact ? "solved, replay exact" : "NOT solved or replay inexact");
  for (std::size_t threads : {1, 4, 8})
  {
    const Run r = pipeline(threads);
    const bool same = r.exact && r.plan == base.plan && r.replay == base.replay && r.evaluation == base.evaluation;
    identical = identical && same;
    detail += fmt("; %zu thread(s) %s", threads, same ? "identical" : "DIFFERENT");
  }
  record(2, identical, detail + fmt(" (%.0f s)", clock.seconds()));
}

struct AoRun
{
  bool solved{false};
  bool contract{false};
  bool strictly_decreasing{true};
  double first_cost{0.0};
  double final_cost{0.0};
};

void feasibility_and_convergence(WorkerPool* pool)
{
  const Stopwatch clock;
  const Task task = builtin("peg2d");
  std::vector<AoRun> runs;
  for (std::uint64_t seed = 0; seed < 20; ++seed)
  {
    PlanRequest req;
    req.particles = 10;
    req.budget = task.default_budget;
    req.seed = seed;
    req.algorithm = Algorithm::ao_b_est;
    const PlanOutcome out = plan(task, req, pool);
    AoRun run;
    run.solved = out.result.success();
    if (run.solved)
    {
      const Trajectory& t = *out.result.best;
      const ReplayReport rep = replay(task, trajectory_json(task, out), pool);
      bool substeps_valid = true;
      for (const auto& s : rep.segments)
        substeps_valid = substeps_valid && s.replayed_min_survival >= task.eta;
      run.contract = t.beliefs.front() == out.start && out.start == make_start_belief(task, 10, seed) && rep.valid &&
                     substeps_valid && rep.in_goal && rep.exact;
      const auto& log = out.result.improvements;
      for (std::size_t i = 1; i < log.size(); ++i)
        run.strictly_decreasing = run.strictly_decreasing && log[i].cost < log[i - 1].cost;
      run.first_cost = log.front().cost;
      run.final_cost = t.cost;
    }
    std::fprintf(stderr, "  ao-b-est peg2d seed %2llu: %s first %.6g final %.6g (%zu improvements)\n",
                 static_cast<unsigned long long>(seed), run.solved ? "solved" : "unsolved", run.first_cost,
                 run.final_cost, out.result.improvements.size());
    runs.push_back(run);
  }
  const double secs = clock.seconds();

  const auto ok = std::count_if(runs.begin(), runs.end(), [](const AoRun& r) { return r.solved && r.contract; });
  record(3, ok == 20 && secs <= 600.0,
         fmt("%lld/20 runs returned a trajectory passing root/validity/goal checks (need 20/20), %.0f s (<= 600 s)",
             static_cast<long long>(ok), secs));

  std::vector<double> first, last;
  bool decreasing = true;
  for (const auto& r : runs)
  {
    decreasing = decreasing && r.strictly_decreasing;
    if (r.solved)
    {
      first.push_back(r.first_cost);
      last.push_back(r.final_cost);
    }
  }
  const bool have = !first.empty();
  const double mf = have ? median(first) : NAN, ml = have ? median(last) : NAN;
  record(5, have && decreasing && ml <= mf,
         fmt("improvement logs strictly decreasing: %s; median final cost %.6g <= median first-solution cost %.6g",
             decreasing ? "yes" : "NO", ml, mf));
}

void solution_finding(WorkerPool* pool)
{
  const Stopwatch clock;
  std::string detail;
  bool pass = true;
  for (const auto& [name, need] : {std::pair{"peg2d", 0.95}, std::pair{"rail2d", 0.80}})
  {
    const Task task = builtin(name);
    int solved = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed)
    {
      PlanRequest req;
      req.particles = task.default_particles;
      req.budget = task.default_budget;
      req.seed = seed;
      req.algorithm = Algorithm::b_est;
      solved += plan(task, req, pool).result.success() ? 1 : 0;
    }
    pass = pass && solved >= need * 20.0;
    detail += fmt("%s%s %d/20 (need >= %.0f%%)", detail.empty() ? "" : "; ", name, solved, 100.0 * need);
  }
  record(4, pass, detail + fmt(" (%.0f s)", clock.seconds()));
}

struct PlanEval
{
  bool solved{false};
  std::vector<bool> outcomes;  // per rollout; all false when no plan was found
};

void particle_robustness_and_table(WorkerPool* pool)
{
  const Stopwatch clock;
  const Task task = builtin("peg2d");
  const std::vector<std::size_t> counts{1, 4, 10};
  constexpr std::size_t plans = 20, rollouts = 100;
  constexpr std::uint64_t sweep_seed = 7;

  std::ofstream csv("acceptance_particle_sweep.csv", std::ios::binary);
  write_sweep_header(csv);
  std::vector<std::vector<PlanEval>> groups;
  std::vector<double> medians;
  for (std::size_t n : counts)
  {
    std::vector<PlanEval> group;
    std::vector<double> failure;
    for (std::size_t rep = 0; rep < plans; ++rep)
    {
      SweepRow row;
      row.particles = n;
      row.budget = task.default_budget;
      row.repetition = rep;
      row.seed = derive_seed(sweep_seed, rep);
      PlanRequest req;
      req.particles = n;
      req.budget = task.default_budget;
      req.seed = row.seed;
      req.algorithm = Algorithm::b_est;
      const PlanOutcome out = plan(task, req, pool);
      PlanEval pe;
      pe.solved = out.result.success();
      pe.outcomes.assign(rollouts, false);
      row.solved = pe.solved;
      if (pe.solved)
      {
        const EvaluationReport ev = evaluate(task, out.result.best->segments, rollouts,
                                             derive_seed(row.seed, kEvaluationStream), pool);
        audit(task, ev);
        for (std::size_t i = 0; i < rollouts; ++i)
          pe.outcomes[i] = ev.rollouts[i].success;
        row.first_solution_iteration = out.result.improvements.front().iteration;
        row.first_cost = out.result.improvements.front().cost;
        row.final_cost = out.result.best->cost;
        row.eval_success_rate = ev.success_rate;
        row.eval_rollouts = rollouts;
      }
      write_sweep_row(csv, row);
      csv.flush();
      const double ok = static_cast<double>(std::count(pe.outcomes.begin(), pe.outcomes.end(), true));
      failure.push_back(1.0 - ok / rollouts);
      std::fprintf(stderr, "  particles %2zu plan %2zu: %s failure rate %.2f\n", n, rep,
                   pe.solved ? "solved" : "unsolved", failure.back());
      group.push_back(std::move(pe));
    }
    medians.push_back(median(failure));
    groups.push_back(std::move(group));
  }

  const bool monotone = medians[0] >= medians[1] && medians[1] >= medians[2];
  const bool halved = medians[2] <= 0.5 * medians[0];
  const bool gap = monotone && halved;
  record(6, gap,
         fmt("median failure rate N=1 %.3f, N=4 %.3f, N=10 %.3f; non-increasing: %s; N=10 <= N=1 / 2: %s (%.0f s)",
             medians[0], medians[1], medians[2], monotone ? "yes" : "NO", halved ? "yes" : "NO", clock.seconds()));

  // small-sample comparison: 14 plans x 5 rollouts per planner
  const auto table = [](const std::vector<PlanEval>& g, std::size_t& successes, std::vector<double>& means) {
    successes = 0;
    for (std::size_t i = 0; i < 14; ++i)
    {
      const auto ok = static_cast<std::size_t>(std::count(g[i].outcomes.begin(), g[i].outcomes.begin() + 5, true));
      successes += ok;
      means.push_back(ok / 5.0);
    }
  };
  std::size_t s1 = 0, s10 = 0;
  std::vector<double> m1, m10;
  table(groups[0], s1, m1);
  table(groups[2], s10, m10);
  const double p_fisher = fisher_exact(s10, 70, s1, 70);
  const WelchResult welch = welch_t(m10, m1);
  const bool valid = p_fisher >= 0.0 && p_fisher <= 1.0 && welch.p >= 0.0 && welch.p <= 1.0;
  const bool detected = p_fisher < 0.05 && welch.p < 0.05;
  table_detail = fmt("14 x 5 comparison: N=10 %zu/70 vs N=1 %zu/70, Fisher p = %.3g; 14-mean Welch p = %.3g (t = %.3f, df = %.2f)",
                     s10, s1, p_fisher, welch.p, welch.t, welch.df);
  table_pass = valid && (!gap || detected);
}

void statistics_oracles()
{
  double worst_fisher = 0.0;
  for (unsigned na = 0; na <= 30; ++na)
    for (unsigned nb = 0; nb <= 30; ++nb)
      for (unsigned a = 0; a <= na; ++a)
        for (unsigned b = 0; b <= nb; ++b)
          worst_fisher = std::max(worst_fisher, std::abs(fisher_exact(a, na, b, nb) - oracle::fisher_enumerate(a, na, b, nb)));

  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> size(2, 20);
  std::uniform_real_distribution<double> mean(-1.0, 1.0), spread(0.05, 1.0);
  double worst_welch = 0.0;
  for (int trial = 0; trial < 100; ++trial)
  {
    std::vector<double> a(size(rng)), b(size(rng));
    std::normal_distribution<double> da(mean(rng), spread(rng)), db(mean(rng), spread(rng));
    for (auto& v : a)
      v = da(rng);
    for (auto& v : b)
      v = db(rng);
    const WelchResult r = welch_t(a, b);
    worst_welch = std::max(worst_welch, std::abs(r.p - oracle::t_two_sided_quadrature(r.t, r.df)));
  }
  oracle_pass = worst_fisher <= 1e-12 && worst_welch <= 1e-6;
  oracle_detail = fmt("Fisher vs enumeration max error %.2g (<= 1e-12); Welch vs quadrature max error %.2g (<= 1e-6)",
                      worst_fisher, worst_welch);
}

}  // namespace

int main()
{
  const Stopwatch total;
  auto pool = env_pool();

  spring_damper_fidelity();
  statistics_oracles();
  determinism();
  solution_finding(pool.get());
  feasibility_and_convergence(pool.get());
  particle_robustness_and_table(pool.get());
  record(7, oracle_pass && table_pass, oracle_detail + "; " + table_detail);
  record(8, limit_violations == 0 && checked_successes > 0,
         fmt("%zu successful rollouts audited, %zu exceeded %.0f N / %.0f N m", checked_successes, limit_violations,
             builtin("peg2d").limits.max_force, builtin("peg2d").limits.max_torque));

  std::sort(verdicts.begin(), verdicts.end(), [](const Verdict& a, const Verdict& b) { return a.id < b.id; });
  bool all = true;
  for (const auto& v : verdicts)
  {
    std::printf("criterion %d: %s  %s\n", v.id, v.pass ? "PASS" : "FAIL", v.detail.c_str());
    all = all && v.pass;
  }
  std::printf("acceptance: %s (%.0f s)\n", all ? "PASS" : "FAIL", total.seconds());
  return all ? 0 : 1;
}
