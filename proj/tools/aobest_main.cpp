// aobest: plan, replay, evaluate, sweep and significance tests for belief-space assembly planning.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "aobest/harness.hpp"
#include "aobest/stats.hpp"

using nlohmann::json;
using namespace aobest;

namespace
{

constexpr int kExitError = 1;
constexpr int kExitPlanFailed = 2;
constexpr int kExitReplayMismatch = 3;

std::unique_ptr<WorkerPool> make_pool()
{
  const std::size_t n = threads_from_env();
  return n > 1 ? std::make_unique<WorkerPool>(n) : nullptr;
}

json read_json(const std::string& path)
{
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("cannot read '" + path + "'");
  return json::parse(in);
}

void write_text(const std::string& path, const std::string& text)
{
  if (path.empty() || path == "-")
  {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw std::runtime_error("cannot write '" + path + "'");
  out << text;
}

struct PlanArgs
{
  std::string task;
  std::uint64_t seed{0};
  std::optional<std::size_t> particles;
  std::optional<std::size_t> budget;
  std::optional<double> wall_clock;
  std::string algorithm{"ao-b-est"};
  std::string out;
  std::string events;
};

int run_plan(const PlanArgs& a)
{
  const Task task = resolve_task(a.task);
  PlanRequest req;
  req.seed = a.seed;
  req.particles = a.particles.value_or(task.default_particles);
  req.budget = a.budget.value_or(task.default_budget);
  req.wall_clock = a.wall_clock;
  req.algorithm = parse_algorithm(a.algorithm);

  std::ofstream event_file;
  std::optional<EventLog> events;
  if (!a.events.empty())
  {
    event_file.open(a.events);
    if (!event_file)
      throw std::runtime_error("cannot write '" + a.events + "'");
    events.emplace(event_file);
  }
  auto pool = make_pool();
  const PlanOutcome outcome = plan(task, req, pool.get(), events ? &*events : nullptr);
  const json artifact = trajectory_json(task, outcome);
  write_text(a.out, artifact.dump(2) + "\n");

  const auto& stats = outcome.result.stats;
  if (!outcome.result.success())
  {
    std::fprintf(stderr,
                 "planning failed: no goal belief within %zu iterations (%zu nodes; rejected %zu invalid, %zu over cost, "
                 "%zu over time; %.1f s)\n",
                 stats.iterations, stats.nodes, stats.rejected_invalid, stats.rejected_cost, stats.rejected_time,
                 stats.seconds);
    return kExitPlanFailed;
  }
  std::fprintf(stderr, "solved %s: cost %.6g, %zu segments, %zu improvements, %zu iterations, %.1f s\n",
               task.name.c_str(), outcome.result.best->cost, outcome.result.best->segments.size(),
               outcome.result.improvements.size(), stats.iterations, stats.seconds);
  return 0;
}

int run_replay(const std::string& task_name, const std::string& trajectory, const std::string& out)
{
  const Task task = resolve_task(task_name);
  auto pool = make_pool();
  const ReplayReport report = replay(task, read_json(trajectory), pool.get());
  write_text(out, report.to_json().dump(2) + "\n");
  std::fprintf(stderr, "replayed cost %.17g (recorded %.17g): %s\n", report.replayed_cost, report.recorded_cost,
               report.exact ? "exact match" : "MISMATCH");
  return report.exact && report.valid && report.in_goal ? 0 : kExitReplayMismatch;
}

int run_evaluate(const std::string& task_name, const std::string& trajectory, std::size_t rollouts, std::uint64_t seed,
                 const std::string& out)
{
  const Task task = resolve_task(task_name);
  auto pool = make_pool();
  const EvaluationReport report = evaluate(task, read_json(trajectory), rollouts, seed, pool.get());
  write_text(out, report.to_json().dump(2) + "\n");
  std::fprintf(stderr, "success rate %zu/%zu = %.4f\n", report.successes, report.rollouts.size(),
               report.success_rate);
  return 0;
}

struct SweepArgs
{
  std::string task;
  std::vector<std::size_t> particles;
  std::vector<std::size_t> budgets;
  std::size_t repetitions{1};
  std::uint64_t seed{0};
  std::size_t rollouts{100};
  std::string algorithm{"ao-b-est"};
  std::optional<double> wall_clock;
  std::string out;
};

int run_sweep(const SweepArgs& a)
{
  const Task task = resolve_task(a.task);
  SweepSettings s;
  s.particles = a.particles;
  s.budgets = a.budgets;
  s.repetitions = a.repetitions;
  s.seed = a.seed;
  s.rollouts = a.rollouts;
  s.algorithm = parse_algorithm(a.algorithm);
  s.wall_clock = a.wall_clock;
  auto pool = make_pool();
  std::ostringstream csv;
  write_sweep_csv(csv, sweep(task, s, pool.get(), a.out.empty() || a.out == "-" ? nullptr : &std::cerr));
  write_text(a.out, csv.str());
  return 0;
}

std::vector<double> parse_list(const std::string& text)
{
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty())
      out.push_back(std::stod(item));
  return out;
}

double median(std::vector<double> v)
{
  if (v.empty())
    return std::nan("");
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

// Compares two particle counts of a sweep: pooled rollouts (Fisher) and per-plan rates (Welch).
int run_compare(const std::string& csv_path, std::size_t group_a, std::size_t group_b)
{
  std::ifstream in(csv_path);
  if (!in)
    throw std::runtime_error("cannot read '" + csv_path + "'");
  const auto rows = read_sweep_csv(in);
  struct Group
  {
    std::uint64_t successes{0};
    std::uint64_t trials{0};
    std::vector<double> rates;
  };
  std::map<std::size_t, Group> groups;
  std::size_t nominal_rollouts = 0;
  for (const auto& r : rows)
    nominal_rollouts = std::max(nominal_rollouts, r.eval_rollouts);
  for (const auto& r : rows)
  {
    if (r.particles != group_a && r.particles != group_b)
      continue;
    Group& g = groups[r.particles];
    // an unsolved plan cannot be executed; every rollout of it counts as a failure
    const double rate = r.eval_success_rate.value_or(0.0);
    const std::uint64_t n = r.solved ? r.eval_rollouts : nominal_rollouts;
    g.rates.push_back(rate);
    g.trials += n;
    g.successes += static_cast<std::uint64_t>(std::llround(rate * static_cast<double>(n)));
  }
  const Group& a = groups[group_a];
  const Group& b = groups[group_b];
  json j{{"a", {{"particles", group_a}, {"plans", a.rates.size()}, {"successes", a.successes}, {"rollouts", a.trials},
                {"median_failure_rate", 1.0 - median(a.rates)}}},
         {"b", {{"particles", group_b}, {"plans", b.rates.size()}, {"successes", b.successes}, {"rollouts", b.trials},
                {"median_failure_rate", 1.0 - median(b.rates)}}},
         {"fisher_p", fisher_exact(a.successes, a.trials, b.successes, b.trials)}};
  if (a.rates.size() >= 2 && b.rates.size() >= 2)
  {
    const WelchResult w = welch_t(a.rates, b.rates);
    j["welch"] = {{"t", w.t}, {"df", w.df}, {"p", w.p}};
  }
  std::cout << j.dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Belief-space EST planning for compliant assembly"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "aobest 0.1.0");

  PlanArgs plan_args;
  auto* plan_cmd = app.add_subcommand("plan", "Plan a trajectory and write it as JSON");
  plan_cmd->add_option("--task", plan_args.task, "Builtin task name or task JSON file")->required();
  plan_cmd->add_option("--seed", plan_args.seed, "Random seed");
  plan_cmd->add_option("--particles", plan_args.particles, "Particle count N (default: task's)");
  plan_cmd->add_option("--budget", plan_args.budget, "Iteration budget (default: task's)");
  plan_cmd->add_option("--wall-clock", plan_args.wall_clock, "Additional wall-clock budget in seconds");
  plan_cmd->add_option("--algorithm", plan_args.algorithm, "ao-b-est or b-est")->capture_default_str();
  plan_cmd->add_option("--events", plan_args.events, "Write planner events as NDJSON to this file");
  plan_cmd->add_option("--out", plan_args.out, "Trajectory file ('-' for stdout)")->required();

  std::string replay_task, replay_traj, replay_out;
  auto* replay_cmd = app.add_subcommand("replay", "Re-execute a trajectory and compare with the recorded trace");
  replay_cmd->add_option("--task", replay_task, "Builtin task name or task JSON file")->required();
  replay_cmd->add_option("--trajectory", replay_traj, "Trajectory file")->required();
  replay_cmd->add_option("--out", replay_out, "Replay report file (default stdout)");

  std::string eval_task, eval_traj, eval_out;
  std::size_t eval_rollouts = 100;
  std::uint64_t eval_seed = 0;
  auto* eval_cmd = app.add_subcommand("evaluate", "Monte-Carlo execution of a trajectory");
  eval_cmd->add_option("--task", eval_task, "Builtin task name or task JSON file")->required();
  eval_cmd->add_option("--trajectory", eval_traj, "Trajectory file")->required();
  eval_cmd->add_option("--rollouts", eval_rollouts, "Number of rollouts M")->capture_default_str();
  eval_cmd->add_option("--seed", eval_seed, "Random seed");
  eval_cmd->add_option("--out", eval_out, "Evaluation report file (default stdout)");

  SweepArgs sweep_args;
  auto* sweep_cmd = app.add_subcommand("sweep", "Plan and evaluate over a grid of settings; writes CSV");
  sweep_cmd->add_option("--task", sweep_args.task, "Builtin task name or task JSON file")->required();
  sweep_cmd->add_option("--particles", sweep_args.particles, "Comma-separated particle counts")->delimiter(',');
  sweep_cmd->add_option("--budget,--budgets", sweep_args.budgets, "Comma-separated iteration budgets")->delimiter(',');
  sweep_cmd->add_option("--repetitions", sweep_args.repetitions, "Plans per setting")->capture_default_str();
  sweep_cmd->add_option("--seed", sweep_args.seed, "Random seed");
  sweep_cmd->add_option("--rollouts", sweep_args.rollouts, "Evaluation rollouts per plan")->capture_default_str();
  sweep_cmd->add_option("--algorithm", sweep_args.algorithm, "ao-b-est or b-est")->capture_default_str();
  sweep_cmd->add_option("--wall-clock", sweep_args.wall_clock, "Additional wall-clock budget per plan");
  sweep_cmd->add_option("--out", sweep_args.out, "CSV file (default stdout)");

  auto* stats_cmd = app.add_subcommand("stats", "Significance tests");
  stats_cmd->require_subcommand(1);
  std::vector<std::uint64_t> fisher_counts;
  auto* fisher_cmd = stats_cmd->add_subcommand("fisher", "Two-sided Fisher exact test");
  fisher_cmd->add_option("counts", fisher_counts, "successes_a trials_a successes_b trials_b")->expected(4)->required();
  std::string welch_a, welch_b;
  auto* welch_cmd = stats_cmd->add_subcommand("welch", "Welch's unequal-variance t-test");
  welch_cmd->add_option("--a", welch_a, "Comma-separated sample A")->required();
  welch_cmd->add_option("--b", welch_b, "Comma-separated sample B")->required();
  std::string compare_csv;
  std::size_t compare_a = 1, compare_b = 10;
  auto* compare_cmd = stats_cmd->add_subcommand("compare", "Fisher and Welch tests between two particle counts of a sweep");
  compare_cmd->add_option("--csv", compare_csv, "Sweep CSV")->required();
  compare_cmd->add_option("--a", compare_a, "First particle count")->capture_default_str();
  compare_cmd->add_option("--b", compare_b, "Second particle count")->capture_default_str();

  auto* task_cmd = app.add_subcommand("task", "Inspect task definitions");
  task_cmd->require_subcommand(1);
  auto* list_cmd = task_cmd->add_subcommand("list", "List builtin tasks");
  std::string export_name, export_out;
  auto* export_cmd = task_cmd->add_subcommand("export", "Write a builtin task as JSON");
  export_cmd->add_option("name", export_name, "Builtin task name")->required();
  export_cmd->add_option("--out", export_out, "Output file (default stdout)");
  std::string check_path;
  auto* check_cmd = task_cmd->add_subcommand("check", "Validate a task file and print its hash");
  check_cmd->add_option("path", check_path, "Task JSON file")->required();

  CLI11_PARSE(app, argc, argv);

  try
  {
    if (*plan_cmd)
      return run_plan(plan_args);
    if (*replay_cmd)
      return run_replay(replay_task, replay_traj, replay_out);
    if (*eval_cmd)
      return run_evaluate(eval_task, eval_traj, eval_rollouts, eval_seed, eval_out);
    if (*sweep_cmd)
      return run_sweep(sweep_args);
    if (*fisher_cmd)
    {
      const double p = fisher_exact(fisher_counts[0], fisher_counts[1], fisher_counts[2], fisher_counts[3]);
      std::cout << json{{"test", "fisher_exact"}, {"p", p}}.dump() << '\n';
      return 0;
    }
    if (*welch_cmd)
    {
      const WelchResult w = welch_t(parse_list(welch_a), parse_list(welch_b));
      std::cout << json{{"test", "welch_t"}, {"t", w.t}, {"df", w.df}, {"p", w.p}}.dump() << '\n';
      return 0;
    }
    if (*compare_cmd)
      return run_compare(compare_csv, compare_a, compare_b);
    if (*list_cmd)
    {
      for (const auto& name : builtin_names())
        std::cout << name << '\t' << task_hash(builtin(name)) << '\n';
      return 0;
    }
    if (*export_cmd)
    {
      write_text(export_out, task_to_json(builtin(export_name)).dump(2) + "\n");
      return 0;
    }
    if (*check_cmd)
    {
      const Task t = load_task(check_path);
      std::cout << t.name << '\t' << task_hash(t) << '\n';
      return 0;
    }
  }
  catch (const std::exception& e)
  {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitError;
  }
  return 0;
}
