#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "aobest/harness.hpp"
#include "aobest/stats.hpp"

namespace py = pybind11;
using namespace aobest;

namespace
{

std::unique_ptr<WorkerPool> env_pool()
{
  const std::size_t n = threads_from_env();
  return n > 1 ? std::make_unique<WorkerPool>(n) : nullptr;
}

std::string plan_json(const Task& task, std::uint64_t seed, std::size_t particles, std::optional<std::size_t> budget,
                      const std::string& algorithm, std::optional<double> wall_clock)
{
  PlanRequest req;
  req.seed = seed;
  req.particles = particles;
  req.budget = budget.value_or(task.default_budget);
  req.algorithm = parse_algorithm(algorithm);
  req.wall_clock = wall_clock;
  py::gil_scoped_release release;
  auto pool = env_pool();
  return trajectory_json(task, plan(task, req, pool.get())).dump();
}

std::string replay_json(const Task& task, const std::string& trajectory)
{
  const auto traj = nlohmann::json::parse(trajectory);
  py::gil_scoped_release release;
  auto pool = env_pool();
  return replay(task, traj, pool.get()).to_json().dump();
}

std::string evaluate_json(const Task& task, const std::string& trajectory, std::size_t rollouts, std::uint64_t seed)
{
  const auto traj = nlohmann::json::parse(trajectory);
  py::gil_scoped_release release;
  auto pool = env_pool();
  return evaluate(task, traj, rollouts, seed, pool.get()).to_json().dump();
}

std::string sweep_csv(const Task& task, std::vector<std::size_t> particles, std::vector<std::size_t> budgets,
                      std::size_t repetitions, std::uint64_t seed, std::size_t rollouts, const std::string& algorithm)
{
  SweepSettings s;
  s.particles = std::move(particles);
  s.budgets = std::move(budgets);
  s.repetitions = repetitions;
  s.seed = seed;
  s.rollouts = rollouts;
  s.algorithm = parse_algorithm(algorithm);
  std::ostringstream out;
  {
    py::gil_scoped_release release;
    auto pool = env_pool();
    write_sweep_csv(out, sweep(task, s, pool.get()));
  }
  return out.str();
}

}  // namespace

PYBIND11_MODULE(_core, m)
{
  m.doc() = "Belief-space EST planners for compliant planar assembly";

  py::register_exception<ArtifactMismatch>(m, "ArtifactMismatch", PyExc_ValueError);
  py::register_exception<TaskError>(m, "TaskError", PyExc_ValueError);

  py::class_<Task>(m, "Task")
      .def_readonly("name", &Task::name)
      .def_readonly("description", &Task::description)
      .def_readonly("default_particles", &Task::default_particles)
      .def_readonly("default_budget", &Task::default_budget)
      .def_property_readonly("hash", [](const Task& t) { return task_hash(t); })
      .def("to_json", [](const Task& t) { return task_to_json(t).dump(); })
      .def_static("from_json", [](const std::string& text) { return task_from_json(nlohmann::json::parse(text)); })
      .def("__eq__", [](const Task& a, const Task& b) { return a == b; })
      .def("__repr__", [](const Task& t) { return "<aobest.Task " + t.name + " " + task_hash(t) + ">"; });

  m.def("builtin_names", &builtin_names, "Names of the builtin tasks.");
  m.def("resolve_task", &resolve_task, py::arg("name_or_path"), "Builtin task by name, or a task JSON file.");

  m.def("plan_json", &plan_json, py::arg("task"), py::arg("seed") = 0, py::arg("particles") = 10,
        py::arg("budget") = py::none(), py::arg("algorithm") = "ao-b-est", py::arg("wall_clock") = py::none());
  m.def("replay_json", &replay_json, py::arg("task"), py::arg("trajectory"));
  m.def("evaluate_json", &evaluate_json, py::arg("task"), py::arg("trajectory"), py::arg("rollouts") = 100,
        py::arg("seed") = 0);
  m.def("sweep_csv", &sweep_csv, py::arg("task"), py::arg("particles"), py::arg("budgets"),
        py::arg("repetitions") = 1, py::arg("seed") = 0, py::arg("rollouts") = 100, py::arg("algorithm") = "ao-b-est");

  m.def("fisher_exact", &fisher_exact, py::arg("successes_a"), py::arg("n_a"), py::arg("successes_b"), py::arg("n_b"),
        "Two-sided Fisher exact test p-value.");
  m.def(
      "welch_t",
      [](const std::vector<double>& a, const std::vector<double>& b) {
        const WelchResult r = welch_t(a, b);
        return py::make_tuple(r.t, r.df, r.p);
      },
      py::arg("a"), py::arg("b"), "Welch's t-test; returns (t, df, p).");
  m.def("derive_seed", &derive_seed, py::arg("seed"), py::arg("stream"));
}
