#include "aobest/tasks.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace aobest
{

using nlohmann::json;

SimulationModel Task::simulation_model() const
{
  SimulationModel m;
  m.scene = scene;
  m.body = object;
  m.gains = gains;
  m.limits = limits;
  m.contact = contact;
  m.gravity = gravity;
  return m;
}

PlannerConfig Task::planner_config() const
{
  PlannerConfig cfg;
  cfg.iteration_budget = default_budget;
  cfg.segment_min = segment_min;
  cfg.segment_max = segment_max;
  cfg.bounds = control;
  cfg.grid = grid;
  cfg.particles = default_particles;
  cfg.gamma = goal.gamma;
  cfg.eta = eta;
  cfg.cost = cost;
  cfg.t_max = t_max;
  return cfg;
}

TaskError::TaskError(Kind kind, std::string path, const std::string& message)
    : std::runtime_error((kind == Kind::schema      ? "schema error at '"
                          : kind == Kind::invariant ? "invariant violation at '"
                                                    : "cannot read '") +
                         path + "': " + message),
      kind_(kind),
      path_(std::move(path))
{
}

std::uint64_t fnv1a(std::string_view bytes)
{
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes)
  {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

namespace
{

json pose_json(const Pose2& p) { return {{"x", p.x}, {"y", p.y}, {"theta", p.theta}}; }
json twist_json(const Twist2& t) { return {{"vx", t.vx}, {"vy", t.vy}, {"omega", t.omega}}; }

json polygons_json(const std::vector<ConvexPolygon>& polys)
{
  json arr = json::array();
  for (const auto& poly : polys)
  {
    json verts = json::array();
    for (const auto& v : poly.vertices())
      verts.push_back({v.x, v.y});
    arr.push_back(std::move(verts));
  }
  return arr;
}

// Schema accessors; every failure names the full field path.
class Reader
{
public:
  static const json& field(const json& obj, const std::string& path, const char* key)
  {
    const std::string p = path.empty() ? key : path + "." + key;
    if (!obj.is_object())
      throw TaskError(TaskError::Kind::schema, path.empty() ? "<root>" : path, "expected an object");
    const auto it = obj.find(key);
    if (it == obj.end())
      throw TaskError(TaskError::Kind::schema, p, "missing required field");
    return *it;
  }

  static double number(const json& obj, const std::string& path, const char* key)
  {
    const json& v = field(obj, path, key);
    if (!v.is_number())
      throw TaskError(TaskError::Kind::schema, join(path, key), "expected a number");
    return v.get<double>();
  }

  static double number_or(const json& obj, const std::string& path, const char* key, double fallback)
  {
    if (!obj.contains(key))
      return fallback;
    return number(obj, path, key);
  }

  static std::size_t count(const json& obj, const std::string& path, const char* key)
  {
    const json& v = field(obj, path, key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
      throw TaskError(TaskError::Kind::schema, join(path, key), "expected a non-negative integer");
    return v.get<std::size_t>();
  }

  static std::string text(const json& obj, const std::string& path, const char* key)
  {
    const json& v = field(obj, path, key);
    if (!v.is_string())
      throw TaskError(TaskError::Kind::schema, join(path, key), "expected a string");
    return v.get<std::string>();
  }

  static Pose2 pose(const json& obj, const std::string& path, const char* key)
  {
    const json& v = field(obj, path, key);
    const std::string p = join(path, key);
    return {number(v, p, "x"), number(v, p, "y"), number(v, p, "theta")};
  }

  static Twist2 twist(const json& obj, const std::string& path, const char* key)
  {
    const json& v = field(obj, path, key);
    const std::string p = join(path, key);
    return {number(v, p, "vx"), number(v, p, "vy"), number(v, p, "omega")};
  }

  static std::vector<ConvexPolygon> polygons(const json& obj, const std::string& path, const char* key)
  {
    const json& arr = field(obj, path, key);
    const std::string p = join(path, key);
    if (!arr.is_array() || arr.empty())
      throw TaskError(TaskError::Kind::schema, p, "expected a non-empty array of polygons");
    std::vector<ConvexPolygon> out;
    for (std::size_t i = 0; i < arr.size(); ++i)
    {
      const std::string pp = p + "[" + std::to_string(i) + "]";
      const json& verts = arr[i];
      if (!verts.is_array())
        throw TaskError(TaskError::Kind::schema, pp, "expected an array of [x, y] vertices");
      if (verts.size() < 3)
        throw TaskError(TaskError::Kind::schema, pp,
                        "polygon needs at least 3 vertices, got " + std::to_string(verts.size()));
      std::vector<Vec2> vs;
      for (std::size_t k = 0; k < verts.size(); ++k)
      {
        const json& v = verts[k];
        if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
          throw TaskError(TaskError::Kind::schema, pp + "[" + std::to_string(k) + "]",
                          "expected a vertex [x, y]");
        vs.push_back({v[0].get<double>(), v[1].get<double>()});
      }
      try
      {
        out.emplace_back(std::move(vs));
      }
      catch (const std::invalid_argument& e)
      {
        throw TaskError(TaskError::Kind::invariant, pp, e.what());
      }
    }
    return out;
  }

  static std::string join(const std::string& path, const char* key)
  {
    return path.empty() ? std::string(key) : path + "." + key;
  }
};

void require(bool ok, const std::string& path, const std::string& message)
{
  if (!ok)
    throw TaskError(TaskError::Kind::invariant, path, message);
}

}  // namespace

json task_to_json(const Task& t)
{
  json scene = json::array();
  for (const auto& body : t.scene)
    scene.push_back({{"name", body.name}, {"pose", pose_json(body.pose)}, {"polygons", polygons_json(body.shape)}});
  return {
      {"schema_version", kTaskSchemaVersion},
      {"name", t.name},
      {"description", t.description},
      {"scene", scene},
      {"object",
       {{"mass", t.object.mass},
        {"inertia", t.object.inertia},
        {"friction", t.object.friction},
        {"polygons", polygons_json(t.object.shape)}}},
      {"nominal_grasp", pose_json(t.nominal_grasp)},
      {"uncertainty", {{"sigma_trans", t.uncertainty.sigma_trans}, {"sigma_rot", t.uncertainty.sigma_rot}}},
      {"gains",
       {{"kp_trans", t.gains.kp_trans},
        {"kp_rot", t.gains.kp_rot},
        {"kd_trans", t.gains.kd_trans},
        {"kd_rot", t.gains.kd_rot}}},
      {"limits",
       {{"max_force", t.limits.max_force},
        {"max_torque", t.limits.max_torque},
        {"dt", t.limits.dt},
        {"solver_iterations", t.limits.solver_iterations}}},
      {"contact", {{"slop", t.contact.slop}, {"baumgarte", t.contact.baumgarte}}},
      {"gravity", {t.gravity.x, t.gravity.y}},
      {"goal",
       {{"pose", pose_json(t.goal.goal_pose)},
        {"radius", t.goal.radius},
        {"gamma", t.goal.gamma},
        {"rot_weight", t.goal.rot_weight}}},
      {"validity", {{"eta", t.eta}}},
      {"control",
       {{"lo", twist_json(t.control.lo)},
        {"hi", twist_json(t.control.hi)},
        {"segment_min", t.segment_min},
        {"segment_max", t.segment_max}}},
      {"cost",
       {{"epsilon", t.cost.epsilon}, {"l_max_clip", t.cost.l_max_clip ? json(*t.cost.l_max_clip) : json(nullptr)}}},
      {"t_max", t.t_max},
      {"grid", {{"dx", t.grid.dx}, {"dy", t.grid.dy}, {"dtheta", t.grid.dtheta}}},
      {"planner", {{"particles", t.default_particles}, {"iteration_budget", t.default_budget}}},
  };
}

Task task_from_json(const json& j)
{
  using R = Reader;
  if (!j.is_object())
    throw TaskError(TaskError::Kind::schema, "<root>", "expected a JSON object");
  const json& version = R::field(j, "", "schema_version");
  if (!version.is_number_integer() || version.get<int>() != kTaskSchemaVersion)
    throw TaskError(TaskError::Kind::schema, "schema_version",
                    "unsupported version (expected " + std::to_string(kTaskSchemaVersion) + ")");

  Task t;
  t.name = R::text(j, "", "name");
  t.description = j.contains("description") ? R::text(j, "", "description") : std::string{};

  const json& scene = R::field(j, "", "scene");
  if (!scene.is_array())
    throw TaskError(TaskError::Kind::schema, "scene", "expected an array of static bodies");
  for (std::size_t i = 0; i < scene.size(); ++i)
  {
    const std::string p = "scene[" + std::to_string(i) + "]";
    StaticBody body;
    body.name = R::text(scene[i], p, "name");
    body.pose = R::pose(scene[i], p, "pose");
    body.shape = R::polygons(scene[i], p, "polygons");
    t.scene.push_back(std::move(body));
  }

  const json& object = R::field(j, "", "object");
  t.object.mass = R::number(object, "object", "mass");
  t.object.inertia = R::number(object, "object", "inertia");
  t.object.friction = R::number(object, "object", "friction");
  t.object.shape = R::polygons(object, "object", "polygons");

  t.nominal_grasp = R::pose(j, "", "nominal_grasp");

  const json& unc = R::field(j, "", "uncertainty");
  t.uncertainty = {R::number(unc, "uncertainty", "sigma_trans"), R::number(unc, "uncertainty", "sigma_rot")};

  const json& gains = R::field(j, "", "gains");
  t.gains = {R::number(gains, "gains", "kp_trans"), R::number(gains, "gains", "kp_rot"),
             R::number(gains, "gains", "kd_trans"), R::number(gains, "gains", "kd_rot")};

  const json& limits = R::field(j, "", "limits");
  t.limits.max_force = R::number(limits, "limits", "max_force");
  t.limits.max_torque = R::number(limits, "limits", "max_torque");
  t.limits.dt = R::number(limits, "limits", "dt");
  t.limits.solver_iterations = static_cast<int>(R::count(limits, "limits", "solver_iterations"));

  if (j.contains("contact"))
  {
    const json& c = j["contact"];
    t.contact.slop = R::number_or(c, "contact", "slop", t.contact.slop);
    t.contact.baumgarte = R::number_or(c, "contact", "baumgarte", t.contact.baumgarte);
  }
  if (j.contains("gravity"))
  {
    const json& g = j["gravity"];
    if (!g.is_array() || g.size() != 2 || !g[0].is_number() || !g[1].is_number())
      throw TaskError(TaskError::Kind::schema, "gravity", "expected [gx, gy]");
    t.gravity = {g[0].get<double>(), g[1].get<double>()};
  }

  const json& goal = R::field(j, "", "goal");
  t.goal.goal_pose = R::pose(goal, "goal", "pose");
  t.goal.radius = R::number(goal, "goal", "radius");
  t.goal.gamma = R::number(goal, "goal", "gamma");
  t.goal.rot_weight = R::number(goal, "goal", "rot_weight");

  const json& validity = R::field(j, "", "validity");
  t.eta = R::number(validity, "validity", "eta");

  const json& control = R::field(j, "", "control");
  t.control.lo = R::twist(control, "control", "lo");
  t.control.hi = R::twist(control, "control", "hi");
  t.segment_min = R::number(control, "control", "segment_min");
  t.segment_max = R::number(control, "control", "segment_max");

  const json& cost = R::field(j, "", "cost");
  t.cost.epsilon = R::number(cost, "cost", "epsilon");
  if (cost.contains("l_max_clip") && !cost["l_max_clip"].is_null())
    t.cost.l_max_clip = R::number(cost, "cost", "l_max_clip");

  t.t_max = R::number(j, "", "t_max");

  const json& grid = R::field(j, "", "grid");
  t.grid = {R::number(grid, "grid", "dx"), R::number(grid, "grid", "dy"), R::number(grid, "grid", "dtheta")};

  if (j.contains("planner"))
  {
    const json& planner = j["planner"];
    if (planner.contains("particles"))
      t.default_particles = R::count(planner, "planner", "particles");
    if (planner.contains("iteration_budget"))
      t.default_budget = R::count(planner, "planner", "iteration_budget");
  }

  validate_task(t);
  return t;
}

void validate_task(const Task& t)
{
  require(t.object.mass > 0.0, "object.mass", "must be positive");
  require(t.object.inertia > 0.0, "object.inertia", "must be positive");
  require(t.object.friction >= 0.0, "object.friction", "must be non-negative");
  require(t.uncertainty.sigma_trans >= 0.0, "uncertainty.sigma_trans", "must be non-negative");
  require(t.uncertainty.sigma_rot >= 0.0, "uncertainty.sigma_rot", "must be non-negative");
  require(t.gains.kp_trans > 0.0, "gains.kp_trans", "must be positive");
  require(t.gains.kp_rot > 0.0, "gains.kp_rot", "must be positive");
  require(t.gains.kd_trans > 0.0, "gains.kd_trans", "must be positive");
  require(t.gains.kd_rot > 0.0, "gains.kd_rot", "must be positive");
  require(t.limits.max_force > 0.0, "limits.max_force", "must be positive");
  require(t.limits.max_torque > 0.0, "limits.max_torque", "must be positive");
  require(t.limits.dt > 0.0, "limits.dt", "must be positive");
  require(t.limits.solver_iterations > 0, "limits.solver_iterations", "must be positive");
  require(t.contact.slop >= 0.0, "contact.slop", "must be non-negative");
  require(t.goal.radius > 0.0, "goal.radius", "must be positive");
  require(t.goal.gamma > 0.0 && t.goal.gamma <= 1.0, "goal.gamma", "must lie in (0, 1]");
  require(t.goal.rot_weight > 0.0, "goal.rot_weight", "must be positive");
  require(t.eta >= 0.0 && t.eta <= 1.0, "validity.eta", "must lie in [0, 1]");
  require(t.control.lo.vx <= t.control.hi.vx && t.control.lo.vy <= t.control.hi.vy &&
              t.control.lo.omega <= t.control.hi.omega,
          "control", "lo must not exceed hi");
  require(t.segment_min > 0.0 && t.segment_max >= t.segment_min, "control.segment_min",
          "segment bounds must satisfy 0 < min <= max");
  require(t.cost.epsilon > 0.0, "cost.epsilon", "must be positive");
  require(t.t_max > 0.0, "t_max", "must be positive");
  require(t.grid.dx > 0.0 && t.grid.dy > 0.0 && t.grid.dtheta > 0.0, "grid", "cell sizes must be positive");
  require(t.default_particles > 0, "planner.particles", "must be positive");
  require(t.default_budget > 0, "planner.iteration_budget", "must be positive");

  // nominal object resting at the goal must not intersect the scene beyond the contact slop
  const Simulator sim(t.simulation_model());
  Particle at_goal;
  at_goal.pose = t.goal.goal_pose;
  require(sim.penetration(at_goal) <= t.contact.slop + 1e-12, "goal.pose",
          "nominal object at the goal penetrates the scene");
}

Task load_task(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in)
    throw TaskError(TaskError::Kind::io, path.string(), "file not found or unreadable");
  json j;
  try
  {
    j = json::parse(in);
  }
  catch (const json::parse_error& e)
  {
    throw TaskError(TaskError::Kind::schema, "<root>", std::string("invalid JSON: ") + e.what());
  }
  return task_from_json(j);
}

void save_task(const Task& task, const std::filesystem::path& path)
{
  std::ofstream out(path);
  if (!out)
    throw TaskError(TaskError::Kind::io, path.string(), "cannot open for writing");
  out << task_to_json(task).dump(2) << '\n';
}

std::string task_hash(const Task& task)
{
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(task_to_json(task).dump())));
  return buf;
}

namespace
{

Task common_defaults()
{
  Task t;
  t.object.mass = 1.0;
  t.object.inertia = 0.01;
  t.object.friction = 0.3;
  t.uncertainty = {2.5e-3, 0.015};
  t.gains.kp_trans = 1000.0;
  t.gains.kp_rot = 60.0;
  t.gains.kd_trans = critical_damping(t.gains.kp_trans, t.object.mass);
  t.gains.kd_rot = critical_damping(t.gains.kp_rot, t.object.inertia);
  t.limits = {30.0, 3.0, 2e-3, 16};
  t.contact = {1e-4, 0.2};
  t.goal.gamma = 0.9;
  t.goal.rot_weight = 0.01;
  t.eta = 0.8;
  t.control.lo = {-0.05, -0.05, -0.2};
  t.control.hi = {0.05, 0.05, 0.2};
  t.segment_min = 0.1;
  t.segment_max = 0.5;
  t.cost.epsilon = 1e-3;
  t.t_max = 20.0;
  t.grid = {5e-3, 5e-3, 0.05};
  t.default_particles = 10;
  t.default_budget = 100000;
  return t;
}

StaticBody box_body(std::string name, double x0, double y0, double x1, double y1)
{
  return {std::move(name), {ConvexPolygon::box(x0, y0, x1, y1)}, Pose2::identity()};
}

Task peg2d()
{
  Task t = common_defaults();
  t.name = "peg2d";
  constexpr double peg_w = 0.02;
  constexpr double peg_h = 0.05;
  constexpr double hole_w = 1.05 * peg_w;
  constexpr double depth = 0.03;
  t.description =
      "Planar peg-in-hole: 20 mm x 50 mm peg into a 21 mm wide (5% clearance), 30 mm deep hole. "
      "Goal is full insertion; the ball radius covers the 0.5 mm per-side clearance.";
  t.scene = {
      box_body("block_left", -0.06, -0.04, -0.5 * hole_w, 0.0),
      box_body("block_right", 0.5 * hole_w, -0.04, 0.06, 0.0),
      box_body("hole_bottom", -0.5 * hole_w, -0.04, 0.5 * hole_w, -depth),
      box_body("fixture_left", -0.07, 0.0, -0.06, 0.09),
      box_body("fixture_right", 0.06, 0.0, 0.07, 0.09),
      box_body("fixture_top", -0.07, 0.09, 0.07, 0.1),
  };
  t.object.shape = {ConvexPolygon::box(-0.5 * peg_w, -0.5 * peg_h, 0.5 * peg_w, 0.5 * peg_h)};
  t.nominal_grasp = {0.0, 0.5 * peg_h + 0.01, 0.0};
  t.goal.goal_pose = {0.0, -depth + 0.5 * peg_h, 0.0};
  t.goal.radius = 1e-3;
  return t;
}

Task rail2d()
{
  Task t = common_defaults();
  t.name = "rail2d";
  constexpr double flange_half = 0.0175;  // 35 mm top-hat rail
  constexpr double web_half = 0.0135;
  constexpr double flange_top = 0.0075;
  constexpr double flange_bottom = 0.0065;
  constexpr double lobe_w = 0.005;
  constexpr double lobe_h = 0.012;
  constexpr double chamfer = 0.003;
  t.description =
      "Planar cross-section of a fuse clip snapped onto a 35 mm top-hat rail. The clip is two rigidly "
      "joined lobes whose inner faces match the flange width exactly (zero clearance); entry is "
      "possible because contacts tolerate 0.1 mm of slop. Inner lower lobe corners are chamfered.";
  t.scene = {
      box_body("mounting_plate", -0.06, -0.01, 0.06, 0.0),
      box_body("rail_web", -web_half, 0.0, web_half, flange_bottom),
      box_body("rail_flange", -flange_half, flange_bottom, flange_half, flange_top),
      box_body("fixture_left", -0.07, 0.0, -0.06, 0.05),
      box_body("fixture_right", 0.06, 0.0, 0.07, 0.05),
      box_body("fixture_top", -0.07, 0.05, 0.07, 0.06),
  };
  const double x_in = flange_half;
  const double x_out = flange_half + lobe_w;
  const double yb = -0.5 * lobe_h;
  const double yt = 0.5 * lobe_h;
  t.object.shape = {
      ConvexPolygon({{-x_out, yb}, {-x_in - chamfer, yb}, {-x_in, yb + chamfer}, {-x_in, yt}, {-x_out, yt}}),
      ConvexPolygon({{x_in + chamfer, yb}, {x_out, yb}, {x_out, yt}, {x_in, yt}, {x_in, yb + chamfer}}),
  };
  t.nominal_grasp = {0.0, flange_top + 0.5 * lobe_h + 0.008, 0.0};
  t.goal.goal_pose = {0.0, 0.5 * lobe_h, 0.0};
  t.goal.radius = 1e-3;
  return t;
}

Task puzzle2d()
{
  Task t = common_defaults();
  t.name = "puzzle2d";
  constexpr double tenon = 0.01;
  constexpr double slot = 0.0115;  // 1.5 mm clearance
  constexpr double top = 0.03;
  constexpr double end_x = 0.03;
  t.description =
      "Planar stepped tenon in an L-shaped slot: a vertical mating motion followed by a horizontal one. "
      "Planar reduction of a three-motion puzzle whose third motion is out of plane. Clearance 1.5 mm.";
  t.scene = {
      box_body("floor", -0.05, -0.01, 0.05, 0.0),
      box_body("left_wall", -0.05, 0.0, -0.5 * slot, top),
      box_body("ceiling", 0.5 * slot, slot, 0.05, top),
      box_body("end_wall", end_x, 0.0, 0.05, slot),
      box_body("fixture_left", -0.06, 0.0, -0.05, 0.07),
      box_body("fixture_right", 0.05, 0.0, 0.06, 0.07),
      box_body("fixture_top", -0.06, 0.07, 0.06, 0.08),
  };
  t.object.shape = {ConvexPolygon::box(-0.5 * tenon, -0.5 * tenon, 0.5 * tenon, 0.5 * tenon)};
  t.nominal_grasp = {0.0, top + 0.5 * tenon + 0.01, 0.0};
  t.goal.goal_pose = {end_x - 0.5 * tenon, 0.5 * tenon, 0.0};
  t.goal.radius = 2e-3;
  t.t_max = 30.0;
  return t;
}

}  // namespace

std::vector<std::string> builtin_names() { return {"peg2d", "rail2d", "puzzle2d"}; }

Task builtin(std::string_view name)
{
  Task t;
  if (name == "peg2d")
    t = peg2d();
  else if (name == "rail2d")
    t = rail2d();
  else if (name == "puzzle2d")
    t = puzzle2d();
  else
    throw std::invalid_argument("unknown builtin task '" + std::string(name) + "'");
  validate_task(t);
  return t;
}

Task resolve_task(const std::string& name_or_path)
{
  for (const auto& n : builtin_names())
    if (n == name_or_path)
      return builtin(n);
  return load_task(name_or_path);
}

}  // namespace aobest
