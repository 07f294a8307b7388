#include <chrono>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "fif/error.hpp"
#include "fif/experiments.hpp"
#include "fif/scene.hpp"

namespace fif {

using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

const json& need(const json& cfg, const char* key) {
  if (!cfg.contains(key) || cfg[key].is_null()) {
    throw Error(ErrorCode::InvalidArgument, std::string("missing '") + key + "'");
  }
  return cfg[key];
}

std::string need_string(const json& cfg, const char* key) {
  return need(cfg, key).get<std::string>();
}

Vec3 vec3_or(const json& cfg, const char* key, const Vec3& fallback) {
  if (!cfg.contains(key)) return fallback;
  const json& j = cfg[key];
  if (!j.is_array() || j.size() != 3) {
    throw Error(ErrorCode::InvalidArgument, std::string(key) + " must be [x, y, z]");
  }
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

json vec3_json(const Vec3& v) { return {v.x(), v.y(), v.z()}; }

PinholeCamera camera_from(const json& cfg) {
  if (!cfg.contains("camera")) return default_camera();
  const json& c = cfg["camera"];
  return PinholeCamera::from_horizontal_fov(c.value("width", 640), c.value("height", 480),
                                            c.value("hfov_deg", 90.0) * std::numbers::pi / 180.0);
}

GridConfig grid_from(const json& cfg) {
  return cfg.contains("grid") ? parse_grid(cfg["grid"].get<std::string>()) : default_grid();
}

std::vector<std::string> models_from(const json& cfg, std::vector<std::string> fallback) {
  if (cfg.contains("models")) return cfg["models"].get<std::vector<std::string>>();
  if (cfg.contains("model")) return {cfg["model"].get<std::string>()};
  return fallback;
}

BenchConfig bench_from(const json& cfg, std::vector<std::string> default_models) {
  BenchConfig c;
  c.grid = grid_from(cfg);
  c.models = models_from(cfg, std::move(default_models));
  c.camera = camera_from(cfg);
  c.sigma = cfg.value("sigma", kDefaultSigma);
  c.n_poses = cfg.value("n_poses", 200);
  c.repeats = cfg.value("repeats", 5);
  c.seed = cfg.value("seed", std::uint64_t{1});
  c.threads = cfg.value("threads", 1);
  c.min_range = cfg.value("min_range", 0.5);
  c.include_point_cloud = cfg.value("point_cloud", true);
  if (c.n_poses < 1 || c.repeats < 1) {
    throw Error(ErrorCode::InvalidArgument, "n_poses and repeats must be positive");
  }
  return c;
}

Matchability matchability_from(const json& cfg) {
  MatchabilitySpec spec;
  spec.min_range = cfg.value("min_range", 0.0);
  spec.max_range = cfg.value("max_range", 1e30);
  if (cfg.contains("max_view_angle_deg")) {
    spec.max_view_angle = cfg["max_view_angle_deg"].get<double>() * std::numbers::pi / 180.0;
  }
  return make_matchability(spec);
}

void finish(Report& report, const json& cfg) {
  if (cfg.contains("out") && !cfg["out"].is_null()) report.write(cfg["out"].get<std::string>());
}

// Field from --field, or built from --scene with --model / --grid.
Field field_from(const json& cfg, std::span<const Landmark> landmarks, FactorKind kind,
                 const PinholeCamera& camera) {
  if (cfg.contains("field")) {
    Field f = Field::load(cfg["field"].get<std::string>());
    f.set_matchability(matchability_from(cfg));
    return f;
  }
  const VisibilityModelPtr model = parse_model(cfg.value("model", "gp:70"), camera.half_fov);
  return Field::build(landmarks, grid_from(cfg), model, kind, matchability_from(cfg),
                      {cfg.value("sigma", kDefaultSigma), cfg.value("threads", 1)});
}

json cmd_gen_scene(const json& cfg) {
  const std::string out = need_string(cfg, "out");
  const int count = cfg.value("count", 1000);
  const Vec3 extent = vec3_or(cfg, "extent", Vec3(10, 10, 5));
  const Vec3 center = vec3_or(cfg, "center", Vec3::Zero());
  const auto seed = cfg.value("seed", std::uint64_t{1});
  std::vector<Cluster> clusters;
  for (const json& c : cfg.value("clusters", json::array())) {
    clusters.push_back({vec3_or(c, "center", Vec3::Zero()), c.value("radius", 0.5),
                        c.value("count", 100)});
  }
  if (count < 0) throw Error(ErrorCode::InvalidArgument, "count must be >= 0");
  const auto landmarks = generate_clustered_scene(clusters, count, extent, seed, center);
  write_scene(out, landmarks);
  Report r;
  r.experiment = "gen-scene";
  r.config = {{"count", count}, {"extent", vec3_json(extent)}, {"center", vec3_json(center)},
              {"seed", seed}, {"clusters", cfg.value("clusters", json::array())}};
  r.add("landmarks", static_cast<double>(landmarks.size()), "count");
  r.summary["scene"] = out;
  return r.to_json();
}

json cmd_build(const json& cfg) {
  const auto landmarks = read_scene(need_string(cfg, "scene"));
  const std::string out = need_string(cfg, "out");
  const PinholeCamera camera = camera_from(cfg);
  const GridConfig grid = grid_from(cfg);
  const std::string model_name = cfg.value("model", "gp:70");
  const FactorKind kind = factor_from_string(cfg.value("factor", "info"));
  const VisibilityModelPtr model = parse_model(model_name, camera.half_fov);
  const auto t0 = Clock::now();
  const Field field = Field::build(landmarks, grid, model, kind, matchability_from(cfg),
                                   {cfg.value("sigma", kDefaultSigma), cfg.value("threads", 1)});
  const double build_s = std::chrono::duration<double>(Clock::now() - t0).count();
  field.save(out);
  const MemoryStats m = field.memory_stats();
  Report r;
  r.experiment = "build";
  r.config = {{"grid", format_grid(grid)}, {"model", model_name}, {"factor", to_string(kind)},
              {"landmarks", landmarks.size()}, {"sigma", field.sigma()},
              {"min_range", cfg.value("min_range", 0.0)}};
  r.add("build", build_s, "s");
  r.add("voxels", static_cast<double>(m.voxel_count), "count");
  r.add("scalars_per_voxel", static_cast<double>(m.scalars_per_voxel), "count");
  r.add("bytes_factors", static_cast<double>(m.bytes_factors), "bytes");
  r.add("bytes_total", static_cast<double>(m.bytes_total), "bytes");
  r.add("file_bytes", static_cast<double>(std::filesystem::file_size(out)), "bytes");
  r.summary["field"] = out;
  return r.to_json();
}

json cmd_bench(const json& cfg, bool timing) {
  const auto landmarks = read_scene(need_string(cfg, "scene"));
  const BenchConfig c = bench_from(cfg, {"quad:0.5", "gp:30", "gp:70"});
  Report r = timing ? bench_timing(landmarks, c) : bench_accuracy(landmarks, c);
  finish(r, cfg);
  return r.to_json();
}

json cmd_optimal_views(const json& cfg) {
  const auto landmarks = read_scene(need_string(cfg, "scene"));
  const BenchConfig c = bench_from(cfg, {"quad:0.5", "gp:70"});
  ViewSweepConfig s;
  s.metric = metric_from_string(cfg.value("metric", "det"));
  s.n_positions = cfg.value("n_positions", 200);
  s.view_samples = cfg.value("view_samples", 72);
  s.full_sphere = cfg.value("full_sphere", false);
  Report r = optimal_views(landmarks, c, s);
  finish(r, cfg);
  return r.to_json();
}

json cmd_smoothness(const json& cfg) {
  const auto landmarks = read_scene(need_string(cfg, "scene"));
  const PinholeCamera camera = camera_from(cfg);
  SmoothnessConfig s;
  const std::string sweep = cfg.value("sweep", "yaw");
  if (sweep == "yaw") {
    s.sweep = SweepKind::Yaw;
  } else if (sweep == "translation") {
    s.sweep = SweepKind::Translation;
  } else {
    throw Error(ErrorCode::InvalidArgument, "sweep must be yaw or translation");
  }
  s.metric = metric_from_string(cfg.value("metric", "trace"));
  s.steps = cfg.value("steps", 360);
  s.position = vec3_or(cfg, "position", Vec3::Zero());
  s.end = vec3_or(cfg, "end", Vec3(2, 0, 0));
  s.yaw = cfg.value("yaw", 0.0);
  const FactorKind kind = s.metric == MetricKind::Trace
                              ? factor_from_string(cfg.value("factor", "info"))
                              : FactorKind::Info;
  const Field field = field_from(cfg, landmarks, kind, camera);
  Report r = smoothness(landmarks, field, camera, s);
  finish(r, cfg);
  return r.to_json();
}

PlanningProblem problem_from(const json& cfg) {
  PlanningProblem p = need(cfg, "problem").is_string()
                          ? read_problem(cfg["problem"].get<std::string>())
                          : PlanningProblem::from_json(cfg["problem"]);
  if (cfg.contains("time_budget")) p.rrt.time_budget = cfg["time_budget"].get<double>();
  if (cfg.contains("seed")) p.rrt.seed = cfg["seed"].get<std::uint64_t>();
  if (cfg.contains("metric")) p.metric = metric_from_string(cfg["metric"].get<std::string>());
  if (cfg.contains("mu_v")) p.trajectory.mu_v = cfg["mu_v"].get<double>();
  if (cfg.contains("max_iters")) p.trajectory.optimizer.max_iters = cfg["max_iters"].get<int>();
  return p;
}

json states_json(std::span<const PlanState> states, double dt) {
  json a = json::array();
  for (std::size_t i = 0; i < states.size(); ++i) {
    a.push_back({{"t", dt * i}, {"p", vec3_json(states[i].position)}, {"yaw", states[i].yaw}});
  }
  return a;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  out << text;
}

json cmd_plan(const json& cfg, bool rrt) {
  const PlanningProblem problem = problem_from(cfg);
  const auto landmarks = read_scene(need_string(cfg, "scene"));
  const std::string rep = cfg.value("representation", "field");
  PlanningInfo info;
  std::optional<Field> field;
  if (rep == "field") {
    field.emplace(field_from(cfg, landmarks, FactorKind::Info, problem.threshold.camera));
    info = {PlanningInfo::Kind::Field, &*field};
  } else if (rep == "pc") {
    info.kind = PlanningInfo::Kind::PointCloud;
  } else if (rep != "none") {
    throw Error(ErrorCode::InvalidArgument, "representation must be field, pc or none");
  }

  Report r;
  r.experiment = rrt ? "plan-rrt" : "plan-traj";
  r.config = problem.to_json();
  r.config["representation"] = rep;
  r.config["landmarks"] = landmarks.size();
  if (field) r.config["field_model_size"] = field->model().size();
  const std::string out = cfg.value("out", "");

  const PathEvaluation* eval = nullptr;
  RrtExperiment re;
  TrajectoryExperiment te;
  if (rrt) {
    re = run_rrt(problem, landmarks, info);
    eval = &re.evaluation;
    const RrtResult& res = re.result;
    r.add("found", res.found ? 1.0 : 0.0, "bool");
    r.add("cost", res.found ? res.cost : 0.0, "cost");
    r.add("tree_cost", res.found ? res.tree_cost : 0.0, "cost");
    r.add("vertices", static_cast<double>(res.vertices), "count");
    r.add("edges", static_cast<double>(res.edges), "count");
    r.add("iterations", static_cast<double>(res.iterations), "count");
    r.add("validity_checks", static_cast<double>(res.validity_checks), "count");
    r.add("elapsed", res.elapsed, "s");
    r.add("vertices_per_second", res.vertices_per_second(), "1/s");
    r.add("gate_threshold", re.gate_threshold, problem.metric == MetricKind::Trace ? "trace" : "metric");
    json path = json::array();
    for (const PlanState& s : res.path) path.push_back({{"p", vec3_json(s.position)}, {"yaw", s.yaw}});
    r.summary["path"] = path;
    r.summary["samples"] = states_json(re.samples, 0.1);
    if (!out.empty()) {
      std::string csv = "time,vertices,edges,validity_checks,best_cost\n";
      for (const GrowthSample& g : res.growth) {
        csv += std::to_string(g.time) + ',' + std::to_string(g.vertices) + ',' +
               std::to_string(g.edges) + ',' + std::to_string(g.validity_checks) + ',' +
               std::to_string(g.best_cost) + '\n';
      }
      write_text(out + ".growth.csv", csv);
    }
  } else {
    te = run_trajectory(problem, landmarks, info);
    eval = &te.evaluation;
    const OptimizeResult& res = te.result;
    r.add("iterations", res.iterations, "count");
    r.add("cost_evaluations", res.cost_evaluations, "count");
    r.add("elapsed", res.elapsed, "s");
    r.add("initial/total", res.initial.total, "cost");
    r.add("final/total", res.final_cost.total, "cost");
    r.add("final/dynamic", res.final_cost.dynamic, "cost");
    r.add("final/collision", res.final_cost.collision, "cost");
    r.add("final/information", res.final_cost.information, "cost");
    r.add("final/out_of_field_samples", res.final_cost.out_of_field_samples, "count");
    r.add("potential_epsilon", te.potential_epsilon, "metric");
    r.summary["samples"] = states_json(te.samples, 0.1);
    if (!out.empty()) {
      std::string csv = "iteration,cost,time\n";
      for (const IterationLog& l : res.log) {
        csv += std::to_string(l.iteration) + ',' + std::to_string(l.cost) + ',' +
               std::to_string(l.time) + '\n';
      }
      write_text(out + ".iterations.csv", csv);
    }
  }
  r.add("eval/threshold", eval->threshold, "metric");
  r.add("eval/samples", eval->samples, "count");
  r.add("eval/below", eval->below, "count");
  r.add("eval/fraction_below", eval->fraction_below(), "ratio");
  r.summary["metrics"] = eval->metrics;
  if (!out.empty()) {
    r.write(out);
    write_text(out + (rrt ? ".path.json" : ".trajectory.json"),
               r.summary["samples"].dump(2) + "\n");
  }
  if (rrt && !re.result.found) {
    throw Error(ErrorCode::NoPath, "no valid path within " +
                                       std::to_string(problem.rrt.time_budget) + " s (" +
                                       std::to_string(re.result.vertices) + " vertices)");
  }
  return r.to_json();
}

json cmd_inspect(const json& cfg) {
  Report r;
  r.experiment = "inspect";
  if (cfg.contains("field")) {
    const std::string path = cfg["field"].get<std::string>();
    const Field f = Field::load(path);
    const MemoryStats m = f.memory_stats();
    r.config = {{"field", path}};
    r.summary = {{"factor", to_string(f.factor_kind())},
                 {"model", f.model().kind() == VisibilityKind::Quadratic ? "quadratic" : "gp"},
                 {"model_size", f.model().size()},
                 {"half_fov", f.model().half_fov()},
                 {"sigma", f.sigma()},
                 {"grid", format_grid(f.config())}};
    r.add("voxels", static_cast<double>(m.voxel_count), "count");
    r.add("scalars_per_voxel", static_cast<double>(m.scalars_per_voxel), "count");
    r.add("bytes_factors", static_cast<double>(m.bytes_factors), "bytes");
    r.add("bytes_factors_f32", static_cast<double>(m.bytes_factors_f32), "bytes");
    r.add("bytes_total", static_cast<double>(m.bytes_total), "bytes");
    r.add("header_bytes", static_cast<double>(f.header_bytes()), "bytes");
    r.add("file_bytes", static_cast<double>(std::filesystem::file_size(path)), "bytes");
    return r.to_json();
  }
  const std::string path = need_string(cfg, "scene");
  const auto landmarks = read_scene(path);
  r.config = {{"scene", path}};
  r.add("landmarks", static_cast<double>(landmarks.size()), "count");
  if (!landmarks.empty()) {
    Vec3 lo = landmarks[0].position;
    Vec3 hi = lo;
    int with_dir = 0;
    for (const Landmark& l : landmarks) {
      lo = lo.cwiseMin(l.position);
      hi = hi.cwiseMax(l.position);
      with_dir += l.view_direction ? 1 : 0;
    }
    r.summary = {{"min", vec3_json(lo)}, {"max", vec3_json(hi)}};
    r.add("with_view_dir", with_dir, "count");
  }
  return r.to_json();
}

}  // namespace

json run_command(const std::string& name, const json& config) {
  const json cfg = config.is_null() ? json::object() : config;
  if (!cfg.is_object()) throw Error(ErrorCode::InvalidArgument, "config must be a JSON object");
  try {
    if (name == "gen-scene") return cmd_gen_scene(cfg);
    if (name == "build") return cmd_build(cfg);
    if (name == "bench-timing") return cmd_bench(cfg, true);
    if (name == "bench-accuracy") return cmd_bench(cfg, false);
    if (name == "optimal-views") return cmd_optimal_views(cfg);
    if (name == "smoothness") return cmd_smoothness(cfg);
    if (name == "plan-rrt") return cmd_plan(cfg, true);
    if (name == "plan-traj") return cmd_plan(cfg, false);
    if (name == "inspect") return cmd_inspect(cfg);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("config: ") + e.what());
  }
  throw Error(ErrorCode::InvalidArgument, "unknown command '" + name + "'");
}

}  // namespace fif
