#include <cmath>
#include <fstream>
#include <numbers>

#include "fif/error.hpp"
#include "fif/experiments.hpp"
#include "fif/scene.hpp"

namespace fif {

using nlohmann::json;

namespace {

Vec3 vec3(const json& j) {
  if (!j.is_array() || j.size() != 3) {
    throw Error(ErrorCode::InvalidArgument, "expected a 3-vector, got " + j.dump());
  }
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

json vec3_json(const Vec3& v) { return {v.x(), v.y(), v.z()}; }

PlanState state_from(const json& j) {
  return {vec3(j.at("p")), wrap_angle(j.value("yaw", 0.0))};
}

json state_json(const PlanState& s) { return {{"p", vec3_json(s.position)}, {"yaw", s.yaw}}; }

template <typename T>
void read_opt(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

PlanningProblem PlanningProblem::from_json(const json& j) {
  PlanningProblem p;
  try {
    p.bounds.min = vec3(j.at("bounds").at("min"));
    p.bounds.max = vec3(j.at("bounds").at("max"));
    p.start = state_from(j.at("start"));
    p.goal = state_from(j.at("goal"));
    if (j.contains("obstacles")) {
      const json& o = j["obstacles"];
      for (const json& s : o.value("spheres", json::array())) {
        p.world.spheres.push_back({vec3(s.at("center")), s.at("radius").get<double>()});
      }
      for (const json& b : o.value("boxes", json::array())) {
        p.world.boxes.push_back({vec3(b.at("min")), vec3(b.at("max"))});
      }
    }
    read_opt(j, "min_clearance", p.min_clearance);
    if (j.contains("metric")) p.metric = metric_from_string(j["metric"].get<std::string>());
    if (j.contains("weights")) {
      read_opt(j["weights"], "w_pos", p.rrt.w_pos);
      read_opt(j["weights"], "w_yaw", p.rrt.w_yaw);
    }
    p.threshold.camera = default_camera();
    if (j.contains("camera")) {
      const json& c = j["camera"];
      p.threshold.camera = PinholeCamera::from_horizontal_fov(
          c.value("width", 640), c.value("height", 480),
          c.value("hfov_deg", 90.0) * std::numbers::pi / 180.0);
    }
    if (j.contains("threshold")) {
      const json& t = j["threshold"];
      read_opt(t, "M", p.threshold.M);
      read_opt(t, "d_min", p.threshold.d_min);
      read_opt(t, "d_max", p.threshold.d_max);
      read_opt(t, "n_trials", p.threshold.n_trials);
      read_opt(t, "seed", p.threshold.seed);
      if (t.contains("metric")) p.metric = metric_from_string(t["metric"].get<std::string>());
    }
    read_opt(j, "time_budget", p.rrt.time_budget);
    read_opt(j, "seed", p.rrt.seed);
    if (j.contains("rrt")) {
      const json& r = j["rrt"];
      read_opt(r, "max_step", p.rrt.max_step);
      read_opt(r, "max_yaw_step", p.rrt.max_yaw_step);
      read_opt(r, "edge_resolution", p.rrt.edge_resolution);
      read_opt(r, "edge_yaw_resolution", p.rrt.edge_yaw_resolution);
      read_opt(r, "rewire_radius", p.rrt.rewire_radius);
      read_opt(r, "rewire_gamma", p.rrt.rewire_gamma);
      read_opt(r, "goal_bias", p.rrt.goal_bias);
      read_opt(r, "max_iterations", p.rrt.max_iterations);
      read_opt(r, "shortcut", p.rrt.shortcut);
    }
    if (j.contains("trajectory")) {
      const json& t = j["trajectory"];
      TrajectorySettings& s = p.trajectory;
      read_opt(t, "duration", s.duration);
      read_opt(t, "segments", s.segments);
      read_opt(t, "mu_d", s.mu_d);
      read_opt(t, "mu_c", s.mu_c);
      read_opt(t, "mu_v", s.mu_v);
      read_opt(t, "collision_epsilon", s.collision_epsilon);
      read_opt(t, "k_q", s.k_q);
      read_opt(t, "sample_dt", s.sample_dt);
      read_opt(t, "max_iters", s.optimizer.max_iters);
      read_opt(t, "fd_step", s.optimizer.fd_step);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("planning problem: ") + e.what());
  }
  p.world.validate();
  p.threshold.validate();
  if (!(p.min_clearance >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "min_clearance must be >= 0");
  }
  return p;
}

json PlanningProblem::to_json() const {
  json obstacles = {{"spheres", json::array()}, {"boxes", json::array()}};
  for (const Sphere& s : world.spheres) {
    obstacles["spheres"].push_back({{"center", vec3_json(s.center)}, {"radius", s.radius}});
  }
  for (const Box& b : world.boxes) {
    obstacles["boxes"].push_back({{"min", vec3_json(b.min)}, {"max", vec3_json(b.max)}});
  }
  const TrajectorySettings& t = trajectory;
  return {
      {"bounds", {{"min", vec3_json(bounds.min)}, {"max", vec3_json(bounds.max)}}},
      {"start", state_json(start)},
      {"goal", state_json(goal)},
      {"obstacles", obstacles},
      {"min_clearance", min_clearance},
      {"metric", to_string(metric)},
      {"weights", {{"w_pos", rrt.w_pos}, {"w_yaw", rrt.w_yaw}}},
      {"camera",
       {{"width", threshold.camera.width},
        {"height", threshold.camera.height},
        {"hfov_deg", 2.0 * threshold.camera.half_fov * 180.0 / std::numbers::pi}}},
      {"threshold",
       {{"M", threshold.M},
        {"d_min", threshold.d_min},
        {"d_max", threshold.d_max},
        {"n_trials", threshold.n_trials},
        {"seed", threshold.seed}}},
      {"time_budget", rrt.time_budget},
      {"seed", rrt.seed},
      {"rrt",
       {{"max_step", rrt.max_step},
        {"max_yaw_step", rrt.max_yaw_step},
        {"edge_resolution", rrt.edge_resolution},
        {"edge_yaw_resolution", rrt.edge_yaw_resolution},
        {"rewire_radius", rrt.rewire_radius},
        {"rewire_gamma", rrt.rewire_gamma},
        {"goal_bias", rrt.goal_bias},
        {"max_iterations", rrt.max_iterations},
        {"shortcut", rrt.shortcut}}},
      {"trajectory",
       {{"duration", t.duration},
        {"segments", t.segments},
        {"mu_d", t.mu_d},
        {"mu_c", t.mu_c},
        {"mu_v", t.mu_v},
        {"collision_epsilon", t.collision_epsilon},
        {"k_q", t.k_q},
        {"sample_dt", t.sample_dt},
        {"max_iters", t.optimizer.max_iters},
        {"fd_step", t.optimizer.fd_step}}},
  };
}

PlanningProblem read_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open problem " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::IoError, path + ": " + e.what());
  }
  return PlanningProblem::from_json(j);
}

PathEvaluation evaluate_states(std::span<const PlanState> states,
                               std::span<const Landmark> landmarks,
                               const PinholeCamera& camera, MetricKind metric,
                               double threshold) {
  PathEvaluation e;
  e.threshold = threshold;
  for (const PlanState& s : states) {
    const double v = fim_metric(exact_pose_fim(state_pose(s), landmarks, camera), metric);
    e.metrics.push_back(v);
    ++e.samples;
    if (v < threshold) ++e.below;
  }
  return e;
}

namespace {

double source_threshold(const PlanningProblem& p, const PlanningInfo& info) {
  if (info.kind == PlanningInfo::Kind::Field) {
    if (!info.field) throw Error(ErrorCode::InvalidArgument, "field representation without a field");
    return metric_threshold(p.threshold, p.metric,
                            {info.field->model_ptr(), info.field->factor_kind()})
        .epsilon;
  }
  return metric_threshold(p.threshold, p.metric).epsilon;
}

}  // namespace

RrtExperiment run_rrt(const PlanningProblem& problem, std::span<const Landmark> landmarks,
                      const PlanningInfo& info) {
  RrtExperiment out;
  const PinholeCamera& camera = problem.threshold.camera;
  const double oracle_threshold = metric_threshold(problem.threshold, problem.metric).epsilon;

  ValidityConfig cfg;
  cfg.min_clearance = problem.min_clearance;
  cfg.info_metric = problem.metric;
  std::unique_ptr<InformationSource> source;
  if (info.kind == PlanningInfo::Kind::PointCloud) {
    source = std::make_unique<PointCloudInformation>(landmarks, camera);
    out.gate_threshold = oracle_threshold;
  } else if (info.kind == PlanningInfo::Kind::Field) {
    out.gate_threshold = source_threshold(problem, info);
    source = std::make_unique<FieldInformation>(*info.field, QueryMode::Nearest);
  }
  cfg.info = source.get();
  cfg.info_threshold = out.gate_threshold;

  out.result = rrt_plan(problem.start, problem.goal, problem.bounds, problem.world, cfg,
                        problem.rrt);
  if (out.result.found) {
    out.samples = densify_path(out.result.path, 0.1);
    out.evaluation =
        evaluate_states(out.samples, landmarks, camera, problem.metric, oracle_threshold);
  } else {
    out.evaluation.threshold = oracle_threshold;
  }
  return out;
}

TrajectoryExperiment run_trajectory(const PlanningProblem& problem,
                                    std::span<const Landmark> landmarks,
                                    const PlanningInfo& info) {
  TrajectoryExperiment out;
  const PinholeCamera& camera = problem.threshold.camera;
  const TrajectorySettings& s = problem.trajectory;
  const double oracle_threshold = metric_threshold(problem.threshold, problem.metric).epsilon;

  BoundaryState a;
  BoundaryState b;
  a.state = problem.start;
  b.state = problem.goal;
  const PolyTrajectory init = fit_initial_trajectory(a, b, s.duration, s.segments);

  TrajectoryCostParams params;
  params.mu_d = s.mu_d;
  params.mu_c = s.mu_c;
  params.mu_v = s.mu_v;
  params.collision_epsilon = s.collision_epsilon;
  params.sample_dt = s.sample_dt;
  params.metric = problem.metric;
  params.potential.k_q = s.k_q;
  std::unique_ptr<InformationSource> source;
  if (info.kind == PlanningInfo::Kind::PointCloud) {
    source = std::make_unique<PointCloudInformation>(landmarks, camera);
    out.potential_epsilon = oracle_threshold;
  } else if (info.kind == PlanningInfo::Kind::Field) {
    out.potential_epsilon = source_threshold(problem, info);
    source = std::make_unique<FieldInformation>(*info.field, QueryMode::Trilinear, true);
  } else {
    params.mu_v = 0.0;
  }
  params.info = source.get();
  params.potential.epsilon = out.potential_epsilon > 0.0 ? out.potential_epsilon : 1.0;
  params.potential.validate();

  out.result = optimize_trajectory(init, problem.world, params, s.optimizer);
  const double total = out.result.trajectory.duration();
  const int n = static_cast<int>(std::floor(total / 0.1 + 1e-9));
  for (int k = 0; k <= n; ++k) out.samples.push_back(out.result.trajectory.state(k * 0.1));
  out.evaluation =
      evaluate_states(out.samples, landmarks, camera, problem.metric, oracle_threshold);
  return out;
}

}  // namespace fif
