#pragma once

#include <cstdint>
#include <nlohmann/json.hpp>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fif/field.hpp"
#include "fif/planners.hpp"
#include "fif/planning_costs.hpp"
#include "fif/trajectory.hpp"

namespace fif {

struct ReportRow {
  std::string name;
  double value = 0.0;
  std::string unit;
};

/// Result of one experiment: a configuration echo, flat rows and a free-form
/// summary. Every CSV row carries the configuration hash.
struct Report {
  std::string experiment;
  nlohmann::json config = nlohmann::json::object();
  std::vector<ReportRow> rows;
  nlohmann::json summary = nlohmann::json::object();

  void add(std::string name, double value, std::string unit);
  /// Row value by name; throws InvalidArgument when missing.
  double value(const std::string& name) const;
  std::string config_hash() const;
  nlohmann::json to_json() const;
  std::string to_csv() const;
  /// Writes <prefix>.csv and <prefix>.json.
  void write(const std::string& prefix) const;
};

struct TimingStats {
  double median_ns = 0.0;
  double p10_ns = 0.0;
  double p90_ns = 0.0;
  std::size_t samples = 0;
};

TimingStats timing_stats(std::vector<double> samples_ns);

// --- field benchmarks ------------------------------------------------------

struct BenchConfig {
  GridConfig grid;
  std::vector<std::string> models{"quad:0.5", "gp:30", "gp:70"};
  PinholeCamera camera;
  double sigma = kDefaultSigma;
  int n_poses = 200;
  /// Timing passes over the pose set after one warm-up pass.
  int repeats = 5;
  std::uint64_t seed = 1;
  int threads = 1;
  /// Landmarks closer than this to a voxel center (or to the oracle's camera)
  /// are ignored by both sides of the accuracy comparison.
  double min_range = 0.0;
  bool include_point_cloud = true;
};

/// Build time, memory and per-query times (FIM Nearest; det, lmin, trace
/// Trilinear; trace from a trace field) for each model plus the point cloud.
Report bench_timing(std::span<const Landmark> landmarks, const BenchConfig& config);

/// Mean relative Frobenius error of nearest-voxel FIMs against the exact FIM,
/// at voxel centers and at random positions.
Report bench_accuracy(std::span<const Landmark> landmarks, const BenchConfig& config);

struct ViewSweepConfig {
  MetricKind metric = MetricKind::Determinant;
  int n_positions = 200;
  /// Horizontal optical axes when `full_sphere` is false, Fibonacci
  /// directions otherwise.
  int view_samples = 72;
  bool full_sphere = false;
};

/// Angle between the field's and the oracle's best view at random voxel
/// centers. "oracle" is included as a model of its own.
Report optimal_views(std::span<const Landmark> landmarks, const BenchConfig& config,
                     const ViewSweepConfig& sweep);

enum class SweepKind { Yaw, Translation };

struct SmoothnessConfig {
  SweepKind sweep = SweepKind::Yaw;
  MetricKind metric = MetricKind::Trace;
  int steps = 360;
  Vec3 position = Vec3::Zero();  ///< yaw sweep position, translation start
  Vec3 end = Vec3(2, 0, 0);       ///< translation end
  double yaw = 0.0;               ///< translation heading
};

/// Metric traces along a sweep, normalized to [0, 1].
std::vector<double> normalize_trace(std::span<const double> values);
double max_adjacent_jump(std::span<const double> values);

Report smoothness(std::span<const Landmark> landmarks, const Field& field,
                  const PinholeCamera& camera, const SmoothnessConfig& config);

// --- planning --------------------------------------------------------------

struct TrajectorySettings {
  double duration = 10.0;
  int segments = 5;
  double mu_d = 1.0;
  double mu_c = 1.0;
  double mu_v = 1.0;
  double collision_epsilon = 0.5;
  double k_q = 1.0;
  double sample_dt = 0.1;
  OptimizeParams optimizer;
};

struct PlanningProblem {
  PlanBounds bounds;
  PlanState start;
  PlanState goal;
  ObstacleWorld world;
  double min_clearance = 0.0;
  MetricKind metric = MetricKind::Determinant;
  LandmarkSpec threshold;
  RrtParams rrt;
  TrajectorySettings trajectory;

  static PlanningProblem from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

PlanningProblem read_problem(const std::string& path);

/// Exact metric at each state against the point-cloud threshold.
struct PathEvaluation {
  double threshold = 0.0;
  int samples = 0;
  int below = 0;
  std::vector<double> metrics;
  double fraction_below() const {
    return samples > 0 ? static_cast<double>(below) / samples : 0.0;
  }
};

PathEvaluation evaluate_states(std::span<const PlanState> states,
                               std::span<const Landmark> landmarks,
                               const PinholeCamera& camera, MetricKind metric,
                               double threshold);

/// Information source used by a planner run.
struct PlanningInfo {
  enum class Kind { None, PointCloud, Field } kind = Kind::None;
  const Field* field = nullptr;
};

struct RrtExperiment {
  RrtResult result;
  double gate_threshold = 0.0;
  PathEvaluation evaluation;
  std::vector<PlanState> samples;  ///< path states every 0.1 m
};

/// Gated RRT*; an information-blind run when info.kind is None. The path is
/// sampled at 1 m/s (0.1 m per 0.1 s) for the exact evaluation.
RrtExperiment run_rrt(const PlanningProblem& problem,
                      std::span<const Landmark> landmarks, const PlanningInfo& info);

struct TrajectoryExperiment {
  OptimizeResult result;
  double potential_epsilon = 0.0;
  PathEvaluation evaluation;
  std::vector<PlanState> samples;  ///< states every 0.1 s
};

/// Min-snap initialization then optimization; mu_v is forced to 0 when
/// info.kind is None.
TrajectoryExperiment run_trajectory(const PlanningProblem& problem,
                                    std::span<const Landmark> landmarks,
                                    const PlanningInfo& info);

// --- command layer ---------------------------------------------------------

/// Runs a named experiment from a JSON configuration and returns the report
/// as JSON. Names: gen-scene, build, bench-timing, bench-accuracy,
/// optimal-views, smoothness, plan-rrt, plan-traj, inspect.
nlohmann::json run_command(const std::string& name, const nlohmann::json& config);

}  // namespace fif
