#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "fif/field.hpp"
#include "fif/fim.hpp"
#include "fif/world.hpp"

namespace fif {

/// 4-DoF planning state: position and yaw of a camera with a horizontal
/// optical axis.
struct PlanState {
  Vec3 position = Vec3::Zero();
  double yaw = 0.0;
};

Pose state_pose(const PlanState& state);

/// Something that can report an information metric for a pose.
class InformationSource {
 public:
  virtual ~InformationSource() = default;
  /// Throws OutOfField where the source has no coverage.
  virtual double metric(const Pose& pose, MetricKind kind) const = 0;
};

/// Field queries. With `memoize`, per-voxel metrics are cached by optical
/// axis, which pays off when many queries share a rotation (finite
/// differences over positions); results are identical to uncached queries.
/// A memoizing instance must not be shared between threads.
class FieldInformation final : public InformationSource {
 public:
  explicit FieldInformation(const Field& field,
                            QueryMode mode = QueryMode::Trilinear,
                            bool memoize = false);
  ~FieldInformation() override;
  double metric(const Pose& pose, MetricKind kind) const override;
  const Field& field() const { return field_; }

 private:
  struct Cache;
  const Field& field_;
  QueryMode mode_;
  std::unique_ptr<Cache> cache_;
};

/// Exact pinhole visibility over a landmark list; the reference oracle.
class PointCloudInformation final : public InformationSource {
 public:
  PointCloudInformation(std::span<const Landmark> landmarks,
                        const PinholeCamera& camera,
                        double sigma = kDefaultSigma)
      : landmarks_(landmarks), camera_(camera), sigma_(sigma) {}
  double metric(const Pose& pose, MetricKind kind) const override {
    return fim_metric(exact_pose_fim(pose, landmarks_, camera_, sigma_), kind);
  }

 private:
  std::span<const Landmark> landmarks_;
  PinholeCamera camera_;
  double sigma_;
};

struct ValidityConfig {
  double min_clearance = 0.0;
  MetricKind info_metric = MetricKind::Determinant;
  double info_threshold = 0.0;
  /// Information gating is off when null or when the threshold is <= 0.
  const InformationSource* info = nullptr;

  bool gated() const { return info != nullptr && info_threshold > 0.0; }
};

/// Clearance and information checks with a yaw-only camera rotation.
/// OutOfField counts as invalid.
bool state_valid(const PlanState& state, const ObstacleWorld& world,
                 const ValidityConfig& cfg);

struct PlanBounds {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Ones();
};

struct RrtParams {
  double w_pos = 1.0;
  double w_yaw = 0.5;
  /// Largest position / yaw change of one steered edge.
  double max_step = 0.5;
  double max_yaw_step = 0.8;
  /// Edge checks every `edge_resolution` meters / `edge_yaw_resolution` rad.
  double edge_resolution = 0.1;
  double edge_yaw_resolution = 0.2;
  /// Rewiring radius in cost units is min(rewire_radius,
  /// rewire_gamma * (log n / n)^(1/4)).
  double rewire_radius = 1.5;
  double rewire_gamma = 4.0;
  double goal_bias = 0.05;
  double time_budget = 1.0;  ///< seconds
  std::int64_t max_iterations = -1;  ///< unlimited when negative
  bool stop_at_first_solution = false;
  /// Shortcut the final path with straight valid edges.
  bool shortcut = true;
  double log_interval = 0.1;  ///< seconds between growth samples
  std::uint64_t seed = 1;
};

struct GrowthSample {
  double time = 0.0;
  std::int64_t vertices = 0;
  std::int64_t edges = 0;
  std::int64_t validity_checks = 0;
  double best_cost = 0.0;  ///< +inf before the first solution
};

struct RrtResult {
  bool found = false;
  std::vector<PlanState> path;
  double cost = 0.0;
  double tree_cost = 0.0;  ///< cost before shortcutting
  std::int64_t vertices = 0;
  std::int64_t edges = 0;
  std::int64_t iterations = 0;
  std::int64_t validity_checks = 0;
  double elapsed = 0.0;
  std::vector<GrowthSample> growth;

  double vertices_per_second() const {
    return elapsed > 0.0 ? static_cast<double>(vertices) / elapsed : 0.0;
  }
  /// Throws NoPath when nothing was found.
  const std::vector<PlanState>& path_or_throw() const;
};

/// w_pos |dp| + w_yaw |dyaw| with yaw wrapped.
double state_distance(const PlanState& a, const PlanState& b,
                      const RrtParams& params);

/// RRT* over (position, yaw). Runs until the time budget (or iteration cap)
/// is used and returns the best path found; `found` is false when the goal
/// was never connected.
RrtResult rrt_plan(const PlanState& start, const PlanState& goal,
                   const PlanBounds& bounds, const ObstacleWorld& world,
                   const ValidityConfig& cfg, const RrtParams& params);

/// States along a path at `spacing` meters of travel (yaw interpolated along
/// each edge; pure rotations get samples every 0.1 rad).
std::vector<PlanState> densify_path(std::span<const PlanState> path,
                                    double spacing);

}  // namespace fif
