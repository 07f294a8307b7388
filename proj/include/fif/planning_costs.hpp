#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "fif/field.hpp"
#include "fif/fim.hpp"
#include "fif/visibility.hpp"

namespace fif {

/// "M landmarks in the field of view between d_min and d_max".
struct LandmarkSpec {
  int M = 10;
  double d_min = 1.0;
  double d_max = 3.0;
  PinholeCamera camera;
  int n_trials = 100;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Where the threshold metric comes from: the exact point cloud when `model`
/// is null, otherwise a field built with `model` and `kind`.
struct ThresholdSource {
  VisibilityModelPtr model;
  FactorKind kind = FactorKind::Info;
};

struct ThresholdResult {
  double epsilon = 0.0;
  int used_trials = 0;
  /// Trials whose FIM condition number exceeded 1e12; excluded from the mean.
  int degenerate_trials = 0;
  std::vector<double> values;
};

/// Landmarks drawn uniformly in solid angle inside the camera cone and
/// uniformly in volume between d_min and d_max, kept only when they project
/// into the image of a camera at the origin with identity rotation.
std::vector<Landmark> sample_fov_landmarks(const LandmarkSpec& spec,
                                           std::mt19937_64& rng);

/// Mean metric over spec.n_trials random landmark sets. Throws
/// InvalidArgument when every trial is degenerate.
ThresholdResult metric_threshold(const LandmarkSpec& spec, MetricKind metric,
                                 const ThresholdSource& source = {});

/// Metric of the FIM computed for `landmarks` at the identity pose, through
/// the given source. The field variant builds a single voxel centered on the
/// camera and queries the nearest voxel.
double identity_pose_metric(std::span<const Landmark> landmarks,
                            const LandmarkSpec& spec, MetricKind metric,
                            const ThresholdSource& source);

struct PotentialParams {
  double epsilon = 1.0;
  double k_q = 1.0;

  double k_l() const { return -2.0 * k_q * epsilon; }
  double b_l() const { return k_q * epsilon * epsilon; }
  /// Throws InvalidArgument unless k_q > 0 and epsilon is finite.
  void validate() const;
};

/// 0 above epsilon, k_q (v - eps)^2 on [0, eps], k_l v + b_l below 0.
double info_potential(double v, const PotentialParams& params);
double info_potential_grad(double v, const PotentialParams& params);

}  // namespace fif
