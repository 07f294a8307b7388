#include "fif/planning_costs.hpp"

#include <cmath>
#include <numbers>

#include "fif/error.hpp"

namespace fif {

namespace {
constexpr double kMaxCondition = 1e12;
constexpr int kMaxRejections = 100000;
}  // namespace

void LandmarkSpec::validate() const {
  if (M < 1 || n_trials < 1) {
    throw Error(ErrorCode::InvalidArgument, "M and n_trials must be >= 1");
  }
  if (!(d_min > 0.0 && d_min < d_max)) {
    throw Error(ErrorCode::InvalidArgument, "need 0 < d_min < d_max");
  }
  camera.validate();
}

std::vector<Landmark> sample_fov_landmarks(const LandmarkSpec& spec,
                                           std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double cos_alpha = std::cos(spec.camera.half_fov);
  const double r0 = std::pow(spec.d_min, 3);
  const double r1 = std::pow(spec.d_max, 3);
  const Pose identity;
  std::vector<Landmark> out;
  out.reserve(spec.M);
  int rejected = 0;
  while (static_cast<int>(out.size()) < spec.M) {
    const double c = cos_alpha + (1.0 - cos_alpha) * u(rng);
    const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
    const double phi = 2.0 * std::numbers::pi * u(rng);
    const double r = std::cbrt(r0 + (r1 - r0) * u(rng));
    Landmark l;
    l.position = r * Vec3(s * std::cos(phi), s * std::sin(phi), c);
    l.id = static_cast<std::int64_t>(out.size());
    if (!exact_visible(identity, l, spec.camera)) {
      if (++rejected > kMaxRejections) {
        throw Error(ErrorCode::InvalidArgument,
                    "camera cone and image do not overlap");
      }
      continue;
    }
    out.push_back(l);
  }
  return out;
}

double identity_pose_metric(std::span<const Landmark> landmarks,
                            const LandmarkSpec& spec, MetricKind metric,
                            const ThresholdSource& source) {
  const Pose identity;
  if (!source.model) {
    return fim_metric(exact_pose_fim(identity, landmarks, spec.camera), metric);
  }
  GridConfig config;
  config.voxel_size = 0.1;
  config.origin = Vec3::Constant(-0.05);
  config.dims = {1, 1, 1};
  const Field field = Field::build(landmarks, config, source.model, source.kind);
  return field.query_metric(identity, metric, QueryMode::Nearest);
}

ThresholdResult metric_threshold(const LandmarkSpec& spec, MetricKind metric,
                                 const ThresholdSource& source) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  ThresholdResult result;
  double sum = 0.0;
  const Pose identity;
  for (int trial = 0; trial < spec.n_trials; ++trial) {
    const std::vector<Landmark> landmarks = sample_fov_landmarks(spec, rng);
    const Fim exact = exact_pose_fim(identity, landmarks, spec.camera);
    if (condition_number(exact) > kMaxCondition) {
      ++result.degenerate_trials;
      continue;
    }
    const double v = identity_pose_metric(landmarks, spec, metric, source);
    result.values.push_back(v);
    sum += v;
  }
  result.used_trials = static_cast<int>(result.values.size());
  if (result.used_trials == 0) {
    throw Error(ErrorCode::InvalidArgument,
                "every threshold trial was degenerate");
  }
  result.epsilon = sum / result.used_trials;
  return result;
}

void PotentialParams::validate() const {
  if (!(k_q > 0.0) || !std::isfinite(epsilon) || !std::isfinite(k_q)) {
    throw Error(ErrorCode::InvalidArgument, "need k_q > 0 and finite epsilon");
  }
}

double info_potential(double v, const PotentialParams& p) {
  if (v > p.epsilon) return 0.0;
  if (v >= 0.0) {
    const double d = v - p.epsilon;
    return p.k_q * d * d;
  }
  return p.k_l() * v + p.b_l();
}

double info_potential_grad(double v, const PotentialParams& p) {
  if (v > p.epsilon) return 0.0;
  if (v >= 0.0) return 2.0 * p.k_q * (v - p.epsilon);
  return p.k_l();
}

}  // namespace fif
