#pragma once

#include <Eigen/Core>
#include <span>
#include <string>

#include "fif/geometry.hpp"

namespace fif {

/// 6x6 Fisher information, state ordered [translation(3); rotation(3)] with
/// the pose perturbation applied on the world side.
using Fim = Eigen::Matrix<double, 6, 6>;
using Mat36 = Eigen::Matrix<double, 3, 6>;

inline constexpr double kDefaultSigma = 1.0;

struct PinholeCamera {
  double fx = 320.0;
  double fy = 320.0;
  double cx = 320.0;
  double cy = 240.0;
  int width = 640;
  int height = 480;
  /// Half field of view used by the angle-only visibility models.
  double half_fov = 0.7853981633974483;

  /// Square-pixel camera whose horizontal FoV is `hfov`; principal point at
  /// the image center and half_fov = hfov / 2.
  static PinholeCamera from_horizontal_fov(int width, int height, double hfov);

  /// Throws InvalidArgument unless fx, fy > 0, the image is non-empty and
  /// 0 < half_fov < pi.
  void validate() const;
};

enum class MetricKind { Determinant, SmallestEigenvalue, Trace };

/// Jacobian of the bearing measurement w.r.t. a world-side se(3)
/// perturbation of T_wc. Throws DegeneratePoint.
Mat36 bearing_jacobian(const Pose& pose, const Landmark& landmark);

/// Rotation-free per-landmark FIM:
///   (1/sigma^2) [-I, [p]x]^T (I - u u^T)/n^2 [-I, [p]x]
/// with u the unit direction from the camera to the landmark and n the range.
/// Equals (1/sigma^2) J^T J for every camera rotation.
Fim landmark_fim(const Vec3& camera_position, const Vec3& landmark_position,
                 double sigma = kDefaultSigma);

inline Fim landmark_fim(const Vec3& camera_position, const Landmark& landmark,
                        double sigma = kDefaultSigma) {
  return landmark_fim(camera_position, landmark.position, sigma);
}

/// Pinhole projection test: positive depth and pixel in [0,w) x [0,h).
bool exact_visible(const Pose& pose, const Landmark& landmark,
                   const PinholeCamera& camera);

/// Sum of per-landmark FIMs over the landmarks passing exact_visible.
/// This is the point-cloud reference that fields are measured against.
Fim exact_pose_fim(const Pose& pose, std::span<const Landmark> landmarks,
                   const PinholeCamera& camera, double sigma = kDefaultSigma);

double fim_metric(const Fim& fim, MetricKind kind);

/// |lambda_max| / |lambda_min| of the symmetric part; +inf when singular.
double condition_number(const Fim& fim);

/// ||a - b||_F / ||b||_F.
double relative_frobenius_error(const Fim& estimate, const Fim& reference);

const char* to_string(MetricKind kind);
MetricKind metric_from_string(const std::string& name);

}  // namespace fif
