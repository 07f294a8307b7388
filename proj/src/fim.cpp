#include "fif/fim.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <cmath>
#include <limits>
#include <numbers>

#include "fif/error.hpp"

namespace fif {

PinholeCamera PinholeCamera::from_horizontal_fov(int width, int height,
                                                 double hfov) {
  PinholeCamera cam;
  cam.width = width;
  cam.height = height;
  cam.cx = 0.5 * width;
  cam.cy = 0.5 * height;
  cam.fx = cam.cx / std::tan(0.5 * hfov);
  cam.fy = cam.fx;
  cam.half_fov = 0.5 * hfov;
  cam.validate();
  return cam;
}

void PinholeCamera::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0) || width <= 0 || height <= 0 ||
      !(half_fov > 0.0) || !(half_fov < std::numbers::pi)) {
    throw Error(ErrorCode::InvalidArgument, "invalid pinhole camera");
  }
}

Mat36 bearing_jacobian(const Pose& pose, const Landmark& landmark) {
  const Vec3 pc = world_to_camera(pose, landmark.position);
  const double n = pc.norm();
  if (!(n > 1e-9)) {
    throw Error(ErrorCode::DegeneratePoint,
                "landmark coincides with the camera center");
  }
  const Mat3 dfdp = Mat3::Identity() / n - pc * pc.transpose() / (n * n * n);
  Mat36 dpdxi;
  dpdxi.leftCols<3>() = -Mat3::Identity();
  dpdxi.rightCols<3>() = skew(landmark.position);
  return dfdp * pose.rotation().transpose() * dpdxi;
}

Fim landmark_fim(const Vec3& camera_position, const Vec3& landmark_position,
                 double sigma) {
  const Vec3 d = landmark_position - camera_position;
  const double n2 = d.squaredNorm();
  if (!(n2 > 1e-18)) {
    throw Error(ErrorCode::DegeneratePoint,
                "landmark coincides with the camera center");
  }
  // P = (I - u u^T) / n^2 = (n^2 I - d d^T) / n^4
  const double inv_n4 = 1.0 / (n2 * n2);
  const Mat3 proj = (n2 * Mat3::Identity() - d * d.transpose()) * inv_n4;
  const Mat3 s = skew(landmark_position);
  const Mat3 ps = proj * s;

  const double w = 1.0 / (sigma * sigma);
  Fim fim;
  fim.topLeftCorner<3, 3>() = w * proj;
  fim.topRightCorner<3, 3>() = -w * ps;
  fim.bottomLeftCorner<3, 3>() = fim.topRightCorner<3, 3>().transpose();
  fim.bottomRightCorner<3, 3>() = -w * (s * ps);
  return fim;
}

bool exact_visible(const Pose& pose, const Landmark& landmark,
                   const PinholeCamera& camera) {
  const Vec3 pc = world_to_camera(pose, landmark.position);
  if (!(pc.z() > 1e-9)) return false;
  const double u = camera.fx * pc.x() / pc.z() + camera.cx;
  const double v = camera.fy * pc.y() / pc.z() + camera.cy;
  return u >= 0.0 && u < camera.width && v >= 0.0 && v < camera.height;
}

Fim exact_pose_fim(const Pose& pose, std::span<const Landmark> landmarks,
                   const PinholeCamera& camera, double sigma) {
  Fim sum = Fim::Zero();
  const Mat3 r_cw = pose.rotation().transpose();
  const Vec3& t = pose.translation();
  for (const Landmark& l : landmarks) {
    const Vec3 pc = r_cw * (l.position - t);
    if (!(pc.z() > 1e-9)) continue;
    const double u = camera.fx * pc.x() / pc.z() + camera.cx;
    const double v = camera.fy * pc.y() / pc.z() + camera.cy;
    if (u < 0.0 || u >= camera.width || v < 0.0 || v >= camera.height) {
      continue;
    }
    sum += landmark_fim(t, l.position, sigma);
  }
  return sum;
}

double fim_metric(const Fim& fim, MetricKind kind) {
  switch (kind) {
    case MetricKind::Determinant:
      return fim.determinant();
    case MetricKind::SmallestEigenvalue: {
      Eigen::SelfAdjointEigenSolver<Fim> es(fim, Eigen::EigenvaluesOnly);
      return es.eigenvalues()(0);
    }
    case MetricKind::Trace:
      return fim.trace();
  }
  return 0.0;
}

double condition_number(const Fim& fim) {
  const Fim sym = 0.5 * (fim + fim.transpose());
  Eigen::SelfAdjointEigenSolver<Fim> es(sym, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  const double hi = ev.cwiseAbs().maxCoeff();
  const double lo = ev.cwiseAbs().minCoeff();
  if (hi == 0.0 || lo == 0.0) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

double relative_frobenius_error(const Fim& estimate, const Fim& reference) {
  return (estimate - reference).norm() / reference.norm();
}

const char* to_string(MetricKind kind) {
  switch (kind) {
    case MetricKind::Determinant:
      return "det";
    case MetricKind::SmallestEigenvalue:
      return "lmin";
    case MetricKind::Trace:
      return "trace";
  }
  return "?";
}

MetricKind metric_from_string(const std::string& name) {
  if (name == "det") return MetricKind::Determinant;
  if (name == "lmin") return MetricKind::SmallestEigenvalue;
  if (name == "trace") return MetricKind::Trace;
  throw Error(ErrorCode::InvalidArgument, "unknown metric '" + name + "'");
}

}  // namespace fif
