#include "fif/geometry.hpp"

#include <Eigen/Geometry>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "fif/error.hpp"

namespace fif {

namespace {

constexpr double kOrthoTolerance = 1e-10;
constexpr double kDegenerateNorm = 1e-9;

double ortho_drift(const Mat3& m) {
  return (m.transpose() * m - Mat3::Identity()).cwiseAbs().maxCoeff();
}

}  // namespace

Mat3 orthonormalize(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 r = svd.matrixU() * svd.matrixV().transpose();
  if (r.determinant() <= 0.0) {
    throw Error(ErrorCode::InvalidArgument,
                "rotation matrix has non-positive determinant");
  }
  return r;
}

Pose::Pose(const Mat3& rotation, const Vec3& translation)
    : rotation_(rotation), translation_(translation) {
  if (!rotation.allFinite() || !translation.allFinite()) {
    throw Error(ErrorCode::InvalidArgument, "pose contains non-finite values");
  }
  if (ortho_drift(rotation) > kOrthoTolerance ||
      std::abs(rotation.determinant() - 1.0) > kOrthoTolerance) {
    rotation_ = orthonormalize(rotation);
  }
}

Pose Pose::from_ypr(double yaw, double pitch, double roll, const Vec3& t) {
  return Pose(rotation_from_ypr(yaw, pitch, roll), t);
}

Pose Pose::from_axis_angle(const Vec3& axis, double angle, const Vec3& t) {
  const double n = axis.norm();
  if (n < kDegenerateNorm) {
    throw Error(ErrorCode::InvalidArgument, "axis-angle with zero axis");
  }
  return Pose(Eigen::AngleAxisd(angle, axis / n).toRotationMatrix(), t);
}

Pose Pose::from_position_yaw(const Vec3& position, double yaw) {
  return Pose(camera_rotation_from_yaw(yaw), position);
}

Mat3 rotation_from_ypr(double yaw, double pitch, double roll) {
  return (Eigen::AngleAxisd(yaw, Vec3::UnitZ()) *
          Eigen::AngleAxisd(pitch, Vec3::UnitY()) *
          Eigen::AngleAxisd(roll, Vec3::UnitX()))
      .toRotationMatrix();
}

Mat3 camera_rotation_from_yaw(double yaw) {
  // Body frame x-forward/z-up to optical frame z-forward/y-down.
  Mat3 body_to_camera;
  body_to_camera << 0, 0, 1,
                   -1, 0, 0,
                    0, -1, 0;
  return Eigen::AngleAxisd(yaw, Vec3::UnitZ()).toRotationMatrix() *
         body_to_camera;
}

Vec3 world_to_camera(const Pose& pose, const Vec3& point_w) {
  return pose.rotation().transpose() * (point_w - pose.translation());
}

Vec3 camera_to_world(const Pose& pose, const Vec3& point_c) {
  return pose.rotation() * point_c + pose.translation();
}

Vec3 bearing(const Vec3& point_c) {
  const double n = point_c.norm();
  if (!(n > kDegenerateNorm)) {
    throw Error(ErrorCode::DegeneratePoint,
                "landmark coincides with the camera center");
  }
  return point_c / n;
}

Mat3 skew(const Vec3& v) {
  Mat3 s;
  // clang-format off
  s <<    0.0, -v.z(),  v.y(),
        v.z(),    0.0, -v.x(),
       -v.y(),  v.x(),    0.0;
  // clang-format on
  return s;
}

double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double w = std::fmod(a + std::numbers::pi, two_pi);
  if (w <= 0.0) w += two_pi;
  return w - std::numbers::pi;
}

std::vector<Vec3> sample_directions(int count, SamplingScheme scheme,
                                    std::uint64_t seed) {
  if (count < 4) {
    throw Error(ErrorCode::TooFewSamples,
                "direction sampling needs at least 4 samples");
  }
  std::vector<Vec3> out;
  out.reserve(static_cast<std::size_t>(count));
  if (scheme == SamplingScheme::Fibonacci) {
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < count; ++i) {
      const double z = 1.0 - (2.0 * i + 1.0) / count;
      const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      const double phi = golden * i;
      out.emplace_back(r * std::cos(phi), r * std::sin(phi), z);
    }
  } else {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    while (static_cast<int>(out.size()) < count) {
      Vec3 v(normal(rng), normal(rng), normal(rng));
      const double n = v.norm();
      if (n < 1e-12) continue;
      out.push_back(v / n);
    }
  }
  return out;
}

}  // namespace fif
