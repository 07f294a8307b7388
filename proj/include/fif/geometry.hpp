#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <vector>

namespace fif {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Camera-in-world rigid transform T_wc. The camera looks along its local +z
/// axis (x right, y down).
class Pose {
 public:
  Pose() : rotation_(Mat3::Identity()), translation_(Vec3::Zero()) {}

  /// Rotations drifting more than 1e-10 from orthonormal are projected back
  /// onto SO(3) with an SVD; anything that cannot be projected (det <= 0)
  /// throws InvalidArgument.
  Pose(const Mat3& rotation, const Vec3& translation);

  static Pose from_ypr(double yaw, double pitch, double roll, const Vec3& t);
  static Pose from_axis_angle(const Vec3& axis, double angle, const Vec3& t);

  /// Camera with a horizontal optical axis pointing at `yaw` (radians,
  /// measured from world +x about world +z). Used by the 4-DoF planners.
  static Pose from_position_yaw(const Vec3& position, double yaw);

  const Mat3& rotation() const { return rotation_; }
  const Vec3& translation() const { return translation_; }

 private:
  Mat3 rotation_;
  Vec3 translation_;
};

struct Landmark {
  Vec3 position = Vec3::Zero();
  /// Mean direction (unit) from which the landmark was observed, if known.
  std::optional<Vec3> view_direction;
  std::int64_t id = 0;
};

Mat3 orthonormalize(const Mat3& m);
Mat3 rotation_from_ypr(double yaw, double pitch, double roll);
Mat3 camera_rotation_from_yaw(double yaw);

Vec3 world_to_camera(const Pose& pose, const Vec3& point_w);
Vec3 camera_to_world(const Pose& pose, const Vec3& point_c);

/// Unit bearing of a camera-frame point. Throws DegeneratePoint below 1e-9 m.
Vec3 bearing(const Vec3& point_c);

Mat3 skew(const Vec3& v);

inline Vec3 optical_axis(const Mat3& rotation) { return rotation.col(2); }

/// Wraps an angle into (-pi, pi].
double wrap_angle(double a);

enum class SamplingScheme { Fibonacci, UniformRandom };

/// `count` unit directions covering the sphere. Throws TooFewSamples when
/// count < 4. UniformRandom is deterministic given `seed`.
std::vector<Vec3> sample_directions(int count, SamplingScheme scheme,
                                    std::uint64_t seed = 0);

}  // namespace fif
