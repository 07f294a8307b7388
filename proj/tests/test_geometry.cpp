#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Geometry>
#include <cmath>
#include <numbers>

#include "fif/error.hpp"
#include "fif/geometry.hpp"
#include "fif/world.hpp"
#include "support.hpp"

using namespace fif;
using std::numbers::pi;

TEST_CASE("pose keeps an orthonormal rotation") {
  std::mt19937_64 rng(3);
  Mat3 r = test::random_rotation(rng);
  r(0, 1) += 1e-7;
  const Pose p(r, Vec3(1, 2, 3));
  CHECK((p.rotation().transpose() * p.rotation() - Mat3::Identity()).norm() < 1e-9);
  CHECK(p.rotation().determinant() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK((p.rotation() - r).norm() < 1e-6);

  Mat3 reflect = Mat3::Identity();
  reflect(2, 2) = -1;
  CHECK_THROWS_AS(Pose(reflect, Vec3::Zero()), Error);
}

TEST_CASE("camera and world transforms invert each other") {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 20; ++i) {
    const Pose pose(test::random_rotation(rng), test::random_in_box(rng, Vec3(-3, -3, -3), Vec3(3, 3, 3)));
    const Vec3 p = test::random_in_box(rng, Vec3(-5, -5, -5), Vec3(5, 5, 5));
    CHECK((camera_to_world(pose, world_to_camera(pose, p)) - p).norm() < 1e-12);
    // camera-to-world: p_w = R p_c + t
    CHECK((camera_to_world(pose, Vec3(0, 0, 1)) - pose.translation() - pose.rotation().col(2)).norm() < 1e-12);
  }
}

TEST_CASE("bearing") {
  CHECK((bearing(Vec3(0, 3, 4)) - Vec3(0, 0.6, 0.8)).norm() < 1e-15);
  try {
    bearing(Vec3(1e-10, 0, 0));
    FAIL("expected DegeneratePoint");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegeneratePoint);
  }
}

TEST_CASE("skew is the cross product") {
  const Vec3 a(1, -2, 0.5), b(0.3, 4, -1);
  CHECK((skew(a) * b - a.cross(b)).norm() < 1e-15);
  CHECK((skew(a) + skew(a).transpose()).norm() == 0.0);
}

TEST_CASE("wrap_angle maps into (-pi, pi]") {
  CHECK(wrap_angle(3 * pi) == doctest::Approx(pi));
  CHECK(wrap_angle(-pi) == doctest::Approx(pi));
  CHECK(wrap_angle(0.25) == doctest::Approx(0.25));
  CHECK(wrap_angle(2 * pi + 0.25) == doctest::Approx(0.25));
  CHECK(wrap_angle(-2 * pi - 0.25) == doctest::Approx(-0.25));
}

TEST_CASE("yaw camera looks along the horizontal heading") {
  for (double yaw : {0.0, 0.7, -2.0, pi}) {
    const Mat3 r = camera_rotation_from_yaw(yaw);
    CHECK((optical_axis(r) - Vec3(std::cos(yaw), std::sin(yaw), 0)).norm() < 1e-12);
    CHECK(r.determinant() == doctest::Approx(1.0));
    CHECK((r.transpose() * r - Mat3::Identity()).norm() < 1e-12);
    // image "down" stays in the world -z half space
    CHECK(r.col(1).z() < -0.99);
  }
}

TEST_CASE("ypr rotation matches composed axis rotations") {
  const double y = 0.3, p = -0.4, r = 1.1;
  const Mat3 expect = (Eigen::AngleAxisd(y, Vec3::UnitZ()) * Eigen::AngleAxisd(p, Vec3::UnitY()) *
                       Eigen::AngleAxisd(r, Vec3::UnitX()))
                          .toRotationMatrix();
  CHECK((rotation_from_ypr(y, p, r) - expect).norm() < 1e-12);
}

TEST_CASE("sphere sampling") {
  CHECK_THROWS_AS(sample_directions(3, SamplingScheme::Fibonacci), Error);
  for (auto scheme : {SamplingScheme::Fibonacci, SamplingScheme::UniformRandom}) {
    const auto d = sample_directions(500, scheme, 7);
    REQUIRE(d.size() == 500);
    Vec3 mean = Vec3::Zero();
    for (const Vec3& v : d) {
      CHECK(v.norm() == doctest::Approx(1.0).epsilon(1e-12));
      mean += v / 500.0;
    }
    CHECK(mean.norm() < 0.1);
  }
  CHECK(sample_directions(20, SamplingScheme::UniformRandom, 9) ==
        sample_directions(20, SamplingScheme::UniformRandom, 9));
  // Fibonacci points are well spread: no near duplicates
  const auto f = sample_directions(70, SamplingScheme::Fibonacci);
  double closest = 10;
  for (std::size_t i = 0; i < f.size(); ++i)
    for (std::size_t j = i + 1; j < f.size(); ++j) closest = std::min(closest, (f[i] - f[j]).norm());
  CHECK(closest > 0.25);
}

TEST_CASE("signed distances") {
  const Sphere s{Vec3(1, 0, 0), 0.5};
  CHECK(signed_distance(s, Vec3(3, 0, 0)) == doctest::Approx(1.5));
  CHECK(signed_distance(s, Vec3(1, 0, 0)) == doctest::Approx(-0.5));
  const Box b{Vec3(0, 0, 0), Vec3(1, 2, 3)};
  CHECK(signed_distance(b, Vec3(2, 1, 1)) == doctest::Approx(1.0));
  CHECK(signed_distance(b, Vec3(2, 3, 1)) == doctest::Approx(std::sqrt(2.0)));
  CHECK(signed_distance(b, Vec3(0.5, 1, 1.5)) == doctest::Approx(-0.5));
  ObstacleWorld w;
  CHECK(std::isinf(obstacle_distance(w, Vec3::Zero())));
  w.spheres.push_back(s);
  w.boxes.push_back(b);
  CHECK(obstacle_distance(w, Vec3(1, 0, -1)) == doctest::Approx(0.5));
  CHECK(segment_blocked(w, Vec3(3, 0, 0), Vec3(-1, 0, 0)));
  CHECK_FALSE(segment_blocked(w, Vec3(3, 5, 0), Vec3(-1, 5, 0)));
  w.spheres.push_back({Vec3::Zero(), -1.0});
  CHECK_THROWS_AS(w.validate(), Error);
}
