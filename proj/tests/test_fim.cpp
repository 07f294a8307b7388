#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <Eigen/Geometry>
#include <cmath>
#include <limits>

#include "fif/error.hpp"
#include "fif/fim.hpp"
#include "support.hpp"

using namespace fif;

namespace {

// Unit bearing after the world-side perturbation (rho, phi) of T_wc.
Vec3 perturbed_bearing(const Pose& pose, const Vec3& p, const Eigen::Matrix<double, 6, 1>& xi) {
  const Vec3 rho = xi.head<3>(), phi = xi.tail<3>();
  const Mat3 dr = phi.norm() > 0 ? Eigen::AngleAxisd(phi.norm(), phi.normalized()).toRotationMatrix()
                                 : Mat3::Identity();
  const Mat3 r = dr * pose.rotation();
  const Vec3 t = dr * pose.translation() + rho;
  const Vec3 pc = r.transpose() * (p - t);
  return pc.normalized();
}

}  // namespace

TEST_CASE("bearing jacobian matches finite differences") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const Pose pose(test::random_rotation(rng), test::random_in_box(rng, Vec3(-1, -1, -1), Vec3(1, 1, 1)));
    Landmark l;
    l.position = test::random_in_box(rng, Vec3(-4, -4, -4), Vec3(4, 4, 4));
    const Mat36 j = bearing_jacobian(pose, l);
    Mat36 fd;
    const double h = 1e-6;
    for (int k = 0; k < 6; ++k) {
      Eigen::Matrix<double, 6, 1> e = Eigen::Matrix<double, 6, 1>::Zero();
      e(k) = h;
      fd.col(k) = (perturbed_bearing(pose, l.position, e) - perturbed_bearing(pose, l.position, -e)) / (2 * h);
    }
    CHECK(test::rel_diff(j, fd) < 1e-6);
  }
}

TEST_CASE("landmark FIM is J^T J / sigma^2 and rotation independent") {
  std::mt19937_64 rng(12);
  const Vec3 t(0.3, -0.2, 0.5);
  Landmark l;
  l.position = Vec3(2.0, 1.0, -0.5);
  const double sigma = 0.7;
  const Fim closed = landmark_fim(t, l, sigma);
  CHECK((closed - closed.transpose()).norm() < 1e-14 * closed.norm());
  for (int i = 0; i < 100; ++i) {
    const Pose pose(test::random_rotation(rng), t);
    const Mat36 j = bearing_jacobian(pose, l);
    const Fim jj = j.transpose() * j / (sigma * sigma);
    CHECK(test::rel_diff(closed, jj) < 1e-9);
  }
  // rank 2: bearing carries two constraints
  Eigen::SelfAdjointEigenSolver<Fim> es(closed);
  CHECK(es.eigenvalues()(3) < 1e-12 * es.eigenvalues()(5));
  CHECK(es.eigenvalues()(4) > 1e-6);
}

TEST_CASE("landmark FIM scales with 1/n^2 and sigma") {
  const Fim near = landmark_fim(Vec3::Zero(), Vec3(1, 0, 0));
  const Fim far = landmark_fim(Vec3::Zero(), Vec3(2, 0, 0));
  CHECK(near.topLeftCorner<3, 3>().norm() == doctest::Approx(4 * far.topLeftCorner<3, 3>().norm()));
  CHECK(test::rel_diff(landmark_fim(Vec3::Zero(), Vec3(1, 0, 0), 2.0), near / 4.0) < 1e-15);
  CHECK_THROWS_AS(landmark_fim(Vec3::Zero(), Vec3(0, 0, 1e-12)), Error);
}

TEST_CASE("pinhole visibility") {
  const PinholeCamera cam = PinholeCamera::from_horizontal_fov(640, 480, M_PI / 2);
  CHECK(cam.fx == doctest::Approx(320.0));
  CHECK(cam.half_fov == doctest::Approx(M_PI / 4));
  const Pose pose;  // looks down +z
  Landmark l;
  l.position = Vec3(0, 0, 2);
  CHECK(exact_visible(pose, l, cam));
  l.position = Vec3(0, 0, -2);
  CHECK_FALSE(exact_visible(pose, l, cam));
  l.position = Vec3(1.9, 0, 2);  // u = 320 + 304
  CHECK(exact_visible(pose, l, cam));
  l.position = Vec3(2.1, 0, 2);
  CHECK_FALSE(exact_visible(pose, l, cam));
  l.position = Vec3(0, 1.6, 2);  // v = 240 + 256
  CHECK_FALSE(exact_visible(pose, l, cam));
}

TEST_CASE("exact FIM sums visible landmarks only") {
  const PinholeCamera cam;
  const Pose pose;
  std::vector<Landmark> ls(3);
  ls[0].position = Vec3(0.2, 0.1, 2);
  ls[1].position = Vec3(-0.5, 0.3, 3);
  ls[2].position = Vec3(0, 0, -1);
  const Fim expect = landmark_fim(Vec3::Zero(), ls[0]) + landmark_fim(Vec3::Zero(), ls[1]);
  CHECK(test::rel_diff(exact_pose_fim(pose, ls, cam), expect) < 1e-14);
  CHECK(exact_pose_fim(pose, {}, cam).norm() == 0.0);
}

TEST_CASE("metrics") {
  Fim d = Fim::Zero();
  d.diagonal() << 1, 2, 3, 4, 5, 6;
  CHECK(fim_metric(d, MetricKind::Determinant) == doctest::Approx(720));
  CHECK(fim_metric(d, MetricKind::SmallestEigenvalue) == doctest::Approx(1));
  CHECK(fim_metric(d, MetricKind::Trace) == doctest::Approx(21));
  CHECK(condition_number(d) == doctest::Approx(6));
  Fim s = d;
  s(0, 0) = 0;
  CHECK(std::isinf(condition_number(s)));
  CHECK(relative_frobenius_error(d * 1.1, d) == doctest::Approx(0.1));
  CHECK(metric_from_string("det") == MetricKind::Determinant);
  CHECK(metric_from_string("lmin") == MetricKind::SmallestEigenvalue);
  CHECK(metric_from_string("trace") == MetricKind::Trace);
  CHECK_THROWS_AS(metric_from_string("volume"), Error);
}

TEST_CASE("camera validation") {
  PinholeCamera c;
  c.validate();
  c.fx = 0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = PinholeCamera{};
  c.half_fov = M_PI;
  CHECK_THROWS_AS(c.validate(), Error);
}
