#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Cholesky>
#include <cmath>
#include <sstream>

#include "fif/error.hpp"
#include "fif/visibility.hpp"
#include "support.hpp"

using namespace fif;

namespace {

double angle(const Vec3& a, const Vec3& b) {
  return std::acos(std::clamp(a.normalized().dot(b.normalized()), -1.0, 1.0));
}

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("angle-only visibilities") {
  const double a = M_PI / 4;
  CHECK(theta_visibility(0.2, a) == 1.0);
  CHECK(theta_visibility(a, a) == 1.0);
  CHECK(theta_visibility(a + 1e-9, a) == 0.0);
  CHECK(sigmoid_visibility(a, a, 15) == doctest::Approx(0.5));
  CHECK(sigmoid_visibility(0.0, a, 15) > 0.98);
  CHECK(sigmoid_visibility(M_PI, a, 15) < 1e-9);
  for (double t : {0.1, 0.8, 2.0})
    CHECK(sigmoid_visibility_cos(std::cos(t), a, 15) == doctest::Approx(sigmoid_visibility(t, a, 15)));
}

TEST_CASE("quadratic coefficients hit the three constraints") {
  for (double alpha : {0.4, M_PI / 4, 1.2}) {
    for (double va : {0.3, 0.5, 0.8}) {
      const QuadCoefficients k = quad_coefficients(alpha, va);
      auto v = [&](double th) {
        const double c = std::cos(th);
        return k.k2 * c * c + k.k1 * c + k.k0;
      };
      CHECK(v(0.0) == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(std::abs(v(M_PI)) < 1e-12);
      CHECK(v(alpha) == doctest::Approx(va).epsilon(1e-12));
    }
  }
  CHECK(code_of([] { quad_coefficients(0.0, 0.5); }) == ErrorCode::SingularFov);
  CHECK(code_of([] { quad_coefficients(M_PI, 0.5); }) == ErrorCode::SingularFov);
}

TEST_CASE("quadratic model separates into rotation and position parts") {
  const QuadraticVisibility m(M_PI / 4, 0.5);
  CHECK(m.size() == 10);
  std::mt19937_64 rng(5);
  for (int i = 0; i < 50; ++i) {
    const Mat3 r = test::random_rotation(rng);
    const Vec3 t = test::random_in_box(rng, Vec3(-1, -1, -1), Vec3(1, 1, 1));
    const Vec3 p = test::random_in_box(rng, Vec3(-3, -3, -3), Vec3(3, 3, 3));
    const double expect = m.value_at_cos(std::cos(angle(r.col(2), p - t)));
    CHECK(m.evaluate(r, t, p) == doctest::Approx(expect).epsilon(1e-12));
    CHECK(m.rotation_vector(r).dot(m.position_vector(t, p)) == doctest::Approx(expect).epsilon(1e-12));
  }
  const QuadraticVisibility raw(M_PI / 4, m.coefficients());
  CHECK(raw.v_alpha() == doctest::Approx(0.5));
  CHECK(code_of([&] { m.position_vector(Vec3::Zero(), Vec3::Zero()); }) == ErrorCode::DegeneratePoint);
}

TEST_CASE("GP model interpolates its training targets at the sample axes") {
  const auto samples = sample_directions(30, SamplingScheme::Fibonacci);
  const double a = M_PI / 4;
  const auto gp = gp_build(samples, {1.0, 0.6, 1e-10}, a);
  std::mt19937_64 rng(8);
  for (int i = 0; i < 20; ++i) {
    const Vec3 b = test::random_in_box(rng, Vec3(-1, -1, -1), Vec3(1, 1, 1)).normalized();
    const Vec3 z = samples[i % samples.size()];
    Eigen::VectorXd vr(gp->size());
    gp->rotation_vector(z, std::span<double>(vr.data(), vr.size()));
    Eigen::MatrixXd vp(gp->size(), 1);
    gp->position_vectors(b, vp);
    CHECK(vr.dot(vp.col(0)) == doctest::Approx(sigmoid_visibility(angle(z, b), a, 15)).epsilon(1e-4));
  }
}

TEST_CASE("GP feature split reproduces the position vectors") {
  const auto gp = make_trained_gp(30, M_PI / 4);
  std::mt19937_64 rng(9);
  Eigen::Matrix3Xd bs(3, 5);
  for (int i = 0; i < 5; ++i) bs.col(i) = test::random_in_box(rng, Vec3(-1, -1, -1), Vec3(1, 1, 1)).normalized();
  Eigen::MatrixXd direct(gp->size(), 5), feat(gp->size(), 5);
  gp->position_vectors(bs, direct);
  gp->position_features(bs, feat);
  Eigen::MatrixXd rows = feat.transpose();
  gp->apply_feature_map(rows);
  CHECK(test::rel_diff(rows.transpose(), direct) < 1e-10);
  // on-axis landmark is fully visible, behind the camera nearly invisible
  CHECK(gp->evaluate(Mat3::Identity(), Vec3::Zero(), Vec3(0, 0, 2)) > 0.9);
  CHECK(std::abs(gp->evaluate(Mat3::Identity(), Vec3::Zero(), Vec3(0, 0, -2))) < 0.1);
}

TEST_CASE("GP construction errors") {
  const auto three = sample_directions(4, SamplingScheme::Fibonacci);
  std::vector<Vec3> few(three.begin(), three.begin() + 3);
  CHECK(code_of([&] { gp_build(few, {}, M_PI / 4); }) == ErrorCode::TooFewSamples);
  auto dup = sample_directions(10, SamplingScheme::Fibonacci);
  dup[1] = dup[0];
  CHECK(code_of([&] { gp_build(dup, {1.0, 0.5, 0.0}, M_PI / 4); }) == ErrorCode::SingularGram);
  CHECK(code_of([&] { gp_build(sample_directions(10, SamplingScheme::Fibonacci), {1.0, -1.0, 1e-10}, M_PI / 4); }) ==
        ErrorCode::InvalidArgument);
}

TEST_CASE("SE kernel and marginal likelihood") {
  const SeKernelParams p{2.0, 0.5, 1e-10};
  CHECK(se_kernel(Vec3(1, 0, 0), Vec3(1, 0, 0), p) == doctest::Approx(2.0));
  CHECK(se_kernel(Vec3(1, 0, 0), Vec3(0, 1, 0), p) == doctest::Approx(2.0 * std::exp(-2.0 / 0.5)));

  const auto s = sample_directions(12, SamplingScheme::Fibonacci);
  Eigen::MatrixXd y(12, 2);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n;
  for (int i = 0; i < y.size(); ++i) y.data()[i] = n(rng);
  const SeKernelParams q{1.0, 0.7, 1e-6};
  Eigen::MatrixXd k(12, 12);
  for (int i = 0; i < 12; ++i)
    for (int j = 0; j < 12; ++j) k(i, j) = std::exp(-(s[i] - s[j]).squaredNorm() / (2 * 0.49)) + (i == j ? 1e-6 : 0);
  Eigen::LLT<Eigen::MatrixXd> llt(k);
  const double logdet = 2 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  double expect = 0;
  for (int c = 0; c < 2; ++c)
    expect += -0.5 * y.col(c).dot(llt.solve(y.col(c))) - 0.5 * logdet - 6 * std::log(2 * M_PI);
  CHECK(gp_log_marginal_likelihood(s, q, y) == doctest::Approx(expect).epsilon(1e-9));
}

TEST_CASE("trained length scale maximizes the likelihood it evaluated") {
  const auto s = sample_directions(30, SamplingScheme::Fibonacci);
  const LengthScaleFit fit = train_lengthscale(s, M_PI / 4, 15, default_lengthscale_grid());
  REQUIRE(!fit.evaluations.empty());
  CHECK(fit.length_scale > 0);
  for (const auto& [l, ll] : fit.evaluations) CHECK(ll <= fit.log_likelihood + 1e-9);
  // deterministic
  CHECK(train_lengthscale(s, M_PI / 4, 15, default_lengthscale_grid()).length_scale == fit.length_scale);
}

TEST_CASE("model parameters are written as JSON") {
  std::ostringstream out;
  write_model_params(QuadraticVisibility(M_PI / 4, 0.5), out);
  CHECK(out.str().find("quad") != std::string::npos);
}
