#include "fif/visibility.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <nlohmann/json.hpp>
#include <numbers>
#include <ostream>
#include <random>

#include "fif/error.hpp"

namespace fif {

double theta_visibility(double theta, double alpha) {
  return theta <= alpha ? 1.0 : 0.0;
}

double sigmoid_visibility(double theta, double alpha, double k_s) {
  return sigmoid_visibility_cos(std::cos(theta), alpha, k_s);
}

double sigmoid_visibility_cos(double cos_theta, double alpha, double k_s) {
  return 1.0 / (1.0 + std::exp(-k_s * (cos_theta - std::cos(alpha))));
}

Eigen::VectorXd VisibilityModel::rotation_vector(const Mat3& rotation) const {
  Eigen::VectorXd out(size());
  rotation_vector(optical_axis(rotation), std::span<double>(out.data(), out.size()));
  return out;
}

Eigen::VectorXd VisibilityModel::position_vector(
    const Vec3& camera_position, const Vec3& landmark_position) const {
  Eigen::Matrix3Xd b(3, 1);
  b.col(0) = bearing(landmark_position - camera_position);
  Eigen::MatrixXd out(size(), 1);
  position_vectors(b, out);
  return out.col(0);
}

double VisibilityModel::evaluate(const Mat3& rotation,
                                 const Vec3& camera_position,
                                 const Vec3& landmark_position) const {
  return rotation_vector(rotation).dot(
      position_vector(camera_position, landmark_position));
}

// --- quadratic -------------------------------------------------------------

QuadCoefficients quad_coefficients(double alpha, double v_alpha) {
  const double a = std::cos(alpha);
  if (std::abs(a) >= 1.0 - 1e-9) {
    throw Error(ErrorCode::SingularFov,
                "quadratic visibility undefined for |cos(alpha)| ~ 1");
  }
  // v(0) = 1 and v(pi) = 0 give k1 = 1/2 and k2 + k0 = 1/2.
  QuadCoefficients k;
  k.k1 = 0.5;
  k.k2 = (v_alpha - 0.5 * a - 0.5) / (a * a - 1.0);
  k.k0 = 0.5 - k.k2;
  return k;
}

QuadraticVisibility::QuadraticVisibility(double alpha, double v_alpha)
    : alpha_(alpha), v_alpha_(v_alpha), k_(quad_coefficients(alpha, v_alpha)) {}

QuadraticVisibility::QuadraticVisibility(double alpha,
                                         const QuadCoefficients& coefficients)
    : alpha_(alpha), v_alpha_(0.0), k_(coefficients) {
  v_alpha_ = value_at_cos(std::cos(alpha));
}

void QuadraticVisibility::rotation_vector(const Vec3& z,
                                          std::span<double> out) const {
  const double k2 = k_.k2;
  const double k1 = k_.k1;
  out[0] = k2 * z.x() * z.x();
  out[1] = k2 * z.y() * z.y();
  out[2] = k2 * z.z() * z.z();
  out[3] = 2.0 * k2 * z.x() * z.y();
  out[4] = 2.0 * k2 * z.x() * z.z();
  out[5] = 2.0 * k2 * z.y() * z.z();
  out[6] = k1 * z.x();
  out[7] = k1 * z.y();
  out[8] = k1 * z.z();
  out[9] = k_.k0;
}

void QuadraticVisibility::position_vectors(
    const Eigen::Ref<const Eigen::Matrix3Xd>& bearings,
    Eigen::Ref<Eigen::MatrixXd> out) const {
  for (Eigen::Index i = 0; i < bearings.cols(); ++i) {
    const double p1 = bearings(0, i);
    const double p2 = bearings(1, i);
    const double p3 = bearings(2, i);
    auto c = out.col(i);
    c(0) = p1 * p1;
    c(1) = p2 * p2;
    c(2) = p3 * p3;
    c(3) = p1 * p2;
    c(4) = p1 * p3;
    c(5) = p2 * p3;
    c(6) = p1;
    c(7) = p2;
    c(8) = p3;
    c(9) = 1.0;
  }
}

// --- Gaussian process ------------------------------------------------------

double se_kernel(const Vec3& z1, const Vec3& z2, const SeKernelParams& params) {
  const double d2 = (z1 - z2).squaredNorm();
  return params.sigma2 *
         std::exp(-d2 / (2.0 * params.length_scale * params.length_scale));
}

namespace {

Eigen::MatrixXd gram_matrix(const std::vector<Vec3>& samples,
                            const SeKernelParams& params) {
  const auto n = static_cast<Eigen::Index>(samples.size());
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    k(i, i) = se_kernel(samples[i], samples[i], params) + params.jitter;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double v = se_kernel(samples[i], samples[j], params);
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  return k;
}

void validate_kernel(const SeKernelParams& p) {
  if (!(p.length_scale > 0.0) || !(p.jitter >= 0.0) || !(p.sigma2 > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "invalid SE kernel parameters");
  }
}

}  // namespace

GpVisibility::GpVisibility(std::vector<Vec3> samples,
                           const SeKernelParams& params, double alpha,
                           double k_s)
    : samples_(std::move(samples)), params_(params), alpha_(alpha), k_s_(k_s) {
  if (samples_.size() < 4) {
    throw Error(ErrorCode::TooFewSamples, "GP visibility needs >= 4 samples");
  }
  validate_kernel(params_);
  if (!(k_s_ > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "sigmoid slope must be positive");
  }
  const auto n = static_cast<Eigen::Index>(samples_.size());
  sample_matrix_.resize(3, n);
  for (Eigen::Index i = 0; i < n; ++i) sample_matrix_.col(i) = samples_[i];

  gram_ = gram_matrix(samples_, params_);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram_, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo > 1e12) {
    throw Error(ErrorCode::SingularGram,
                "GP Gram matrix is singular or too ill-conditioned");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(gram_);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::SingularGram, "GP Gram matrix is not SPD");
  }
  gram_inv_ = llt.solve(Eigen::MatrixXd::Identity(n, n));
  gram_inv_ = 0.5 * (gram_inv_ + gram_inv_.transpose()).eval();
}

void GpVisibility::rotation_vector(const Vec3& z, std::span<double> out) const {
  const double inv_two_l2 =
      1.0 / (2.0 * params_.length_scale * params_.length_scale);
  for (std::size_t g = 0; g < samples_.size(); ++g) {
    const double d2 = (z - samples_[g]).squaredNorm();
    out[g] = params_.sigma2 * std::exp(-d2 * inv_two_l2);
  }
}

Eigen::VectorXd GpVisibility::training_targets(const Vec3& b) const {
  Eigen::VectorXd v(size());
  const double cos_alpha = std::cos(alpha_);
  for (Eigen::Index g = 0; g < v.size(); ++g) {
    v(g) = 1.0 / (1.0 + std::exp(-k_s_ * (sample_matrix_.col(g).dot(b) - cos_alpha)));
  }
  return v;
}

void GpVisibility::position_vectors(
    const Eigen::Ref<const Eigen::Matrix3Xd>& bearings,
    Eigen::Ref<Eigen::MatrixXd> out) const {
  Eigen::MatrixXd targets(samples_.size(), bearings.cols());
  position_features(bearings, targets);
  out.noalias() = gram_inv_ * targets;
}

void GpVisibility::position_features(
    const Eigen::Ref<const Eigen::Matrix3Xd>& bearings,
    Eigen::Ref<Eigen::MatrixXd> out) const {
  const double cos_alpha = std::cos(alpha_);
  out.noalias() = sample_matrix_.transpose() * bearings;
  out = (((out.array() - cos_alpha) * (-k_s_)).exp() + 1.0).inverse();
}

void GpVisibility::apply_feature_map(Eigen::Ref<Eigen::MatrixXd> rows) const {
  const Eigen::MatrixXd mapped = rows * gram_inv_;
  rows = mapped;
}

std::shared_ptr<const GpVisibility> gp_build(const std::vector<Vec3>& samples,
                                             const SeKernelParams& params,
                                             double alpha, double k_s) {
  return std::make_shared<const GpVisibility>(samples, params, alpha, k_s);
}

double gp_log_marginal_likelihood(const std::vector<Vec3>& samples,
                                  const SeKernelParams& params,
                                  const Eigen::MatrixXd& targets) {
  const Eigen::MatrixXd k = gram_matrix(samples, params);
  Eigen::LLT<Eigen::MatrixXd> llt(k);
  if (llt.info() != Eigen::Success) {
    return -std::numeric_limits<double>::infinity();
  }
  const Eigen::MatrixXd l = llt.matrixL();
  const double log_det = 2.0 * l.diagonal().array().log().sum();
  if (!std::isfinite(log_det)) return -std::numeric_limits<double>::infinity();
  const Eigen::MatrixXd alpha = llt.solve(targets);
  const double fit = (targets.array() * alpha.array()).sum();
  const double n = static_cast<double>(samples.size());
  const double m = static_cast<double>(targets.cols());
  return -0.5 * fit - 0.5 * m * log_det -
         0.5 * m * n * std::log(2.0 * std::numbers::pi);
}

std::vector<double> default_lengthscale_grid() {
  std::vector<double> grid;
  const int n = 25;
  const double lo = std::log(0.05);
  const double hi = std::log(2.0);
  for (int i = 0; i < n; ++i) {
    grid.push_back(std::exp(lo + (hi - lo) * i / (n - 1)));
  }
  return grid;
}

LengthScaleFit train_lengthscale(const std::vector<Vec3>& samples,
                                 double alpha, double k_s,
                                 const std::vector<double>& search_grid,
                                 const LengthScaleTraining& training) {
  if (search_grid.empty()) {
    throw Error(ErrorCode::InvalidArgument, "empty length-scale search grid");
  }
  for (double l : search_grid) {
    if (!(l > 0.0)) {
      throw Error(ErrorCode::InvalidArgument, "length scales must be positive");
    }
  }
  if (samples.size() < 4) {
    throw Error(ErrorCode::TooFewSamples, "GP visibility needs >= 4 samples");
  }

  // Training targets: sigmoid visibility of random landmarks seen from the
  // origin, evaluated at each sampled optical axis.
  std::mt19937_64 rng(training.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto n = static_cast<Eigen::Index>(samples.size());
  Eigen::MatrixXd targets(n, training.landmark_count);
  const double r0 = std::pow(training.min_range, 3);
  const double r1 = std::pow(training.max_range, 3);
  const double cos_alpha = std::cos(alpha);
  for (int i = 0; i < training.landmark_count; ++i) {
    Vec3 dir(normal(rng), normal(rng), normal(rng));
    while (dir.norm() < 1e-12) dir = Vec3(normal(rng), normal(rng), normal(rng));
    const double r = std::cbrt(r0 + unit(rng) * (r1 - r0));
    const Vec3 b = bearing(dir.normalized() * r);
    for (Eigen::Index g = 0; g < n; ++g) {
      targets(g, i) =
          1.0 / (1.0 + std::exp(-k_s * (samples[g].dot(b) - cos_alpha)));
    }
  }

  LengthScaleFit fit;
  auto evaluate = [&](double l) {
    SeKernelParams p{training.sigma2, l, training.jitter};
    const double lml = gp_log_marginal_likelihood(samples, p, targets);
    fit.evaluations.emplace_back(l, lml);
    return lml;
  };

  std::vector<double> grid = search_grid;
  std::sort(grid.begin(), grid.end());
  std::size_t best = 0;
  double best_lml = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double lml = evaluate(grid[i]);
    if (lml > best_lml) {
      best_lml = lml;
      best = i;
    }
  }
  fit.length_scale = grid[best];
  fit.log_likelihood = best_lml;
  if (!std::isfinite(best_lml) || grid.size() < 2) return fit;

  // Golden-section search on log(l) inside the bracketing grid cell pair.
  double a = std::log(grid[best == 0 ? 0 : best - 1]);
  double b = std::log(grid[std::min(best + 1, grid.size() - 1)]);
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = evaluate(std::exp(c));
  double fd = evaluate(std::exp(d));
  for (int it = 0; it < 40 && (b - a) > 1e-6; ++it) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = evaluate(std::exp(c));
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = evaluate(std::exp(d));
    }
  }
  for (const auto& [l, lml] : fit.evaluations) {
    if (lml > fit.log_likelihood) {
      fit.log_likelihood = lml;
      fit.length_scale = l;
    }
  }
  return fit;
}

std::shared_ptr<const GpVisibility> make_trained_gp(
    int n_samples, double alpha, double k_s,
    const LengthScaleTraining& training) {
  auto samples = sample_directions(n_samples, SamplingScheme::Fibonacci);
  const LengthScaleFit fit =
      train_lengthscale(samples, alpha, k_s, default_lengthscale_grid(), training);
  SeKernelParams params{training.sigma2, fit.length_scale, training.jitter};
  return gp_build(samples, params, alpha, k_s);
}

void write_model_params(const VisibilityModel& model, std::ostream& out) {
  nlohmann::ordered_json j;
  j["alpha"] = model.half_fov();
  j["n_v"] = model.size();
  if (const auto* q = dynamic_cast<const QuadraticVisibility*>(&model)) {
    j["kind"] = "quadratic";
    j["v_alpha"] = q->v_alpha();
    j["k2"] = q->coefficients().k2;
    j["k1"] = q->coefficients().k1;
    j["k0"] = q->coefficients().k0;
  } else if (const auto* g = dynamic_cast<const GpVisibility*>(&model)) {
    j["kind"] = "gp";
    j["k_s"] = g->sigmoid_slope();
    j["length_scale"] = g->params().length_scale;
    j["sigma2"] = g->params().sigma2;
    j["jitter"] = g->params().jitter;
    auto dirs = nlohmann::ordered_json::array();
    for (const Vec3& z : g->samples()) dirs.push_back({z.x(), z.y(), z.z()});
    j["samples"] = std::move(dirs);
  }
  out << j.dump(2) << '\n';
}

}  // namespace fif
