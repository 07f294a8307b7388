#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include "fif/geometry.hpp"

namespace fif {

inline constexpr double kDefaultSigmoidSlope = 15.0;
inline constexpr double kDefaultGpJitter = 1e-10;
inline constexpr int kDefaultGpSamples = 70;

/// Binary angle-only visibility: 1 when theta <= alpha.
double theta_visibility(double theta, double alpha);

/// Smooth surrogate 1 / (1 + exp(-k_s (cos(theta) - cos(alpha)))).
double sigmoid_visibility(double theta, double alpha, double k_s);

/// Same as sigmoid_visibility but takes cos(theta) directly.
double sigmoid_visibility_cos(double cos_theta, double alpha, double k_s);

enum class VisibilityKind : std::uint8_t { Quadratic = 0, GaussianProcess = 1 };

/// Separable visibility v(R, t, p) ~= v_r(R)^T v_p(t, p).
///
/// The rotation part depends only on the optical axis; the position part only
/// on the unit bearing from the camera position to the landmark. Subclasses
/// provide both halves with a common length `size()`.
class VisibilityModel {
 public:
  virtual ~VisibilityModel() = default;

  virtual VisibilityKind kind() const = 0;
  virtual int size() const = 0;
  virtual double half_fov() const = 0;

  virtual void rotation_vector(const Vec3& optical_axis,
                               std::span<double> out) const = 0;

  /// Column g of `out` (size() x N) is v_p for the unit bearing in column g
  /// of `bearings`.
  virtual void position_vectors(const Eigen::Ref<const Eigen::Matrix3Xd>& bearings,
                                Eigen::Ref<Eigen::MatrixXd> out) const = 0;

  /// position_vectors() split as features followed by a fixed linear map, so
  /// sums over many landmarks can apply the map once. Defaults: features are
  /// the position vectors and the map is the identity.
  virtual void position_features(const Eigen::Ref<const Eigen::Matrix3Xd>& bearings,
                                 Eigen::Ref<Eigen::MatrixXd> out) const {
    position_vectors(bearings, out);
  }
  /// Right-multiplies `rows` (m x size()) by the transposed feature map.
  virtual void apply_feature_map(Eigen::Ref<Eigen::MatrixXd> rows) const {
    (void)rows;
  }

  Eigen::VectorXd rotation_vector(const Mat3& rotation) const;

  /// Throws DegeneratePoint when the landmark sits on the camera.
  Eigen::VectorXd position_vector(const Vec3& camera_position,
                                  const Vec3& landmark_position) const;

  double evaluate(const Mat3& rotation, const Vec3& camera_position,
                  const Vec3& landmark_position) const;
};

using VisibilityModelPtr = std::shared_ptr<const VisibilityModel>;

struct QuadCoefficients {
  double k2 = 0.0;
  double k1 = 0.0;
  double k0 = 0.0;
};

/// Solves v(0) = 1, v(pi) = 0, v(alpha) = v_alpha for
/// v(theta) = k2 cos^2 + k1 cos + k0. Throws SingularFov when
/// |cos(alpha)| >= 1 - 1e-9.
QuadCoefficients quad_coefficients(double alpha, double v_alpha);

class QuadraticVisibility final : public VisibilityModel {
 public:
  QuadraticVisibility(double alpha, double v_alpha);
  /// Raw coefficients, e.g. read back from a field file. v_alpha() is then
  /// recomputed from the coefficients.
  QuadraticVisibility(double alpha, const QuadCoefficients& coefficients);

  VisibilityKind kind() const override { return VisibilityKind::Quadratic; }
  int size() const override { return 10; }
  double half_fov() const override { return alpha_; }

  using VisibilityModel::rotation_vector;
  void rotation_vector(const Vec3& optical_axis,
                       std::span<double> out) const override;
  void position_vectors(const Eigen::Ref<const Eigen::Matrix3Xd>& bearings,
                        Eigen::Ref<Eigen::MatrixXd> out) const override;

  const QuadCoefficients& coefficients() const { return k_; }
  double v_alpha() const { return v_alpha_; }
  double value_at_cos(double c) const { return (k_.k2 * c + k_.k1) * c + k_.k0; }

 private:
  double alpha_;
  double v_alpha_;
  QuadCoefficients k_;
};

struct SeKernelParams {
  double sigma2 = 1.0;
  double length_scale = 0.5;
  double jitter = kDefaultGpJitter;
};

/// sigma2 * exp(-|z1 - z2|^2 / (2 l^2)).
double se_kernel(const Vec3& z1, const Vec3& z2, const SeKernelParams& params);

class GpVisibility final : public VisibilityModel {
 public:
  /// Throws TooFewSamples (< 4 samples), InvalidArgument (bad params) or
  /// SingularGram (condition number above 1e12 after jitter).
  GpVisibility(std::vector<Vec3> samples, const SeKernelParams& params,
               double alpha, double k_s = kDefaultSigmoidSlope);

  VisibilityKind kind() const override {
    return VisibilityKind::GaussianProcess;
  }
  int size() const override { return static_cast<int>(samples_.size()); }
  double half_fov() const override { return alpha_; }

  using VisibilityModel::rotation_vector;
  void rotation_vector(const Vec3& optical_axis,
                       std::span<double> out) const override;
  void position_vectors(const Eigen::Ref<const Eigen::Matrix3Xd>& bearings,
                        Eigen::Ref<Eigen::MatrixXd> out) const override;
  /// Features are the sigmoid targets; the map is the inverse Gram matrix.
  void position_features(const Eigen::Ref<const Eigen::Matrix3Xd>& bearings,
                         Eigen::Ref<Eigen::MatrixXd> out) const override;
  void apply_feature_map(Eigen::Ref<Eigen::MatrixXd> rows) const override;

  /// Sigmoid training targets v_s at the sample axes for one bearing.
  Eigen::VectorXd training_targets(const Vec3& bearing) const;

  const std::vector<Vec3>& samples() const { return samples_; }
  const SeKernelParams& params() const { return params_; }
  double sigmoid_slope() const { return k_s_; }
  const Eigen::MatrixXd& gram() const { return gram_; }
  const Eigen::MatrixXd& gram_inverse() const { return gram_inv_; }

 private:
  std::vector<Vec3> samples_;
  Eigen::Matrix3Xd sample_matrix_;
  SeKernelParams params_;
  double alpha_;
  double k_s_;
  Eigen::MatrixXd gram_;
  Eigen::MatrixXd gram_inv_;
};

std::shared_ptr<const GpVisibility> gp_build(
    const std::vector<Vec3>& samples, const SeKernelParams& params,
    double alpha, double k_s = kDefaultSigmoidSlope);

struct LengthScaleFit {
  double length_scale = 0.0;
  double log_likelihood = 0.0;
  /// Every (l, log marginal likelihood) pair evaluated, grid points first.
  std::vector<std::pair<double, double>> evaluations;
};

struct LengthScaleTraining {
  int landmark_count = 200;
  double min_range = 0.5;
  double max_range = 5.0;
  std::uint64_t seed = 1;
  double sigma2 = 1.0;
  double jitter = kDefaultGpJitter;
};

/// Log marginal likelihood of independent targets (columns of `targets`)
/// under a zero-mean GP with the given kernel at `samples`. Returns -inf when
/// the Gram matrix is not positive definite.
double gp_log_marginal_likelihood(const std::vector<Vec3>& samples,
                                  const SeKernelParams& params,
                                  const Eigen::MatrixXd& targets);

/// Coarse grid search over `search_grid` then golden-section refinement
/// between the neighbours of the best grid point.
LengthScaleFit train_lengthscale(const std::vector<Vec3>& samples,
                                 double alpha, double k_s,
                                 const std::vector<double>& search_grid,
                                 const LengthScaleTraining& training = {});

std::vector<double> default_lengthscale_grid();

/// Fibonacci samples plus a trained length scale.
std::shared_ptr<const GpVisibility> make_trained_gp(
    int n_samples, double alpha, double k_s = kDefaultSigmoidSlope,
    const LengthScaleTraining& training = {});

/// Human-readable JSON description of the model parameters.
void write_model_params(const VisibilityModel& model, std::ostream& out);

}  // namespace fif
