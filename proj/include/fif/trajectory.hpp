#pragma once

#include <Eigen/Core>
#include <array>
#include <vector>

#include "fif/planners.hpp"
#include "fif/planning_costs.hpp"

namespace fif {

inline constexpr int kPolyCoeffs = 8;  ///< order-7 segments
inline constexpr int kKnotDerivs = 4;  ///< value, 1st, 2nd, 3rd derivative
inline constexpr int kTrajAxes = 4;    ///< x, y, z, yaw

/// Piecewise polynomial over (x, y, z, yaw). Row s of coeffs[axis] holds
/// c_0..c_7 of segment s in local time tau in [0, durations[s]]. Yaw is not
/// wrapped along the trajectory.
struct PolyTrajectory {
  std::vector<double> durations;
  std::array<Eigen::MatrixXd, kTrajAxes> coeffs;

  int segments() const { return static_cast<int>(durations.size()); }
  double duration() const;
  double eval(int axis, double t, int derivative = 0) const;
  PlanState state(double t) const;
};

/// Boundary condition of one trajectory end.
struct BoundaryState {
  PlanState state;
  Vec3 velocity = Vec3::Zero();
  Vec3 acceleration = Vec3::Zero();
  Vec3 jerk = Vec3::Zero();
  double yaw_rate = 0.0;
  double yaw_acceleration = 0.0;
  double yaw_jerk = 0.0;
};

/// Minimum-snap position / minimum-acceleration yaw fit with `segments`
/// equal-duration segments whose interior knots are free. The end yaw is
/// taken on the short way round from the start yaw. Throws
/// SingularCostMatrix for degenerate durations.
PolyTrajectory fit_initial_trajectory(const BoundaryState& start,
                                      const BoundaryState& end, double duration,
                                      int segments);

struct TrajectoryCostParams {
  double mu_d = 1.0;
  double mu_c = 1.0;
  double mu_v = 1.0;
  double collision_epsilon = 0.5;  ///< meters
  double sample_dt = 0.1;          ///< seconds
  MetricKind metric = MetricKind::Determinant;
  PotentialParams potential;
  /// Information term is zero when null.
  const InformationSource* info = nullptr;
};

struct TrajectoryCost {
  double dynamic = 0.0;
  double collision = 0.0;
  double information = 0.0;
  double total = 0.0;
  int samples = 0;
  int out_of_field_samples = 0;
};

/// 0 above eps, (d - eps)^2 / (2 eps) on [0, eps], eps/2 - d inside.
double collision_potential(double distance, double epsilon);

/// Integral of squared snap (position) and squared acceleration (yaw).
double dynamic_cost(const PolyTrajectory& traj);

TrajectoryCost trajectory_cost(const PolyTrajectory& traj,
                               const ObstacleWorld& world,
                               const TrajectoryCostParams& params);

/// Sampling times used by the cost integrals and their Riemann weights.
std::vector<std::pair<double, double>> sample_times(double duration, double dt);

struct OptimizeParams {
  int max_iters = 100;
  double fd_step = 1e-4;
  double grad_tol = 1e-9;
  int lbfgs_memory = 8;
};

struct IterationLog {
  int iteration = 0;
  double cost = 0.0;
  double time = 0.0;  ///< seconds since start
};

struct OptimizeResult {
  PolyTrajectory trajectory;
  TrajectoryCost initial;
  TrajectoryCost final_cost;
  int iterations = 0;
  int cost_evaluations = 0;
  double elapsed = 0.0;
  std::vector<IterationLog> log;
};

/// The optimization problem over the free interior knot derivatives of a
/// trajectory with fixed durations and fixed end knots.
class TrajectoryProblem {
 public:
  /// Throws SingularCostMatrix for degenerate durations.
  TrajectoryProblem(const PolyTrajectory& init, const ObstacleWorld& world,
                    const TrajectoryCostParams& params);

  int size() const { return static_cast<int>(x0_.size()); }
  const Eigen::VectorXd& initial() const { return x0_; }

  PolyTrajectory trajectory(const Eigen::VectorXd& x) const;
  double dynamic(const Eigen::VectorXd& x) const;
  Eigen::VectorXd dynamic_gradient(const Eigen::VectorXd& x) const;
  TrajectoryCost cost(const Eigen::VectorXd& x) const;
  double total(const Eigen::VectorXd& x) const { return cost(x).total; }
  /// Analytic dynamic gradient plus central differences of the collision and
  /// information terms.
  Eigen::VectorXd gradient(const Eigen::VectorXd& x, double fd_step,
                           int* evaluations = nullptr) const;
  /// Free variables that reproduce the min-derivative fit for the same ends.
  Eigen::VectorXd min_derivative_solution() const;

 private:
  double sampled_terms(const Eigen::VectorXd& x, int first, int last) const;

  std::vector<double> durations_;
  const ObstacleWorld& world_;
  TrajectoryCostParams params_;
  // Per axis: knot derivative cost matrix split into free/fixed blocks.
  std::array<Eigen::MatrixXd, kTrajAxes> h_ff_;
  std::array<Eigen::MatrixXd, kTrajAxes> h_fp_;
  std::array<Eigen::MatrixXd, kTrajAxes> h_pp_;
  std::array<Eigen::VectorXd, kTrajAxes> fixed_;
  std::vector<Eigen::Matrix<double, kPolyCoeffs, kPolyCoeffs>> maps_;
  Eigen::VectorXd x0_;
};

/// L-BFGS with backtracking; the returned cost never exceeds the initial one.
OptimizeResult optimize_trajectory(const PolyTrajectory& init,
                                   const ObstacleWorld& world,
                                   const TrajectoryCostParams& params,
                                   const OptimizeParams& options = {});

}  // namespace fif
