#include "fif/trajectory.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <limits>

#include "fif/error.hpp"

namespace fif {

namespace {

using Mat8 = Eigen::Matrix<double, kPolyCoeffs, kPolyCoeffs>;
using Vec8 = Eigen::Matrix<double, kPolyCoeffs, 1>;

constexpr double kMinDuration = 1e-6;
// Snap for the position axes, acceleration for yaw.
constexpr std::array<int, kTrajAxes> kCostDerivative{4, 4, 4, 2};

double falling(int i, int k) {
  double f = 1.0;
  for (int j = 0; j < k; ++j) f *= i - j;
  return f;
}

// Coefficients from [derivs at tau=0; derivs at tau=T].
Mat8 endpoint_map(double T) {
  Mat8 a = Mat8::Zero();
  for (int k = 0; k < kKnotDerivs; ++k) {
    a(k, k) = falling(k, k);
    for (int i = k; i < kPolyCoeffs; ++i) {
      a(kKnotDerivs + k, i) = falling(i, k) * std::pow(T, i - k);
    }
  }
  return a.inverse();
}

Mat8 cost_matrix(double T, int r) {
  Mat8 q = Mat8::Zero();
  for (int i = r; i < kPolyCoeffs; ++i) {
    for (int j = r; j < kPolyCoeffs; ++j) {
      const int p = i + j - 2 * r + 1;
      q(i, j) = falling(i, r) * falling(j, r) * std::pow(T, p) / p;
    }
  }
  return q;
}

void check_durations(const std::vector<double>& durations) {
  if (durations.empty()) {
    throw Error(ErrorCode::SingularCostMatrix, "trajectory has no segments");
  }
  for (double d : durations) {
    if (!(d > kMinDuration) || !std::isfinite(d)) {
      throw Error(ErrorCode::SingularCostMatrix, "degenerate segment duration");
    }
  }
}

// Knot-derivative cost matrix of one axis, 4 (S + 1) square.
Eigen::MatrixXd knot_cost(const std::vector<Mat8>& maps,
                          const std::vector<double>& durations, int r) {
  const int s = static_cast<int>(durations.size());
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(kKnotDerivs * (s + 1), kKnotDerivs * (s + 1));
  for (int k = 0; k < s; ++k) {
    const Mat8 hs = maps[k].transpose() * cost_matrix(durations[k], r) * maps[k];
    h.block<kPolyCoeffs, kPolyCoeffs>(kKnotDerivs * k, kKnotDerivs * k) += hs;
  }
  return h;
}

std::array<double, kKnotDerivs> boundary_derivs(const BoundaryState& b, int axis,
                                                double yaw) {
  if (axis < 3) {
    return {b.state.position[axis], b.velocity[axis], b.acceleration[axis], b.jerk[axis]};
  }
  return {yaw, b.yaw_rate, b.yaw_acceleration, b.yaw_jerk};
}

}  // namespace

// --- PolyTrajectory --------------------------------------------------------

double PolyTrajectory::duration() const {
  double t = 0.0;
  for (double d : durations) t += d;
  return t;
}

namespace {

// Segment containing t and the local time; knot times go to the earlier segment.
std::pair<int, double> locate(const std::vector<double>& durations, double t) {
  int s = 0;
  double start = 0.0;
  while (s + 1 < static_cast<int>(durations.size()) && t > start + durations[s]) {
    start += durations[s];
    ++s;
  }
  return {s, std::clamp(t - start, 0.0, durations[s])};
}

}  // namespace

double PolyTrajectory::eval(int axis, double t, int derivative) const {
  const auto [s, tau] = locate(durations, t);
  double value = 0.0;
  double power = 1.0;
  for (int i = derivative; i < kPolyCoeffs; ++i) {
    value += falling(i, derivative) * coeffs[axis](s, i) * power;
    power *= tau;
  }
  return value;
}

PlanState PolyTrajectory::state(double t) const {
  return {Vec3(eval(0, t), eval(1, t), eval(2, t)), wrap_angle(eval(3, t))};
}

// --- costs -----------------------------------------------------------------

double collision_potential(double d, double eps) {
  if (d > eps) return 0.0;
  if (d >= 0.0) return (d - eps) * (d - eps) / (2.0 * eps);
  return 0.5 * eps - d;
}

double dynamic_cost(const PolyTrajectory& traj) {
  double j = 0.0;
  for (int a = 0; a < kTrajAxes; ++a) {
    for (int s = 0; s < traj.segments(); ++s) {
      const Vec8 c = traj.coeffs[a].row(s).transpose();
      j += c.dot(cost_matrix(traj.durations[s], kCostDerivative[a]) * c);
    }
  }
  return j;
}

std::vector<std::pair<double, double>> sample_times(double duration, double dt) {
  if (!(dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "sample_dt must be positive");
  const int n = std::max(1, static_cast<int>(std::ceil(duration / dt - 1e-9)));
  std::vector<std::pair<double, double>> out;
  out.reserve(n);
  for (int k = 0; k < n; ++k) {
    const double t = k * dt;
    out.emplace_back(t, std::min(dt, duration - t));
  }
  return out;
}

namespace {

struct SampledCost {
  double collision = 0.0;
  double information = 0.0;
  int samples = 0;
  int out_of_field = 0;
};

// Only samples inside segments [first, last] when a range is given.
SampledCost sampled_cost(const PolyTrajectory& traj, const ObstacleWorld& world,
                         const TrajectoryCostParams& p, bool want_collision,
                         bool want_info, int first = 0,
                         int last = std::numeric_limits<int>::max()) {
  SampledCost c;
  for (const auto& [t, w] : sample_times(traj.duration(), p.sample_dt)) {
    const int seg = locate(traj.durations, t).first;
    if (seg < first || seg > last) continue;
    const PlanState s = traj.state(t);
    ++c.samples;
    if (want_collision) {
      c.collision += w * collision_potential(obstacle_distance(world, s.position),
                                             p.collision_epsilon);
    }
    if (want_info) {
      double v;
      try {
        v = p.info->metric(state_pose(s), p.metric);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::OutOfField) throw;
        ++c.out_of_field;
        v = 0.0;
      }
      c.information += w * info_potential(v, p.potential);
    }
  }
  return c;
}

}  // namespace

TrajectoryCost trajectory_cost(const PolyTrajectory& traj, const ObstacleWorld& world,
                               const TrajectoryCostParams& p) {
  TrajectoryCost c;
  c.dynamic = dynamic_cost(traj);
  const SampledCost s = sampled_cost(traj, world, p, !world.empty(), p.info != nullptr);
  c.collision = s.collision;
  c.information = s.information;
  c.samples = s.samples;
  c.out_of_field_samples = s.out_of_field;
  c.total = p.mu_d * c.dynamic + p.mu_c * c.collision + p.mu_v * c.information;
  return c;
}

// --- fitting ---------------------------------------------------------------

PolyTrajectory fit_initial_trajectory(const BoundaryState& start,
                                      const BoundaryState& end, double duration,
                                      int segments) {
  if (segments < 1) throw Error(ErrorCode::InvalidArgument, "need at least one segment");
  PolyTrajectory traj;
  traj.durations.assign(segments, duration / segments);
  check_durations(traj.durations);
  const double yaw0 = start.state.yaw;
  const double yaw1 = yaw0 + wrap_angle(end.state.yaw - yaw0);

  // A trajectory whose interior knots are zero; TrajectoryProblem then
  // supplies the optimal interior knots.
  for (int a = 0; a < kTrajAxes; ++a) {
    traj.coeffs[a] = Eigen::MatrixXd::Zero(segments, kPolyCoeffs);
  }
  std::vector<Mat8> maps;
  for (double d : traj.durations) maps.push_back(endpoint_map(d));
  for (int a = 0; a < kTrajAxes; ++a) {
    const auto d0 = boundary_derivs(start, a, yaw0);
    const auto d1 = boundary_derivs(end, a, yaw1);
    const int n = kKnotDerivs * (segments + 1);
    Eigen::VectorXd knots = Eigen::VectorXd::Zero(n);
    for (int k = 0; k < kKnotDerivs; ++k) {
      knots[k] = d0[k];
      knots[n - kKnotDerivs + k] = d1[k];
    }
    if (segments > 1) {
      const Eigen::MatrixXd h = knot_cost(maps, traj.durations, kCostDerivative[a]);
      const int f = n - 2 * kKnotDerivs;
      Eigen::VectorXd fixed(2 * kKnotDerivs);
      fixed << knots.head(kKnotDerivs), knots.tail(kKnotDerivs);
      Eigen::MatrixXd h_fp(f, 2 * kKnotDerivs);
      h_fp << h.block(kKnotDerivs, 0, f, kKnotDerivs),
          h.block(kKnotDerivs, n - kKnotDerivs, f, kKnotDerivs);
      Eigen::LDLT<Eigen::MatrixXd> ldlt(h.block(kKnotDerivs, kKnotDerivs, f, f));
      if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
          ldlt.vectorD().minCoeff() <= 0.0) {
        throw Error(ErrorCode::SingularCostMatrix, "free-knot cost matrix is singular");
      }
      knots.segment(kKnotDerivs, f) = -ldlt.solve(h_fp * fixed);
    }
    for (int s = 0; s < segments; ++s) {
      traj.coeffs[a].row(s) =
          (maps[s] * knots.segment<kPolyCoeffs>(kKnotDerivs * s)).transpose();
    }
  }
  return traj;
}

// --- optimization problem --------------------------------------------------

TrajectoryProblem::TrajectoryProblem(const PolyTrajectory& init,
                                     const ObstacleWorld& world,
                                     const TrajectoryCostParams& params)
    : durations_(init.durations), world_(world), params_(params) {
  check_durations(durations_);
  const int s = static_cast<int>(durations_.size());
  for (double d : durations_) maps_.push_back(endpoint_map(d));
  const int n = kKnotDerivs * (s + 1);
  const int f = n - 2 * kKnotDerivs;
  x0_.resize(kTrajAxes * f);
  const double total = init.duration();
  for (int a = 0; a < kTrajAxes; ++a) {
    const Eigen::MatrixXd h = knot_cost(maps_, durations_, kCostDerivative[a]);
    h_ff_[a] = h.block(kKnotDerivs, kKnotDerivs, f, f);
    h_fp_[a].resize(f, 2 * kKnotDerivs);
    h_fp_[a] << h.block(kKnotDerivs, 0, f, kKnotDerivs),
        h.block(kKnotDerivs, n - kKnotDerivs, f, kKnotDerivs);
    h_pp_[a].resize(2 * kKnotDerivs, 2 * kKnotDerivs);
    h_pp_[a] << h.block(0, 0, kKnotDerivs, kKnotDerivs),
        h.block(0, n - kKnotDerivs, kKnotDerivs, kKnotDerivs),
        h.block(n - kKnotDerivs, 0, kKnotDerivs, kKnotDerivs),
        h.block(n - kKnotDerivs, n - kKnotDerivs, kKnotDerivs, kKnotDerivs);
    fixed_[a].resize(2 * kKnotDerivs);
    for (int k = 0; k < kKnotDerivs; ++k) {
      fixed_[a][k] = init.eval(a, 0.0, k);
      fixed_[a][kKnotDerivs + k] = init.eval(a, total, k);
    }
    for (int knot = 1; knot < s; ++knot) {
      for (int k = 0; k < kKnotDerivs; ++k) {
        // Start of segment `knot`: coefficient c_k times k!.
        x0_[a * f + (knot - 1) * kKnotDerivs + k] =
            falling(k, k) * init.coeffs[a](knot, k);
      }
    }
  }
}

PolyTrajectory TrajectoryProblem::trajectory(const Eigen::VectorXd& x) const {
  PolyTrajectory traj;
  traj.durations = durations_;
  const int s = static_cast<int>(durations_.size());
  const int f = kKnotDerivs * (s - 1);
  Eigen::VectorXd knots(kKnotDerivs * (s + 1));
  for (int a = 0; a < kTrajAxes; ++a) {
    knots << fixed_[a].head(kKnotDerivs), x.segment(a * f, f), fixed_[a].tail(kKnotDerivs);
    traj.coeffs[a].resize(s, kPolyCoeffs);
    for (int k = 0; k < s; ++k) {
      traj.coeffs[a].row(k) =
          (maps_[k] * knots.segment<kPolyCoeffs>(kKnotDerivs * k)).transpose();
    }
  }
  return traj;
}

double TrajectoryProblem::dynamic(const Eigen::VectorXd& x) const {
  const int f = static_cast<int>(h_ff_[0].rows());
  double j = 0.0;
  for (int a = 0; a < kTrajAxes; ++a) {
    const auto xa = x.segment(a * f, f);
    j += xa.dot(h_ff_[a] * xa) + 2.0 * xa.dot(h_fp_[a] * fixed_[a]) +
         fixed_[a].dot(h_pp_[a] * fixed_[a]);
  }
  return j;
}

Eigen::VectorXd TrajectoryProblem::dynamic_gradient(const Eigen::VectorXd& x) const {
  const int f = static_cast<int>(h_ff_[0].rows());
  Eigen::VectorXd g(x.size());
  for (int a = 0; a < kTrajAxes; ++a) {
    g.segment(a * f, f) = 2.0 * (h_ff_[a] * x.segment(a * f, f) + h_fp_[a] * fixed_[a]);
  }
  return g;
}

double TrajectoryProblem::sampled_terms(const Eigen::VectorXd& x, int first,
                                       int last) const {
  const bool want_collision = params_.mu_c != 0.0 && !world_.empty();
  const bool want_info = params_.mu_v != 0.0 && params_.info != nullptr;
  if (!want_collision && !want_info) return 0.0;
  const SampledCost c = sampled_cost(trajectory(x), world_, params_, want_collision,
                                     want_info, first, last);
  return params_.mu_c * c.collision + params_.mu_v * c.information;
}

TrajectoryCost TrajectoryProblem::cost(const Eigen::VectorXd& x) const {
  const PolyTrajectory traj = trajectory(x);
  TrajectoryCost c;
  c.dynamic = dynamic(x);
  const SampledCost s = sampled_cost(traj, world_, params_, !world_.empty(),
                                     params_.info != nullptr);
  c.collision = s.collision;
  c.information = s.information;
  c.samples = s.samples;
  c.out_of_field_samples = s.out_of_field;
  c.total = params_.mu_d * c.dynamic + params_.mu_c * c.collision +
            params_.mu_v * c.information;
  return c;
}

Eigen::VectorXd TrajectoryProblem::gradient(const Eigen::VectorXd& x, double h,
                                            int* evaluations) const {
  Eigen::VectorXd g = params_.mu_d * dynamic_gradient(x);
  const bool active = (params_.mu_c != 0.0 && !world_.empty()) ||
                      (params_.mu_v != 0.0 && params_.info != nullptr);
  if (!active) return g;
  // A knot only shapes the two segments it joins.
  const int f = static_cast<int>(h_ff_[0].rows());
  Eigen::VectorXd xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const int knot = static_cast<int>(i % f) / kKnotDerivs + 1;
    xp[i] = x[i] + h;
    const double fp = sampled_terms(xp, knot - 1, knot);
    xp[i] = x[i] - h;
    const double fm = sampled_terms(xp, knot - 1, knot);
    xp[i] = x[i];
    g[i] += (fp - fm) / (2.0 * h);
  }
  if (evaluations) *evaluations += static_cast<int>(2 * x.size());
  return g;
}

Eigen::VectorXd TrajectoryProblem::min_derivative_solution() const {
  const int f = static_cast<int>(h_ff_[0].rows());
  Eigen::VectorXd x(kTrajAxes * f);
  for (int a = 0; a < kTrajAxes; ++a) {
    if (f == 0) continue;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(h_ff_[a]);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
      throw Error(ErrorCode::SingularCostMatrix, "free-knot cost matrix is singular");
    }
    x.segment(a * f, f) = -ldlt.solve(h_fp_[a] * fixed_[a]);
  }
  return x;
}

// --- optimizer -------------------------------------------------------------

OptimizeResult optimize_trajectory(const PolyTrajectory& init, const ObstacleWorld& world,
                                   const TrajectoryCostParams& params,
                                   const OptimizeParams& options) {
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(clock::now() - t0).count(); };

  const TrajectoryProblem problem(init, world, params);
  OptimizeResult result;
  Eigen::VectorXd x = problem.initial();
  result.initial = problem.cost(x);
  double fx = result.initial.total;
  result.cost_evaluations = 1;
  result.log.push_back({0, fx, elapsed()});

  if (problem.size() > 0) {
    Eigen::VectorXd g = problem.gradient(x, options.fd_step, &result.cost_evaluations);
    std::deque<std::pair<Eigen::VectorXd, Eigen::VectorXd>> memory;
    for (int it = 0; it < options.max_iters; ++it) {
      if (g.norm() < options.grad_tol) break;
      // Two-loop recursion.
      Eigen::VectorXd q = g;
      std::vector<double> alpha(memory.size());
      for (int k = static_cast<int>(memory.size()) - 1; k >= 0; --k) {
        const auto& [s, y] = memory[k];
        alpha[k] = s.dot(q) / y.dot(s);
        q -= alpha[k] * y;
      }
      if (!memory.empty()) {
        const auto& [s, y] = memory.back();
        q *= s.dot(y) / y.dot(y);
      } else {
        q /= std::max(1.0, g.norm());
      }
      for (std::size_t k = 0; k < memory.size(); ++k) {
        const auto& [s, y] = memory[k];
        q += s * (alpha[k] - y.dot(q) / y.dot(s));
      }
      Eigen::VectorXd d = -q;
      double slope = g.dot(d);
      if (!(slope < 0.0)) {
        memory.clear();
        d = -g / std::max(1.0, g.norm());
        slope = g.dot(d);
      }

      double step = 1.0;
      double fn = std::numeric_limits<double>::infinity();
      Eigen::VectorXd xn;
      for (int ls = 0; ls < 40; ++ls) {
        xn = x + step * d;
        fn = problem.total(xn);
        ++result.cost_evaluations;
        if (fn <= fx + 1e-4 * step * slope) break;
        step *= 0.5;
      }
      if (!(fn < fx)) {
        if (memory.empty()) break;
        memory.clear();
        continue;
      }
      const Eigen::VectorXd gn = problem.gradient(xn, options.fd_step, &result.cost_evaluations);
      Eigen::VectorXd s = xn - x;
      Eigen::VectorXd y = gn - g;
      if (s.dot(y) > 1e-12 * s.norm() * y.norm()) {
        memory.emplace_back(std::move(s), std::move(y));
        if (static_cast<int>(memory.size()) > options.lbfgs_memory) memory.pop_front();
      }
      x = xn;
      fx = fn;
      g = gn;
      ++result.iterations;
      result.log.push_back({result.iterations, fx, elapsed()});
    }
  }
  result.trajectory = problem.trajectory(x);
  result.final_cost = problem.cost(x);
  result.elapsed = elapsed();
  return result;
}

}  // namespace fif
