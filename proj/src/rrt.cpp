#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "fif/error.hpp"
#include "fif/planners.hpp"

namespace fif {

Pose state_pose(const PlanState& state) {
  return Pose::from_position_yaw(state.position, state.yaw);
}

bool state_valid(const PlanState& state, const ObstacleWorld& world,
                 const ValidityConfig& cfg) {
  if (obstacle_distance(world, state.position) < cfg.min_clearance) {
    return false;
  }
  if (!cfg.gated()) return true;
  try {
    return cfg.info->metric(state_pose(state), cfg.info_metric) >=
           cfg.info_threshold;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::OutOfField) return false;
    throw;
  }
}

namespace {

// Difference of two wrapped angles, wrapped again without fmod.
double yaw_diff(double from, double to) {
  double d = to - from;
  if (d > std::numbers::pi) {
    d -= 2.0 * std::numbers::pi;
  } else if (d <= -std::numbers::pi) {
    d += 2.0 * std::numbers::pi;
  }
  return d;
}

}  // namespace

double state_distance(const PlanState& a, const PlanState& b,
                      const RrtParams& params) {
  return params.w_pos * (a.position - b.position).norm() +
         params.w_yaw * std::abs(yaw_diff(a.yaw, b.yaw));
}

const std::vector<PlanState>& RrtResult::path_or_throw() const {
  if (!found) throw Error(ErrorCode::NoPath, "no valid path found");
  return path;
}

namespace {

PlanState interpolate(const PlanState& a, const PlanState& b, double t) {
  return {a.position + t * (b.position - a.position),
          wrap_angle(a.yaw + t * yaw_diff(a.yaw, b.yaw))};
}

// Uniform grid over position and (wrapped) yaw. Cells keep a copy of each
// state so distance scans stay inside the cell arrays.
class SpatialIndex {
 public:
  struct Entry {
    PlanState state;
    int id;
  };
  using Cell = std::array<int, 4>;  // x, y, z, yaw

  SpatialIndex(const PlanBounds& bounds, const RrtParams& params)
      : min_(bounds.min),
        extent_(bounds.max - bounds.min),
        w_pos_(params.w_pos),
        w_yaw_(params.w_yaw) {
    cell_ = params.max_step;
    while (cells_for(cell_) > kMaxCells) cell_ *= 2.0;
    resize();
  }

  // Smallest cost separating a state from anything outside a k-shell.
  double shell_cost() const {
    return std::min(w_pos_ * cell_, yaw_cells_ > 1 ? w_yaw_ * yaw_cell_ : 1e300);
  }

  // Halves the cell size once the cells get crowded.
  void maybe_refine(const std::vector<PlanState>& states) {
    if (states.size() < kPerCell * cells_.size()) return;
    if (cells_for(0.5 * cell_) > kMaxCells) return;
    cell_ *= 0.5;
    resize();
    for (std::size_t id = 0; id < states.size(); ++id) {
      insert(static_cast<int>(id), states[id]);
    }
  }

  Cell cell_of(const PlanState& s) const {
    Cell c{};
    for (int a = 0; a < 3; ++a) {
      c[a] = std::clamp(static_cast<int>(std::floor((s.position[a] - min_[a]) / cell_)),
                        0, dims_[a] - 1);
    }
    c[3] = std::clamp(static_cast<int>(std::floor((s.yaw + std::numbers::pi) / yaw_cell_)),
                      0, yaw_cells_ - 1);
    return c;
  }

  void insert(int id, const PlanState& s) {
    cells_[linear(cell_of(s))].push_back({s, id});
  }

  // Calls f(entry) for cells overlapping the box |dp_axis| <= r_pos,
  // |dyaw| <= r_yaw around s.
  template <typename F>
  void visit_range(const PlanState& s, double r_pos, double r_yaw, F&& f) const {
    std::array<int, 3> lo{};
    std::array<int, 3> hi{};
    for (int a = 0; a < 3; ++a) {
      lo[a] = std::max(0, static_cast<int>(std::floor((s.position[a] - r_pos - min_[a]) / cell_)));
      hi[a] = std::min(dims_[a] - 1,
                       static_cast<int>(std::floor((s.position[a] + r_pos - min_[a]) / cell_)));
    }
    const double yaw = s.yaw + std::numbers::pi;
    int y0 = static_cast<int>(std::floor((yaw - r_yaw) / yaw_cell_));
    int y1 = static_cast<int>(std::floor((yaw + r_yaw) / yaw_cell_));
    if (y1 - y0 + 1 >= yaw_cells_) {
      y0 = 0;
      y1 = yaw_cells_ - 1;
    }
    for (int j = y0; j <= y1; ++j) {
      const int yc = (j % yaw_cells_ + yaw_cells_) % yaw_cells_;
      for (int z = lo[2]; z <= hi[2]; ++z) {
        for (int y = lo[1]; y <= hi[1]; ++y) visit_row(yc, z, y, lo[0], hi[0], f);
      }
    }
  }

 private:
  static constexpr double kMaxCells = 4e6;
  static constexpr std::size_t kPerCell = 8;

  template <typename F>
  void visit_row(int yaw, int z, int y, int x0, int x1, F&& f) const {
    x0 = std::max(x0, 0);
    x1 = std::min(x1, dims_[0] - 1);
    const std::size_t row =
        ((static_cast<std::size_t>(yaw) * dims_[2] + z) * dims_[1] + y) * dims_[0];
    for (int x = x0; x <= x1; ++x) {
      for (const Entry& e : cells_[row + x]) f(e);
    }
  }

  int yaw_cells_for(double cell) const {
    if (w_yaw_ <= 0.0) return 1;
    return std::max(1, static_cast<int>(std::floor(
                           2.0 * std::numbers::pi * w_yaw_ / (w_pos_ * cell))));
  }

  double cells_for(double cell) const {
    return (extent_ / cell).array().ceil().max(1.0).prod() * yaw_cells_for(cell);
  }

  void resize() {
    for (int a = 0; a < 3; ++a) {
      dims_[a] = std::max(1, static_cast<int>(std::ceil(extent_[a] / cell_)));
    }
    yaw_cells_ = yaw_cells_for(cell_);
    yaw_cell_ = 2.0 * std::numbers::pi / yaw_cells_;
    cells_.assign(static_cast<std::size_t>(dims_[0]) * dims_[1] * dims_[2] * yaw_cells_, {});
  }

  std::size_t linear(const Cell& c) const {
    return ((static_cast<std::size_t>(c[3]) * dims_[2] + c[2]) * dims_[1] + c[1]) * dims_[0] +
           c[0];
  }

  Vec3 min_;
  Vec3 extent_;
  double w_pos_;
  double w_yaw_;
  double cell_ = 1.0;
  double yaw_cell_ = 2.0 * std::numbers::pi;
  int yaw_cells_ = 1;
  std::array<int, 3> dims_{};
  std::vector<std::vector<Entry>> cells_;
};

class Rrt {
 public:
  Rrt(const PlanState& start, const PlanState& goal, const PlanBounds& bounds,
      const ObstacleWorld& world, const ValidityConfig& cfg,
      const RrtParams& params)
      : goal_(goal),
        bounds_(bounds),
        world_(world),
        cfg_(cfg),
        p_(params),
        index_(bounds, params),
        rng_(params.seed) {
    add_vertex(start, -1, 0.0);
  }

  RrtResult run() {
    using clock = std::chrono::steady_clock;
    const auto t0 = clock::now();
    RrtResult result;
    auto elapsed = [&] {
      return std::chrono::duration<double>(clock::now() - t0).count();
    };
    double next_log = 0.0;
    const bool endpoints_ok = check(states_[0]) && check(goal_);

    std::int64_t it = 0;
    while (endpoints_ok) {
      const double now = elapsed();
      if (now >= next_log) {
        result.growth.push_back(sample(now));
        next_log += p_.log_interval;
      }
      if (now >= p_.time_budget) break;
      if (p_.max_iterations >= 0 && it >= p_.max_iterations) break;
      if (p_.stop_at_first_solution && goal_id_ >= 0) break;
      ++it;
      step();
    }
    result.elapsed = elapsed();
    result.growth.push_back(sample(result.elapsed));
    result.iterations = it;
    result.vertices = static_cast<std::int64_t>(states_.size());
    result.edges = result.vertices - 1;
    result.validity_checks = checks_;
    if (goal_id_ >= 0) {
      result.found = true;
      result.cost = cost_[goal_id_];
      for (int v = goal_id_; v >= 0; v = parent_[v]) result.path.push_back(states_[v]);
      std::reverse(result.path.begin(), result.path.end());
      result.tree_cost = result.cost;
      if (p_.shortcut) {
        result.path = shortcut(result.path);
        result.cost = 0.0;
        for (std::size_t i = 1; i < result.path.size(); ++i) {
          result.cost += state_distance(result.path[i - 1], result.path[i], p_);
        }
      }
      result.validity_checks = checks_;
    }
    return result;
  }

  // Greedy shortcutting: jump to the furthest later state reachable by a
  // valid straight edge, then split long edges back into bounded steps.
  std::vector<PlanState> shortcut(const std::vector<PlanState>& path) {
    std::vector<PlanState> out{path.front()};
    std::size_t i = 0;
    while (i + 1 < path.size()) {
      std::size_t j = path.size() - 1;
      while (j > i + 1 && !edge_valid(path[i], path[j])) --j;
      const double len = (path[j].position - path[i].position).norm();
      const double dyaw = std::abs(yaw_diff(path[i].yaw, path[j].yaw));
      const int n = std::max(1, static_cast<int>(std::ceil(
                                    std::max(len / p_.max_step, dyaw / p_.max_yaw_step))));
      for (int k = 1; k < n; ++k) {
        out.push_back(interpolate(path[i], path[j], static_cast<double>(k) / n));
      }
      out.push_back(path[j]);
      i = j;
    }
    return out;
  }

 private:
  GrowthSample sample(double t) const {
    return {t, static_cast<std::int64_t>(states_.size()),
            static_cast<std::int64_t>(states_.size()) - 1, checks_,
            goal_id_ >= 0 ? cost_[goal_id_]
                          : std::numeric_limits<double>::infinity()};
  }

  bool check(const PlanState& s) {
    ++checks_;
    return state_valid(s, world_, cfg_);
  }

  // Interior points only; both endpoints are already known to be valid.
  bool edge_valid(const PlanState& a, const PlanState& b) {
    const double len = (b.position - a.position).norm();
    const double dyaw = std::abs(yaw_diff(a.yaw, b.yaw));
    const int n = std::max(1, static_cast<int>(std::ceil(std::max(
                                  len / p_.edge_resolution,
                                  dyaw / p_.edge_yaw_resolution))));
    for (int i = 1; i < n; ++i) {
      if (!check(interpolate(a, b, static_cast<double>(i) / n))) return false;
    }
    return true;
  }

  int add_vertex(const PlanState& s, int parent, double cost) {
    const int id = static_cast<int>(states_.size());
    states_.push_back(s);
    parent_.push_back(parent);
    cost_.push_back(cost);
    children_.emplace_back();
    if (parent >= 0) children_[parent].push_back(id);
    index_.insert(id, s);
    index_.maybe_refine(states_);
    return id;
  }

  void reparent(int v, int new_parent, double new_cost) {
    auto& siblings = children_[parent_[v]];
    siblings.erase(std::find(siblings.begin(), siblings.end(), v));
    parent_[v] = new_parent;
    children_[new_parent].push_back(v);
    const double delta = new_cost - cost_[v];
    std::vector<int> stack{v};
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      cost_[u] += delta;
      for (int c : children_[u]) stack.push_back(c);
    }
  }

  PlanState random_state() {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    if (u(rng_) < p_.goal_bias) return goal_;
    PlanState s;
    for (int a = 0; a < 3; ++a) {
      s.position[a] = bounds_.min[a] + u(rng_) * (bounds_.max[a] - bounds_.min[a]);
    }
    s.yaw = wrap_angle(std::numbers::pi * (2.0 * u(rng_) - 1.0));
    return s;
  }

  // Grows a search box until the best hit lies inside it.
  int nearest(const PlanState& s) const {
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    const double everything =
        p_.w_pos * (bounds_.max - bounds_.min).norm() + p_.w_yaw * std::numbers::pi;
    for (double r = 0.5 * index_.shell_cost();; r *= 2.0) {
      index_.visit_range(s, r / p_.w_pos, p_.w_yaw > 0.0 ? r / p_.w_yaw : 4.0,
                         [&](const SpatialIndex::Entry& e) {
                           const double d = state_distance(e.state, s, p_);
                           if (d < best_d) {
                             best_d = d;
                             best = e.id;
                           }
                         });
      if ((best >= 0 && best_d <= r) || r > everything) break;
    }
    return best;
  }

  std::vector<int> near(const PlanState& s, double radius) const {
    std::vector<int> out;
    const double r_pos = radius / p_.w_pos;
    const double r_pos2 = r_pos * r_pos;
    index_.visit_range(s, r_pos, p_.w_yaw > 0.0 ? radius / p_.w_yaw : 4.0,
                     [&](const SpatialIndex::Entry& e) {
                       const double d2 = (e.state.position - s.position).squaredNorm();
                       if (d2 > r_pos2) return;
                       const double d = p_.w_pos * std::sqrt(d2) +
                                        p_.w_yaw * std::abs(yaw_diff(e.state.yaw, s.yaw));
                       if (d <= radius) out.push_back(e.id);
                     });
    return out;
  }

  PlanState steer(const PlanState& from, const PlanState& to) const {
    const double len = (to.position - from.position).norm();
    const double dyaw = std::abs(yaw_diff(from.yaw, to.yaw));
    double t = 1.0;
    if (len > p_.max_step) t = std::min(t, p_.max_step / len);
    if (dyaw > p_.max_yaw_step) t = std::min(t, p_.max_yaw_step / dyaw);
    return interpolate(from, to, t);
  }

  void step() {
    const PlanState target = random_state();
    const int nn = nearest(target);
    const PlanState x_new = steer(states_[nn], target);
    if (state_distance(states_[nn], x_new, p_) < 1e-12) return;
    if (!check(x_new)) return;

    const double n = static_cast<double>(states_.size());
    const double radius = std::min(
        p_.rewire_radius, p_.rewire_gamma * std::pow(std::log(n + 1.0) / (n + 1.0), 0.25));
    std::vector<int> candidates = near(x_new, radius);
    if (std::find(candidates.begin(), candidates.end(), nn) == candidates.end()) {
      candidates.push_back(nn);
    }
    std::vector<std::pair<double, int>> order;
    order.reserve(candidates.size());
    for (int v : candidates) {
      order.emplace_back(cost_[v] + state_distance(states_[v], x_new, p_), v);
    }
    std::sort(order.begin(), order.end());
    int parent = -1;
    double cost = 0.0;
    for (const auto& [c, v] : order) {
      if (edge_valid(states_[v], x_new)) {
        parent = v;
        cost = c;
        break;
      }
    }
    if (parent < 0) return;
    const int id = add_vertex(x_new, parent, cost);

    for (int v : candidates) {
      if (v == parent || v == 0) continue;
      const double c = cost + state_distance(x_new, states_[v], p_);
      if (c + 1e-12 < cost_[v] && edge_valid(x_new, states_[v])) reparent(v, id, c);
    }

    if ((goal_.position - x_new.position).norm() <= p_.max_step &&
        std::abs(yaw_diff(x_new.yaw, goal_.yaw)) <= p_.max_yaw_step) {
      const double c = cost + state_distance(x_new, goal_, p_);
      if (goal_id_ < 0) {
        if (edge_valid(x_new, goal_)) goal_id_ = add_vertex(goal_, id, c);
      } else if (c + 1e-12 < cost_[goal_id_] && edge_valid(x_new, goal_)) {
        reparent(goal_id_, id, c);
      }
    }
  }

  PlanState goal_;
  PlanBounds bounds_;
  const ObstacleWorld& world_;
  const ValidityConfig& cfg_;
  RrtParams p_;
  SpatialIndex index_;
  std::mt19937_64 rng_;

  std::vector<PlanState> states_;
  std::vector<int> parent_;
  std::vector<double> cost_;
  std::vector<std::vector<int>> children_;
  int goal_id_ = -1;
  std::int64_t checks_ = 0;
};

}  // namespace

RrtResult rrt_plan(const PlanState& start, const PlanState& goal,
                   const PlanBounds& bounds, const ObstacleWorld& world,
                   const ValidityConfig& cfg, const RrtParams& params) {
  if (!(params.w_pos > 0.0) || params.w_yaw < 0.0 || !(params.max_step > 0.0) ||
      !(params.max_yaw_step > 0.0) || !(params.edge_resolution > 0.0) ||
      !(params.edge_yaw_resolution > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "invalid RRT parameters");
  }
  if (!(bounds.min.array() < bounds.max.array()).all()) {
    throw Error(ErrorCode::InvalidArgument, "planning bounds are empty");
  }
  if (cfg.min_clearance < 0.0) {
    throw Error(ErrorCode::InvalidArgument, "min_clearance must be >= 0");
  }
  Rrt rrt(start, goal, bounds, world, cfg, params);
  return rrt.run();
}

std::vector<PlanState> densify_path(std::span<const PlanState> path,
                                    double spacing) {
  if (!(spacing > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "spacing must be positive");
  }
  std::vector<PlanState> out;
  if (path.empty()) return out;
  out.push_back(path.front());
  for (std::size_t i = 1; i < path.size(); ++i) {
    const double len = (path[i].position - path[i - 1].position).norm();
    const double dyaw = std::abs(yaw_diff(path[i - 1].yaw, path[i].yaw));
    const int n = std::max(1, static_cast<int>(std::ceil(
                                  len > 1e-12 ? len / spacing : dyaw / 0.1)));
    for (int k = 1; k <= n; ++k) {
      out.push_back(interpolate(path[i - 1], path[i], static_cast<double>(k) / n));
    }
  }
  return out;
}

}  // namespace fif
