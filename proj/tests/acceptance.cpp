// Acceptance checks. Prints one PASS/FAIL line per criterion; pass criterion
// numbers as arguments to run a subset.
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <numbers>
#include <set>
#include <string>
#include <thread>

#include "fif/error.hpp"
#include "fif/experiments.hpp"
#include "fif/scene.hpp"
#include "support.hpp"

using namespace fif;
using std::numbers::pi;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

int threads() { return std::max(1u, std::thread::hardware_concurrency()); }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<Landmark> desk_scene(int n, std::uint64_t seed = 1) {
  return generate_uniform_scene(n, Vec3(10, 10, 5), seed);
}

Vec3 random_inner(std::mt19937_64& rng, const GridConfig& g) {
  const Vec3 lo = g.origin + Vec3::Constant(0.5 * g.voxel_size);
  return test::random_in_box(rng, lo, lo + g.extent() - Vec3::Constant(g.voxel_size));
}

VoxelIndex random_voxel(std::mt19937_64& rng, const GridConfig& g) {
  return {int(rng() % g.dims[0]), int(rng() % g.dims[1]), int(rng() % g.dims[2])};
}

double array_rel_diff(const double* a, const double* b, int n) {
  double d = 0, s = 0;
  for (int i = 0; i < n; ++i) {
    d += (a[i] - b[i]) * (a[i] - b[i]);
    s += b[i] * b[i];
  }
  return s > 0 ? std::sqrt(d / s) : std::sqrt(d);
}

// Largest relative difference between the stored factors of two fields;
// +inf when the voxel sets differ.
double field_diff(const Field& a, const Field& b) {
  const auto ia = a.voxel_indices(), ib = b.voxel_indices();
  if (ia != ib) return INFINITY;
  double worst = 0;
  for (const VoxelIndex& v : ia) worst = std::max(worst, array_rel_diff(a.factor(v), b.factor(v), a.stride()));
  return worst;
}

Outcome constant_time_query() {
  const auto t0 = std::chrono::steady_clock::now();
  BenchConfig c;
  c.grid = default_grid();
  c.models = {"gp:70"};
  c.camera = default_camera();
  c.threads = threads();
  c.min_range = 0.5;
  std::vector<double> field, pc;
  for (int n : {100, 1000, 10000}) {
    const Report r = bench_timing(desk_scene(n), c);
    field.push_back(r.value("gp:70/info/fim/median"));
    pc.push_back(r.value("pc/fim/median"));
  }
  const double spread = *std::max_element(field.begin(), field.end()) / *std::min_element(field.begin(), field.end());
  const double growth = pc[2] / pc[0];
  const double speedup = pc[1] / field[1];
  const double elapsed = seconds_since(t0);
  return {spread < 2.0 && growth >= 50.0 && speedup >= 10.0 && elapsed < 300.0,
          fmt("field FIM median %.2f/%.2f/%.2f us (spread x%.2f < 2), point cloud grows x%.0f >= 50, "
              "field x%.1f faster at 1000 (>= 10), %.0f s < 300 s",
              field[0] / 1e3, field[1] / 1e3, field[2] / 1e3, spread, growth, speedup, elapsed)};
}

Outcome fim_accuracy() {
  BenchConfig c;
  c.grid = default_grid();
  c.models = {"quad:0.5", "gp:30", "gp:70"};
  c.camera = default_camera();
  c.threads = threads();
  c.min_range = 0.5;
  const Report r = bench_accuracy(desk_scene(1000), c);
  const double q = r.value("quad:0.5/centers/mean");
  const double g30 = r.value("gp:30/centers/mean");
  const double g70 = r.value("gp:70/centers/mean");
  return {g70 <= 20.0 && q >= 30.0 && g70 <= g30,
          fmt("mean e_FIM gp:70 %.2f%% (<= 20), quad:0.5 %.2f%% (>= 30), gp:30 %.2f%% >= gp:70", g70, q, g30)};
}

Outcome rotation_invariance() {
  std::mt19937_64 rng(3);
  double worst = 0;
  for (int l = 0; l < 10; ++l) {
    const Vec3 t = test::random_in_box(rng, Vec3(-2, -2, -2), Vec3(2, 2, 2));
    Landmark lm;
    lm.position = test::random_in_box(rng, Vec3(-5, -5, -5), Vec3(5, 5, 5));
    const Fim ref = exact_pose_fim(Pose(Mat3::Identity(), t), std::vector<Landmark>{}, default_camera());
    (void)ref;
    Fim first;
    for (int i = 0; i < 100; ++i) {
      const Mat36 j = bearing_jacobian(Pose(test::random_rotation(rng), t), lm);
      const Fim f = j.transpose() * j;
      if (i == 0) first = f;
      worst = std::max(worst, test::rel_diff(f, first));
      worst = std::max(worst, test::rel_diff(f, landmark_fim(t, lm)));
    }
  }
  return {worst < 1e-9, fmt("max relative difference %.2e over 10 landmarks x 100 rotations (< 1e-9)", worst)};
}

Outcome factorization_exactness() {
  const auto ls = desk_scene(1000, 4);
  std::mt19937_64 rng(5);
  double worst = 0;
  for (const char* name : {"quad:0.5", "gp:70"}) {
    const VisibilityModelPtr m = parse_model(name, pi / 4);
    const Field f = Field::build(ls, default_grid(), m, FactorKind::Info, always_matchable(), {1.0, threads()});
    for (int i = 0; i < 100; ++i) {
      const Pose pose(test::random_rotation(rng), f.voxel_center(random_voxel(rng, default_grid())));
      Fim direct = Fim::Zero();
      for (const Landmark& l : ls)
        direct += m->evaluate(pose.rotation(), pose.translation(), l.position) * landmark_fim(pose.translation(), l);
      worst = std::max(worst, test::rel_diff(f.query_fim(pose, QueryMode::Nearest), direct));
    }
  }
  return {worst < 1e-9, fmt("max relative difference %.2e, quad:0.5 and gp:70, 200 voxel-center poses (< 1e-9)", worst)};
}

Outcome trace_consistency() {
  const auto ls = desk_scene(1000, 6);
  const VisibilityModelPtr m = parse_model("gp:70", pi / 4);
  const Field info = Field::build(ls, default_grid(), m, FactorKind::Info, nullptr, {1.0, threads()});
  const Field tr = Field::build(ls, default_grid(), m, FactorKind::Trace, nullptr, {1.0, threads()});
  std::mt19937_64 rng(7);
  double worst = 0;
  for (int i = 0; i < 1000; ++i) {
    const Pose pose(test::random_rotation(rng), random_inner(rng, default_grid()));
    const auto mode = i % 2 ? QueryMode::Trilinear : QueryMode::Nearest;
    worst = std::max(worst, test::rel_diff(tr.query_metric(pose, MetricKind::Trace, mode), info.query_fim(pose, mode).trace()));
  }
  return {worst < 1e-9, fmt("max relative difference %.2e over 1000 poses (< 1e-9)", worst)};
}

Outcome incremental_update() {
  const auto ls = desk_scene(1000, 8);
  const VisibilityModelPtr m = parse_model("gp:70", pi / 4);
  const std::vector<Landmark> rest(ls.begin(), ls.end() - 100);
  const Field full = Field::build(ls, default_grid(), m, FactorKind::Info, nullptr, {1.0, threads()});
  Field inc = Field::build(rest, default_grid(), m, FactorKind::Info, nullptr, {1.0, threads()});
  for (auto it = ls.end() - 100; it != ls.end(); ++it) inc.add_landmark(*it);
  const double d_add = field_diff(inc, full);
  Field round = full;
  const auto extra = desk_scene(100, 9);
  for (const Landmark& l : extra) round.add_landmark(l);
  for (const Landmark& l : extra) round.remove_landmark(l);
  const double d_rt = field_diff(round, full);
  return {d_add < 1e-9 && d_rt < 1e-9,
          fmt("build(S\\P)+add(P) vs build(S) %.2e, add-then-remove %.2e, |P| = 100 (< 1e-9)", d_add, d_rt)};
}

Outcome memory_accounting() {
  const auto ls = desk_scene(300, 10);
  const std::string path = (std::filesystem::temp_directory_path() / "fif_acceptance_mem.fif").string();
  bool ok = true;
  std::string detail;
  for (const auto& [name, expect] : {std::pair{"quad:0.5", 360}, std::pair{"gp:50", 1800}}) {
    const VisibilityModelPtr m = parse_model(name, pi / 4);
    for (auto kind : {FactorKind::Info, FactorKind::Trace}) {
      const Field f = Field::build(ls, default_grid(), m, kind, nullptr, {1.0, threads()});
      const MemoryStats s = f.memory_stats();
      const std::uint64_t want = kind == FactorKind::Info ? expect : expect / 36;
      f.save(path);
      const std::uint64_t file = std::filesystem::file_size(path);
      const bool match = s.scalars_per_voxel == want && s.bytes_factors == s.voxel_count * want * 8 &&
                         file == f.header_bytes() + s.voxel_count * (12 + want * 8);
      ok = ok && match;
      detail += fmt("%s%s/%s %llu", detail.empty() ? "" : ", ", name, to_string(kind),
                    static_cast<unsigned long long>(s.scalars_per_voxel));
    }
  }
  std::filesystem::remove(path);
  return {ok, "scalars per voxel " + detail + "; factor bytes and file size agree"};
}

Outcome potential_cost() {
  double cont = 0, grad = 0;
  std::mt19937_64 rng(11);
  for (double eps : {0.05, 2.25, 100.0}) {
    for (double kq : {0.5, 1.0, 3.0}) {
      const PotentialParams p{eps, kq};
      for (double b : {0.0, eps}) {
        // one-sided limits, extrapolated from just outside the breakpoint
        const double h = 1e-13 * std::max(1.0, eps);
        const double left = info_potential(b - h, p) + h * info_potential_grad(b - h, p);
        const double right = info_potential(b + h, p) - h * info_potential_grad(b + h, p);
        cont = std::max(cont, std::abs(left - right));
        cont = std::max(cont, std::abs(info_potential_grad(b - h, p) - info_potential_grad(b + h, p)));
      }
      std::uniform_real_distribution<double> u(-eps, 2 * eps);
      for (int i = 0; i < 200; ++i) {
        const double v = u(rng);
        if (std::abs(v) < 1e-3 * eps || std::abs(v - eps) < 1e-3 * eps) continue;
        const double s = 1e-6 * eps;
        const double fd = (info_potential(v + s, p) - info_potential(v - s, p)) / (2 * s);
        const double g = info_potential_grad(v, p);
        grad = std::max(grad, g == 0.0 ? std::abs(fd) : std::abs(fd - g) / std::abs(g));
      }
    }
  }
  return {cont < 1e-9 && grad < 1e-6,
          fmt("breakpoint jump %.2e (< 1e-9), gradient vs central differences %.2e (< 1e-6)", cont, grad)};
}

Outcome trajectory_optimizer() {
  const std::vector<Cluster> clusters{{Vec3(3, 0, 0), 1.0, 300}, {Vec3(-3, 1, 0), 1.0, 300}};
  const auto ls = generate_clustered_scene(clusters, 200, Vec3(9, 9, 4), 12);
  const VisibilityModelPtr m = parse_model("gp:70", pi / 4);
  const Field f = Field::build(ls, default_grid(), m, FactorKind::Info, nullptr, {1.0, threads()});
  LandmarkSpec spec;
  spec.camera = default_camera();
  const double eps = metric_threshold(spec, MetricKind::Determinant, {m, FactorKind::Info}).epsilon;
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(-1, 1);
  std::normal_distribution<double> n;
  double worst_grad = 0, worst_ablation = 0;
  int monotone = 0;
  for (int inst = 0; inst < 10; ++inst) {
    BoundaryState a, b;
    a.state = {Vec3(-3, 3 * u(rng), 0.5 * u(rng)), pi * u(rng)};
    b.state = {Vec3(3, 3 * u(rng), 0.5 * u(rng)), pi * u(rng)};
    ObstacleWorld w;
    w.spheres.push_back({Vec3(u(rng), u(rng), 0), 0.6});
    const PolyTrajectory init = fit_initial_trajectory(a, b, 10, 5);
    const FieldInformation info(f, QueryMode::Trilinear, true);
    TrajectoryCostParams p;
    p.info = &info;
    p.potential = {eps, 1.0};
    const TrajectoryProblem pr(init, w, p);
    Eigen::VectorXd x = pr.initial();
    for (int k = 0; k < x.size(); ++k) x[k] += 0.05 * n(rng);
    const double h = 1e-4;
    const Eigen::VectorXd g = pr.gradient(x, h);
    Eigen::VectorXd fd(x.size());
    for (int k = 0; k < x.size(); ++k) {
      Eigen::VectorXd xp = x, xm = x;
      xp[k] += h;
      xm[k] -= h;
      fd[k] = (pr.total(xp) - pr.total(xm)) / (2 * h);
    }
    worst_grad = std::max(worst_grad, test::rel_diff(g, fd));

    OptimizeParams o;
    o.max_iters = 30;
    const OptimizeResult r = optimize_trajectory(init, w, p, o);
    monotone += r.final_cost.total <= r.initial.total ? 1 : 0;

    TrajectoryCostParams blind = p;
    blind.mu_v = 0;
    const OptimizeResult z = optimize_trajectory(init, {}, blind, o);
    worst_ablation = std::max(worst_ablation, std::abs(z.final_cost.total - dynamic_cost(init)));
  }
  return {worst_grad < 1e-4 && monotone == 10 && worst_ablation < 1e-6,
          fmt("gradient vs full finite differences %.2e (< 1e-4), cost never increased %d/10, "
              "mu_v = 0 matches min-snap within %.2e (< 1e-6)",
              worst_grad, monotone, worst_ablation)};
}

Outcome planning_benefit() {
  const VisibilityModelPtr m = parse_model("gp:70", pi / 4);
  int rrt_ok = 0, traj_ok = 0;
  std::string detail;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    // Start faces one landmark cluster, goal faces another behind it.
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0, 1);
    const double phi = 2 * pi * U(rng);
    const Vec3 dir(std::cos(phi), std::sin(phi), 0);
    const Vec3 mid(U(rng) - 0.5, U(rng) - 0.5, 0);
    const Vec3 ps = mid - 2.5 * dir, pg = mid + 2.5 * dir;
    std::vector<Cluster> clusters;
    clusters.push_back({ps - 1.8 * dir + Vec3(0, 0, 0.3 * (U(rng) - 0.5)), 1.2, 300});
    clusters.push_back({pg + 1.8 * dir + Vec3(0, 0, 0.3 * (U(rng) - 0.5)), 1.2, 300});
    const auto ls = generate_clustered_scene(clusters, 0, Vec3(10, 10, 5), seed);
    const Field f = Field::build(ls, default_grid(), m, FactorKind::Info, nullptr, {1.0, threads()});

    PlanningProblem p;
    p.bounds = {Vec3(-4, -4, -1.5), Vec3(4, 4, 1.5)};
    p.start = {ps, wrap_angle(phi + pi)};
    p.goal = {pg, wrap_angle(phi)};
    p.metric = MetricKind::Determinant;
    p.threshold.camera = default_camera();
    p.rrt.time_budget = 2.0;
    p.rrt.seed = seed;
    const PlanningInfo field{PlanningInfo::Kind::Field, &f};
    const double rb = run_rrt(p, ls, {}).evaluation.fraction_below();
    const double rg = run_rrt(p, ls, field).evaluation.fraction_below();
    const double tb = run_trajectory(p, ls, {}).evaluation.fraction_below();
    const double tg = run_trajectory(p, ls, field).evaluation.fraction_below();
    rrt_ok += rg <= rb ? 1 : 0;
    traj_ok += tg <= tb ? 1 : 0;
    detail += fmt("%s%.2f/%.2f %.2f/%.2f", seed > 1 ? ", " : "", rb, rg, tb, tg);
  }
  return {rrt_ok >= 4 && traj_ok >= 4,
          fmt("gated RRT* no worse in %d/5, optimized trajectory no worse in %d/5 (>= 4 each); "
              "below-threshold fraction blind/aware rrt, traj: ",
              rrt_ok, traj_ok) +
              detail};
}

Outcome planner_throughput() {
  const auto ls = desk_scene(3000, 14);
  PlanningProblem p;
  p.bounds = {Vec3(-4, -4, -1.5), Vec3(4, 4, 1.5)};
  p.start = {Vec3(-3, -3, 0), 0};
  p.goal = {Vec3(3, 3, 0), 0};
  p.threshold.camera = default_camera();
  p.rrt.time_budget = 50.0;
  MatchabilitySpec near;
  near.min_range = 0.5;
  const Field f = Field::build(ls, default_grid(), parse_model("gp:70", pi / 4), FactorKind::Info,
                               make_matchability(near), {1.0, threads()});
  const RrtExperiment fe = run_rrt(p, ls, {PlanningInfo::Kind::Field, &f});
  const RrtExperiment pe = run_rrt(p, ls, {PlanningInfo::Kind::PointCloud, nullptr});
  const double ratio = fe.result.vertices_per_second() / pe.result.vertices_per_second();
  return {ratio >= 10.0,
          fmt("field gating %.0f vertices/s, point cloud %.0f vertices/s, x%.1f (>= 10) at 3000 landmarks, 50 s each",
              fe.result.vertices_per_second(), pe.result.vertices_per_second(), ratio)};
}

Outcome serialization() {
  const auto ls = desk_scene(1000, 15);
  const std::string path = (std::filesystem::temp_directory_path() / "fif_acceptance_rt.fif").string();
  bool ok = true;
  int compared = 0;
  std::mt19937_64 rng(16);
  for (auto kind : {FactorKind::Info, FactorKind::Trace}) {
    const Field f = Field::build(ls, default_grid(), parse_model("gp:70", pi / 4), kind, nullptr, {1.0, threads()});
    f.save(path);
    const Field g = Field::load(path);
    ok = ok && g.serialize() == f.serialize();
    ok = ok && std::filesystem::file_size(path) == f.serialize().size();
    for (int i = 0; i < 500; ++i) {
      const Pose pose(test::random_rotation(rng), random_inner(rng, default_grid()));
      for (auto mode : {QueryMode::Nearest, QueryMode::Trilinear}) {
        ok = ok && f.query_metric(pose, MetricKind::Trace, mode) == g.query_metric(pose, MetricKind::Trace, mode);
        if (kind == FactorKind::Info) {
          ok = ok && f.query_fim(pose, mode) == g.query_fim(pose, mode);
          ok = ok && f.query_metric(pose, MetricKind::Determinant, mode) == g.query_metric(pose, MetricKind::Determinant, mode);
        }
        ++compared;
      }
    }
  }
  std::filesystem::remove(path);
  return {ok, fmt("info and trace fields re-serialize bitwise; %d query pairs identical", compared)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"constant-time query", constant_time_query},
      {"FIM accuracy", fim_accuracy},
      {"rotation invariance", rotation_invariance},
      {"factorization exactness", factorization_exactness},
      {"trace consistency", trace_consistency},
      {"incremental update", incremental_update},
      {"memory accounting", memory_accounting},
      {"potential cost", potential_cost},
      {"trajectory optimizer", trajectory_optimizer},
      {"planning benefit", planning_benefit},
      {"planner throughput", planner_throughput},
      {"serialization", serialization},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    std::printf("%s %2d %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first, o.detail.c_str(),
                seconds_since(t0));
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
