#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fif/error.hpp"
#include "fif/planners.hpp"
#include "fif/visibility.hpp"
#include "support.hpp"

using namespace fif;

namespace {

struct ConstantInfo final : InformationSource {
  double value;
  explicit ConstantInfo(double v) : value(v) {}
  double metric(const Pose&, MetricKind) const override { return value; }
};

// Information only for cameras looking roughly along +x.
struct HeadingInfo final : InformationSource {
  double metric(const Pose& pose, MetricKind) const override {
    return optical_axis(pose.rotation()).x() > 0.5 ? 1.0 : 0.0;
  }
};

PlanBounds box_bounds() { return {Vec3(-3, -3, -1), Vec3(3, 3, 1)}; }

RrtParams quick(std::uint64_t seed = 1) {
  RrtParams p;
  p.time_budget = 30.0;
  p.max_iterations = 3000;
  p.seed = seed;
  return p;
}

void check_path(const RrtResult& r, const PlanState& s, const PlanState& g, const ObstacleWorld& w,
                const ValidityConfig& cfg) {
  REQUIRE(r.found);
  REQUIRE(r.path.size() >= 2);
  CHECK((r.path.front().position - s.position).norm() < 1e-12);
  CHECK((r.path.back().position - g.position).norm() < 1e-12);
  CHECK(std::abs(wrap_angle(r.path.back().yaw - g.yaw)) < 1e-12);
  for (const PlanState& st : densify_path(r.path, 0.02)) CHECK(state_valid(st, w, cfg));
}

}  // namespace

TEST_CASE("state pose looks along the yaw") {
  const Pose p = state_pose({Vec3(1, 2, 3), 0.5});
  CHECK((p.translation() - Vec3(1, 2, 3)).norm() == 0.0);
  CHECK((optical_axis(p.rotation()) - Vec3(std::cos(0.5), std::sin(0.5), 0)).norm() < 1e-12);
}

TEST_CASE("state distance weights position and wrapped yaw") {
  RrtParams p;
  p.w_pos = 2.0;
  p.w_yaw = 0.5;
  const double d = state_distance({Vec3(0, 0, 0), 3.0}, {Vec3(3, 4, 0), -3.0}, p);
  const double dyaw = 2 * M_PI - 6.0;
  CHECK(d == doctest::Approx(2 * 5 + 0.5 * dyaw));
}

TEST_CASE("validity checks") {
  ObstacleWorld w;
  w.spheres.push_back({Vec3::Zero(), 1.0});
  ValidityConfig cfg;
  cfg.min_clearance = 0.5;
  CHECK_FALSE(state_valid({Vec3(1.2, 0, 0), 0}, w, cfg));
  CHECK(state_valid({Vec3(1.6, 0, 0), 0}, w, cfg));
  const ConstantInfo low(0.5), high(2.0);
  cfg.info = &low;
  cfg.info_threshold = 1.0;
  CHECK_FALSE(state_valid({Vec3(2, 0, 0), 0}, w, cfg));
  cfg.info = &high;
  CHECK(state_valid({Vec3(2, 0, 0), 0}, w, cfg));
  cfg.info_threshold = 0.0;
  cfg.info = &low;
  CHECK_FALSE(cfg.gated());
  CHECK(state_valid({Vec3(2, 0, 0), 0}, w, cfg));
}

TEST_CASE("out of field counts as invalid") {
  GridConfig g;
  g.origin = Vec3(-1, -1, -1);
  g.dims = {4, 4, 4};
  const auto ls = test::random_landmarks(30, 1, Vec3(-3, -3, -3), Vec3(3, 3, 3));
  const Field f = Field::build(ls, g, std::make_shared<QuadraticVisibility>(M_PI / 4, 0.5), FactorKind::Info);
  const FieldInformation info(f, QueryMode::Nearest);
  ValidityConfig cfg;
  cfg.info = &info;
  cfg.info_metric = MetricKind::Trace;
  cfg.info_threshold = 1e-12;
  CHECK_FALSE(state_valid({Vec3(5, 0, 0), 0}, {}, cfg));
}

TEST_CASE("free space path is a straight shortcut") {
  const PlanState s{Vec3(-2, 0, 0), 0}, g{Vec3(2, 1, 0), 1.0};
  const RrtResult r = rrt_plan(s, g, box_bounds(), {}, {}, quick());
  check_path(r, s, g, {}, {});
  RrtParams p;
  CHECK(r.cost == doctest::Approx(state_distance(s, g, p)).epsilon(1e-6));
  CHECK(r.tree_cost >= r.cost - 1e-9);
  CHECK(r.vertices > 1);
  CHECK(r.edges == r.vertices - 1);
}

TEST_CASE("planner goes around a wall") {
  ObstacleWorld w;
  w.boxes.push_back({Vec3(-0.2, -3, -1), Vec3(0.2, 1.5, 1)});
  ValidityConfig cfg;
  cfg.min_clearance = 0.1;
  const PlanState s{Vec3(-2, 0, 0), 0}, g{Vec3(2, 0, 0), 0};
  const RrtResult r = rrt_plan(s, g, box_bounds(), w, cfg, quick());
  check_path(r, s, g, w, cfg);
  for (std::size_t i = 1; i < r.path.size(); ++i)
    CHECK_FALSE(segment_blocked(w, r.path[i - 1].position, r.path[i].position));
  CHECK(r.cost > 4.0);
}

TEST_CASE("information gating constrains the heading") {
  const HeadingInfo info;
  ValidityConfig cfg;
  cfg.info = &info;
  cfg.info_threshold = 0.5;
  const PlanState s{Vec3(-2, 0, 0), 0.3}, g{Vec3(2, 0.5, 0), -0.3};
  const RrtResult r = rrt_plan(s, g, box_bounds(), {}, cfg, quick());
  check_path(r, s, g, {}, cfg);
}

TEST_CASE("unreachable goal") {
  ObstacleWorld w;
  w.spheres.push_back({Vec3(2, 0, 0), 0.5});
  RrtParams p = quick();
  p.max_iterations = 300;
  const RrtResult r = rrt_plan({Vec3(-2, 0, 0), 0}, {Vec3(2, 0, 0), 0}, box_bounds(), w, {}, p);
  CHECK_FALSE(r.found);
  try {
    r.path_or_throw();
    FAIL("expected NoPath");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NoPath);
  }
}

TEST_CASE("fixed seed and iteration cap is deterministic") {
  ObstacleWorld w;
  w.spheres.push_back({Vec3(0, 0.1, 0), 0.8});
  const PlanState s{Vec3(-2, 0, 0), 0}, g{Vec3(2, 0, 0), 0};
  const RrtResult a = rrt_plan(s, g, box_bounds(), w, {}, quick(5));
  const RrtResult b = rrt_plan(s, g, box_bounds(), w, {}, quick(5));
  REQUIRE(a.path.size() == b.path.size());
  for (std::size_t i = 0; i < a.path.size(); ++i) {
    CHECK(a.path[i].position == b.path[i].position);
    CHECK(a.path[i].yaw == b.path[i].yaw);
  }
  CHECK(a.vertices == b.vertices);
}

TEST_CASE("growth log is monotone") {
  RrtParams p = quick();
  p.max_iterations = -1;
  p.time_budget = 0.3;
  p.log_interval = 0.05;
  const RrtResult r = rrt_plan({Vec3(-2, 0, 0), 0}, {Vec3(2, 0, 0), 0}, box_bounds(), {}, {}, p);
  REQUIRE(r.growth.size() >= 3);
  for (std::size_t i = 1; i < r.growth.size(); ++i) {
    CHECK(r.growth[i].time >= r.growth[i - 1].time);
    CHECK(r.growth[i].vertices >= r.growth[i - 1].vertices);
    CHECK(r.growth[i].best_cost <= r.growth[i - 1].best_cost);
  }
  CHECK(r.elapsed == doctest::Approx(0.3).epsilon(0.2));
  CHECK(r.vertices_per_second() > 0);
}

TEST_CASE("densified paths keep spacing and endpoints") {
  const std::vector<PlanState> path{{Vec3(0, 0, 0), 0}, {Vec3(1, 0, 0), 0}, {Vec3(1, 0, 0), 1.0}, {Vec3(1, 2, 0), 1.0}};
  const auto d = densify_path(path, 0.1);
  CHECK((d.front().position - path.front().position).norm() == 0.0);
  CHECK((d.back().position - path.back().position).norm() < 1e-12);
  for (std::size_t i = 1; i < d.size(); ++i) {
    CHECK((d[i].position - d[i - 1].position).norm() <= 0.1 + 1e-9);
    CHECK(std::abs(wrap_angle(d[i].yaw - d[i - 1].yaw)) <= 0.1 + 1e-9);
  }
  CHECK(d.size() >= 31);
}

TEST_CASE("memoized field queries are bitwise equal") {
  GridConfig g;
  g.origin = Vec3(-1, -1, -1);
  g.dims = {4, 4, 4};
  const auto ls = test::random_landmarks(100, 2, Vec3(-3, -3, -3), Vec3(3, 3, 3));
  const Field f = Field::build(ls, g, gp_build(sample_directions(20, SamplingScheme::Fibonacci), {1, 0.6, 1e-10}, M_PI / 4),
                               FactorKind::Info);
  const FieldInformation plain(f), memo(f, QueryMode::Trilinear, true);
  std::mt19937_64 rng(3);
  for (int i = 0; i < 50; ++i) {
    const Mat3 r = test::random_rotation(rng);
    for (int k = 0; k < 4; ++k) {
      const Pose p(r, test::random_in_box(rng, Vec3(-0.7, -0.7, -0.7), Vec3(0.7, 0.7, 0.7)));
      for (auto m : {MetricKind::Determinant, MetricKind::SmallestEigenvalue, MetricKind::Trace})
        CHECK(memo.metric(p, m) == plain.metric(p, m));
    }
  }
}
