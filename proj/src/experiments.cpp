#include "fif/experiments.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "fif/error.hpp"
#include "fif/scene.hpp"

namespace fif {

using nlohmann::json;

// --- Report ----------------------------------------------------------------

void Report::add(std::string name, double value, std::string unit) {
  rows.push_back({std::move(name), value, std::move(unit)});
}

double Report::value(const std::string& name) const {
  for (const ReportRow& r : rows) {
    if (r.name == name) return r.value;
  }
  throw Error(ErrorCode::InvalidArgument, "report has no row " + name);
}

std::string Report::config_hash() const {
  // FNV-1a over the canonical dump.
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : config.dump()) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::ostringstream s;
  s << std::hex;
  s.width(16);
  s.fill('0');
  s << h;
  return s.str();
}

json Report::to_json() const {
  json j;
  j["experiment"] = experiment;
  j["config"] = config;
  j["config_hash"] = config_hash();
  j["rows"] = json::array();
  for (const ReportRow& r : rows) {
    j["rows"].push_back({{"case", r.name}, {"value", r.value}, {"unit", r.unit}});
  }
  j["summary"] = summary;
  return j;
}

std::string Report::to_csv() const {
  std::ostringstream s;
  s.precision(17);
  const std::string hash = config_hash();
  s << "experiment,case,value,unit,config_hash\n";
  for (const ReportRow& r : rows) {
    s << experiment << ',' << r.name << ',' << r.value << ',' << r.unit << ',' << hash
      << '\n';
  }
  return s.str();
}

void Report::write(const std::string& prefix) const {
  std::ofstream csv(prefix + ".csv");
  std::ofstream js(prefix + ".json");
  if (!csv || !js) throw Error(ErrorCode::IoError, "cannot write report " + prefix);
  csv << to_csv();
  js << to_json().dump(2) << '\n';
}

TimingStats timing_stats(std::vector<double> samples) {
  TimingStats t;
  t.samples = samples.size();
  if (samples.empty()) return t;
  std::sort(samples.begin(), samples.end());
  auto pct = [&](double q) {
    const double pos = q * (samples.size() - 1);
    const auto lo = static_cast<std::size_t>(pos);
    const auto hi = std::min(lo + 1, samples.size() - 1);
    return samples[lo] + (pos - lo) * (samples[hi] - samples[lo]);
  };
  t.median_ns = pct(0.5);
  t.p10_ns = pct(0.1);
  t.p90_ns = pct(0.9);
  return t;
}

// --- helpers ---------------------------------------------------------------

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Mat3 random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
  q.normalize();
  return q.toRotationMatrix();
}

// Camera looking along `dir` with its image x axis horizontal.
Mat3 look_rotation(const Vec3& dir) {
  const Vec3 z = dir.normalized();
  Vec3 x = z.cross(Vec3::UnitZ());
  if (x.norm() < 1e-9) x = z.cross(Vec3::UnitY());
  x.normalize();
  Mat3 r;
  r << x, z.cross(x), z;
  return r;
}

Matchability near_gate(double min_range) {
  if (!(min_range > 0.0)) return always_matchable();
  MatchabilitySpec spec;
  spec.min_range = min_range;
  return make_matchability(spec);
}

std::vector<Landmark> beyond(std::span<const Landmark> landmarks, const Vec3& p,
                             double min_range) {
  std::vector<Landmark> out;
  for (const Landmark& l : landmarks) {
    if ((l.position - p).norm() >= min_range) out.push_back(l);
  }
  return out;
}

// Uniform position inside the region where trilinear queries are defined.
Vec3 random_inner_position(const GridConfig& g, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vec3 p;
  for (int k = 0; k < 3; ++k) {
    const double lo = g.origin[k] + 0.5 * g.voxel_size;
    const double span = (g.dims[k] - 1) * g.voxel_size;
    p[k] = lo + u(rng) * span;
  }
  return p;
}

VoxelIndex random_voxel(const GridConfig& g, std::mt19937_64& rng) {
  VoxelIndex v;
  for (int k = 0; k < 3; ++k) {
    v[k] = static_cast<std::int32_t>(std::uniform_int_distribution<std::uint32_t>(
        0, g.dims[k] - 1)(rng));
  }
  return v;
}

Vec3 voxel_center(const GridConfig& g, const VoxelIndex& v) {
  return g.origin + g.voxel_size * (Vec3(v[0], v[1], v[2]) + Vec3::Constant(0.5));
}

volatile double g_sink = 0.0;

// Per-query wall times in ns over `repeats` passes after one warm-up pass.
template <typename F>
std::vector<double> time_queries(const std::vector<Pose>& poses, int repeats, F&& f) {
  double acc = 0.0;
  for (const Pose& p : poses) acc += f(p);
  std::vector<double> out;
  out.reserve(poses.size() * repeats);
  for (int r = 0; r < repeats; ++r) {
    for (const Pose& p : poses) {
      const auto t0 = Clock::now();
      acc += f(p);
      const auto t1 = Clock::now();
      out.push_back(std::chrono::duration<double, std::nano>(t1 - t0).count());
    }
  }
  g_sink = g_sink + acc;
  return out;
}

void add_timing(Report& report, const std::string& prefix, const TimingStats& t) {
  report.add(prefix + "/median", t.median_ns, "ns");
  report.add(prefix + "/p10", t.p10_ns, "ns");
  report.add(prefix + "/p90", t.p90_ns, "ns");
}

json bench_config_json(const BenchConfig& c) {
  return {{"grid", format_grid(c.grid)},
          {"models", c.models},
          {"camera",
           {{"width", c.camera.width},
            {"height", c.camera.height},
            {"fx", c.camera.fx},
            {"half_fov", c.camera.half_fov}}},
          {"sigma", c.sigma},
          {"n_poses", c.n_poses},
          {"repeats", c.repeats},
          {"seed", c.seed},
          {"threads", c.threads},
          {"min_range", c.min_range}};
}

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / v.size();
}

}  // namespace

// --- timing ----------------------------------------------------------------

Report bench_timing(std::span<const Landmark> landmarks, const BenchConfig& c) {
  c.grid.validate();
  Report report;
  report.experiment = "bench-timing";
  report.config = bench_config_json(c);
  report.config["landmarks"] = landmarks.size();

  std::mt19937_64 rng(c.seed);
  std::vector<Pose> poses;
  for (int i = 0; i < c.n_poses; ++i) {
    const Vec3 p = random_inner_position(c.grid, rng);
    poses.emplace_back(random_rotation(rng), p);
  }
  const Matchability gate = near_gate(c.min_range);
  BuildOptions opts{c.sigma, c.threads};

  for (const std::string& name : c.models) {
    const VisibilityModelPtr model = parse_model(name, c.camera.half_fov);
    auto t0 = Clock::now();
    const Field info = Field::build(landmarks, c.grid, model, FactorKind::Info, gate, opts);
    report.add(name + "/info/build", seconds_since(t0), "s");
    t0 = Clock::now();
    const Field trace = Field::build(landmarks, c.grid, model, FactorKind::Trace, gate, opts);
    report.add(name + "/trace/build", seconds_since(t0), "s");

    const MemoryStats mi = info.memory_stats();
    const MemoryStats mt = trace.memory_stats();
    report.add(name + "/info/voxels", static_cast<double>(mi.voxel_count), "count");
    report.add(name + "/info/scalars_per_voxel", static_cast<double>(mi.scalars_per_voxel),
               "count");
    report.add(name + "/info/bytes", static_cast<double>(mi.bytes_total), "bytes");
    report.add(name + "/trace/scalars_per_voxel", static_cast<double>(mt.scalars_per_voxel),
               "count");
    report.add(name + "/trace/bytes", static_cast<double>(mt.bytes_total), "bytes");

    add_timing(report, name + "/info/fim",
               timing_stats(time_queries(poses, c.repeats, [&](const Pose& p) {
                 return info.query_fim(p, QueryMode::Nearest)(0, 0);
               })));
    for (MetricKind m : {MetricKind::Determinant, MetricKind::SmallestEigenvalue,
                         MetricKind::Trace}) {
      add_timing(report, name + "/info/" + to_string(m),
                 timing_stats(time_queries(poses, c.repeats, [&](const Pose& p) {
                   return info.query_metric(p, m, QueryMode::Trilinear);
                 })));
    }
    add_timing(report, name + "/trace/trace",
               timing_stats(time_queries(poses, c.repeats, [&](const Pose& p) {
                 return trace.query_metric(p, MetricKind::Trace, QueryMode::Trilinear);
               })));
  }

  if (c.include_point_cloud) {
    add_timing(report, "pc/fim", timing_stats(time_queries(poses, c.repeats, [&](const Pose& p) {
                 return exact_pose_fim(p, landmarks, c.camera, c.sigma)(0, 0);
               })));
    for (MetricKind m : {MetricKind::Determinant, MetricKind::SmallestEigenvalue,
                         MetricKind::Trace}) {
      add_timing(report, std::string("pc/") + to_string(m),
                 timing_stats(time_queries(poses, c.repeats, [&](const Pose& p) {
                   return fim_metric(exact_pose_fim(p, landmarks, c.camera, c.sigma), m);
                 })));
    }
  }
  return report;
}

// --- accuracy --------------------------------------------------------------

namespace {

struct AccuracyPose {
  Pose pose;
  Fim exact;
};

std::vector<AccuracyPose> accuracy_poses(std::span<const Landmark> landmarks,
                                         const BenchConfig& c, bool centers,
                                         std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<AccuracyPose> out;
  const int max_attempts = 100 * std::max(1, c.n_poses);
  for (int attempt = 0; attempt < max_attempts && static_cast<int>(out.size()) < c.n_poses;
       ++attempt) {
    Vec3 p;
    if (centers) {
      p = voxel_center(c.grid, random_voxel(c.grid, rng));
    } else {
      p = c.grid.origin + Vec3(u(rng), u(rng), u(rng)).cwiseProduct(c.grid.extent());
    }
    const Pose pose(random_rotation(rng), p);
    const auto visible = beyond(landmarks, p, c.min_range);
    const Fim exact = exact_pose_fim(pose, visible, c.camera, c.sigma);
    if (exact.norm() == 0.0) continue;  // nothing in view: error undefined
    out.push_back({pose, exact});
  }
  return out;
}

}  // namespace

Report bench_accuracy(std::span<const Landmark> landmarks, const BenchConfig& c) {
  c.grid.validate();
  Report report;
  report.experiment = "bench-accuracy";
  report.config = bench_config_json(c);
  report.config["landmarks"] = landmarks.size();

  std::mt19937_64 rng(c.seed);
  const auto at_centers = accuracy_poses(landmarks, c, true, rng);
  const auto at_random = accuracy_poses(landmarks, c, false, rng);
  report.add("poses/centers", static_cast<double>(at_centers.size()), "count");
  report.add("poses/random", static_cast<double>(at_random.size()), "count");

  const Matchability gate = near_gate(c.min_range);
  for (const std::string& name : c.models) {
    const VisibilityModelPtr model = parse_model(name, c.camera.half_fov);
    const Field field = Field::build(landmarks, c.grid, model, FactorKind::Info, gate,
                                     {c.sigma, c.threads});
    for (const auto& [label, set] : {std::pair{"centers", &at_centers},
                                     std::pair{"random", &at_random}}) {
      std::vector<double> errors;
      for (const AccuracyPose& ap : *set) {
        errors.push_back(100.0 * relative_frobenius_error(
                                     field.query_fim(ap.pose, QueryMode::Nearest), ap.exact));
      }
      report.add(name + "/" + label + "/mean", mean_of(errors), "%");
      report.add(name + "/" + label + "/median", median_of(errors), "%");
    }
  }
  return report;
}

// --- optimal views ---------------------------------------------------------

Report optimal_views(std::span<const Landmark> landmarks, const BenchConfig& c,
                     const ViewSweepConfig& sweep) {
  c.grid.validate();
  if (sweep.view_samples < 4) throw Error(ErrorCode::InvalidArgument, "need at least 4 views");
  Report report;
  report.experiment = "optimal-views";
  report.config = bench_config_json(c);
  report.config["landmarks"] = landmarks.size();
  report.config["metric"] = to_string(sweep.metric);
  report.config["n_positions"] = sweep.n_positions;
  report.config["view_samples"] = sweep.view_samples;
  report.config["full_sphere"] = sweep.full_sphere;

  std::vector<Mat3> views;
  if (sweep.full_sphere) {
    for (const Vec3& d : sample_directions(sweep.view_samples, SamplingScheme::Fibonacci)) {
      views.push_back(look_rotation(d));
    }
  } else {
    for (int k = 0; k < sweep.view_samples; ++k) {
      views.push_back(camera_rotation_from_yaw(2.0 * std::numbers::pi * k / sweep.view_samples));
    }
  }

  auto argmax = [&](auto&& score) {
    int best = 0;
    double best_v = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < static_cast<int>(views.size()); ++k) {
      const double v = score(views[k]);
      if (v > best_v) {
        best_v = v;
        best = k;
      }
    }
    return std::pair{best, best_v};
  };

  std::mt19937_64 rng(c.seed);
  std::vector<Vec3> positions;
  std::vector<int> oracle_best;
  const int max_attempts = 100 * std::max(1, sweep.n_positions);
  for (int a = 0; a < max_attempts && static_cast<int>(positions.size()) < sweep.n_positions;
       ++a) {
    const Vec3 p = voxel_center(c.grid, random_voxel(c.grid, rng));
    const auto visible = beyond(landmarks, p, c.min_range);
    const auto [best, v] = argmax([&](const Mat3& r) {
      return fim_metric(exact_pose_fim(Pose(r, p), visible, c.camera, c.sigma), sweep.metric);
    });
    if (!(v > 0.0)) continue;  // no informative view at all
    positions.push_back(p);
    oracle_best.push_back(best);
  }
  report.add("positions", static_cast<double>(positions.size()), "count");

  auto angle_deg = [&](int a, int b) {
    const Vec3 u = optical_axis(views[a]), w = optical_axis(views[b]);
    return std::atan2(u.cross(w).norm(), u.dot(w)) * 180.0 / std::numbers::pi;
  };
  {
    std::vector<double> self;
    for (int b : oracle_best) self.push_back(angle_deg(b, b));
    report.add("oracle/median", median_of(self), "deg");
    report.add("oracle/mean", mean_of(self), "deg");
  }
  const Matchability gate = near_gate(c.min_range);
  for (const std::string& name : c.models) {
    const VisibilityModelPtr model = parse_model(name, c.camera.half_fov);
    const Field field = Field::build(landmarks, c.grid, model, FactorKind::Info, gate,
                                     {c.sigma, c.threads});
    std::vector<double> angles;
    for (std::size_t i = 0; i < positions.size(); ++i) {
      const auto [best, v] = argmax([&](const Mat3& r) {
        return field.query_metric(Pose(r, positions[i]), sweep.metric, QueryMode::Nearest);
      });
      angles.push_back(angle_deg(best, oracle_best[i]));
    }
    report.add(name + "/median", median_of(angles), "deg");
    report.add(name + "/mean", mean_of(angles), "deg");
  }
  return report;
}

// --- smoothness ------------------------------------------------------------

std::vector<double> normalize_trace(std::span<const double> values) {
  std::vector<double> out(values.begin(), values.end());
  if (out.empty()) return out;
  const auto [lo, hi] = std::minmax_element(out.begin(), out.end());
  const double min = *lo;
  const double range = *hi - *lo;
  for (double& v : out) v = range > 0.0 ? (v - min) / range : 0.0;
  return out;
}

double max_adjacent_jump(std::span<const double> values) {
  double m = 0.0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    m = std::max(m, std::abs(values[i] - values[i - 1]));
  }
  return m;
}

Report smoothness(std::span<const Landmark> landmarks, const Field& field,
                  const PinholeCamera& camera, const SmoothnessConfig& c) {
  if (c.steps < 2) throw Error(ErrorCode::InvalidArgument, "need at least 2 steps");
  Report report;
  report.experiment = "smoothness";
  report.config = {{"sweep", c.sweep == SweepKind::Yaw ? "yaw" : "translation"},
                   {"metric", to_string(c.metric)},
                   {"steps", c.steps},
                   {"position", {c.position.x(), c.position.y(), c.position.z()}},
                   {"end", {c.end.x(), c.end.y(), c.end.z()}},
                   {"yaw", c.yaw},
                   {"landmarks", landmarks.size()},
                   {"grid", format_grid(field.config())}};

  std::vector<double> f;
  std::vector<double> o;
  for (int k = 0; k <= c.steps; ++k) {
    const double s = static_cast<double>(k) / c.steps;
    Pose pose;
    if (c.sweep == SweepKind::Yaw) {
      pose = Pose::from_position_yaw(c.position, -std::numbers::pi + 2.0 * std::numbers::pi * s);
    } else {
      pose = Pose::from_position_yaw(c.position + s * (c.end - c.position), c.yaw);
    }
    f.push_back(field.query_metric(pose, c.metric, QueryMode::Trilinear));
    o.push_back(fim_metric(exact_pose_fim(pose, landmarks, camera, field.sigma()), c.metric));
  }
  auto variation = [](const std::vector<double>& v) {
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    return *hi != 0.0 ? (*hi - *lo) / std::abs(*hi) : 0.0;
  };
  const auto fn = normalize_trace(f);
  const auto on = normalize_trace(o);
  report.add("field/max_jump", max_adjacent_jump(fn), "normalized");
  report.add("oracle/max_jump", max_adjacent_jump(on), "normalized");
  report.add("field/variation", variation(f), "ratio");
  report.add("oracle/variation", variation(o), "ratio");
  report.summary["field"] = fn;
  report.summary["oracle"] = on;
  return report;
}

}  // namespace fif
