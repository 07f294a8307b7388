// fif: scene generation, field building, benchmarks and planning runs.
#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "fif/fif.h"

using nlohmann::json;

namespace {

struct Options {
  json cfg = json::object();
  bool print_json = false;
};

// Copies the flag into the config only when it was given on the command line.
template <class T>
CLI::Option* opt(CLI::App* app, Options& o, const std::string& flag, const std::string& key,
                 const std::string& help) {
  return app->add_option_function<T>(flag, [&o, key](const T& v) { o.cfg[key] = v; }, help);
}

void vec3_opt(CLI::App* app, Options& o, const std::string& flag, const std::string& key,
              const std::string& help) {
  app->add_option_function<std::vector<double>>(
         flag, [&o, key](const std::vector<double>& v) { o.cfg[key] = v; }, help)
      ->expected(3)
      ->delimiter(',');
}

void common(CLI::App* app, Options& o) {
  opt<std::string>(app, o, "--scene", "scene", "Scene file (JSON lines)");
  opt<std::string>(app, o, "--field", "field", "Field file");
  opt<std::string>(app, o, "--grid", "grid", "Grid \"ox,oy,oz:vs:nx,ny,nz\"");
  opt<std::string>(app, o, "--model", "model", "quad:<v_alpha> or gp:<n_s>");
  opt<std::string>(app, o, "--factor", "factor", "info or trace");
  opt<std::string>(app, o, "--metric", "metric", "det, lmin or trace");
  opt<std::uint64_t>(app, o, "--seed", "seed", "Random seed");
  opt<std::string>(app, o, "--out", "out", "Output path or prefix");
  opt<int>(app, o, "--threads", "threads", "Build threads");
  opt<double>(app, o, "--sigma", "sigma", "Bearing noise");
  opt<double>(app, o, "--min-range", "min_range", "Near-range gate for field voxels (m)");
  app->add_flag("--json", o.print_json, "Print the full JSON report");
}

std::optional<json> parse_cluster(const std::string& text) {
  // x,y,z:radius:count
  std::vector<std::string> parts;
  std::stringstream ss(text);
  for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
  if (parts.size() != 3) return std::nullopt;
  std::vector<double> c;
  std::stringstream cs(parts[0]);
  for (std::string p; std::getline(cs, p, ',');) c.push_back(std::stod(p));
  if (c.size() != 3) return std::nullopt;
  return json{{"center", c}, {"radius", std::stod(parts[1])}, {"count", std::stoi(parts[2])}};
}

void print_rows(const json& report) {
  std::printf("%s  config_hash=%s\n", report.value("experiment", "").c_str(),
              report.value("config_hash", "").c_str());
  for (const json& r : report.value("rows", json::array())) {
    std::printf("  %-36s %16.6g %s\n", r["case"].get<std::string>().c_str(),
                r["value"].get<double>(), r["unit"].get<std::string>().c_str());
  }
}

int exit_code(fif_status s) {
  switch (s) {
    case FIF_OK: return 0;
    case FIF_NO_PATH: return 2;
    case FIF_IO_ERROR:
    case FIF_BAD_MAGIC:
    case FIF_VERSION_MISMATCH:
    case FIF_TRUNCATED_FILE:
    case FIF_WRONG_FACTOR_KIND: return 3;
    default: return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fisher information fields: build, query, benchmark and plan"};
  app.require_subcommand(1);
  std::map<std::string, Options> opts;
  auto sub = [&](const std::string& name, const std::string& help) {
    CLI::App* s = app.add_subcommand(name, help);
    common(s, opts[name]);
    return s;
  };

  {
    CLI::App* s = sub("gen-scene", "Generate a random landmark scene");
    Options& o = opts["gen-scene"];
    opt<int>(s, o, "--count", "count", "Uniform landmarks (default 1000)");
    vec3_opt(s, o, "--extent", "extent", "Box size x,y,z (default 10,10,5)");
    vec3_opt(s, o, "--center", "center", "Box center x,y,z");
    s->add_option_function<std::vector<std::string>>(
        "--cluster",
        [&o](const std::vector<std::string>& v) {
          json a = json::array();
          for (const std::string& c : v) {
            auto parsed = parse_cluster(c);
            if (!parsed) throw CLI::ValidationError("--cluster", "expected x,y,z:radius:count");
            a.push_back(*parsed);
          }
          o.cfg["clusters"] = a;
        },
        "Landmark ball x,y,z:radius:count (repeatable)");
  }
  sub("build", "Build a field from a scene and save it");
  for (const char* name : {"bench-timing", "bench-accuracy", "optimal-views"}) {
    CLI::App* s = sub(name, name == std::string("bench-timing")
                                ? "Query time and memory per representation"
                            : name == std::string("bench-accuracy")
                                ? "Relative FIM error against the point cloud"
                                : "Angle between field and exact optimal views");
    Options& o = opts[name];
    s->add_option_function<std::vector<std::string>>(
         "--models", [&o](const std::vector<std::string>& v) { o.cfg["models"] = v; },
         "Comma separated model list")
        ->delimiter(',');
    opt<int>(s, o, "--n-poses", "n_poses", "Random poses (default 200)");
    opt<int>(s, o, "--repeats", "repeats", "Timing passes over the poses");
    s->add_flag_function("--no-point-cloud",
                         [&o](std::int64_t) { o.cfg["point_cloud"] = false; },
                         "Skip the exact point-cloud rows");
  }
  {
    Options& o = opts["optimal-views"];
    CLI::App* s = app.get_subcommand("optimal-views");
    opt<int>(s, o, "--n-positions", "n_positions", "Sampled positions");
    opt<int>(s, o, "--view-samples", "view_samples", "Yaw samples, or sphere samples");
    s->add_flag_function("--full-sphere",
                         [&o](std::int64_t) { o.cfg["full_sphere"] = true; },
                         "Sweep optical axes over the sphere instead of yaw");
  }
  {
    CLI::App* s = sub("smoothness", "Metric along a yaw or translation sweep");
    Options& o = opts["smoothness"];
    opt<std::string>(s, o, "--sweep", "sweep", "yaw or translation");
    opt<int>(s, o, "--steps", "steps", "Sweep steps");
    vec3_opt(s, o, "--position", "position", "Sweep start position");
    vec3_opt(s, o, "--end", "end", "Translation end position");
    opt<double>(s, o, "--yaw", "yaw", "Yaw for the translation sweep (rad)");
  }
  for (const char* name : {"plan-rrt", "plan-traj"}) {
    CLI::App* s = sub(name, name == std::string("plan-rrt")
                                ? "RRT* with optional information gating"
                                : "Trajectory optimization with an information cost");
    Options& o = opts[name];
    opt<std::string>(s, o, "--problem", "problem", "Planning problem file")->required();
    opt<std::string>(s, o, "--representation", "representation", "field, pc or none");
    opt<double>(s, o, "--time-budget", "time_budget", "RRT* time budget (s)");
    opt<double>(s, o, "--mu-v", "mu_v", "Information cost weight");
    opt<int>(s, o, "--max-iters", "max_iters", "Optimizer iterations");
  }
  sub("inspect", "Summarize a scene or field file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  CLI::App* chosen = app.get_subcommands().front();
  const std::string name = chosen->get_name();
  const Options& o = opts[name];
  char* report = nullptr;
  const fif_status s = fif_run_command(name.c_str(), o.cfg.dump().c_str(), &report);
  if (s != FIF_OK) {
    std::fprintf(stderr, "fif %s: %s: %s\n", name.c_str(), fif_status_string(s),
                 fif_last_error());
    return exit_code(s);
  }
  const json r = json::parse(report);
  fif_string_free(report);
  if (o.print_json) {
    std::cout << r.dump(2) << '\n';
  } else {
    print_rows(r);
  }
  return 0;
}
