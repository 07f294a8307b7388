#include "fif/scene.hpp"

#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <numbers>
#include <random>
#include <sstream>

#include "fif/error.hpp"

namespace fif {

using nlohmann::json;

namespace {

Vec3 vec3_from(const json& j) {
  if (!j.is_array() || j.size() != 3) throw std::invalid_argument("expected [x, y, z]");
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  return out;
}

double to_double(const std::string& s) {
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw std::invalid_argument(s);
  return v;
}

}  // namespace

std::vector<Landmark> read_scene(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open scene " + path);
  std::vector<Landmark> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      Landmark l;
      l.id = j.at("id").get<std::int64_t>();
      l.position = vec3_from(j.at("p"));
      if (j.contains("view_dir") && !j["view_dir"].is_null()) {
        const Vec3 d = vec3_from(j["view_dir"]);
        if (!(d.norm() > 0.0)) throw std::invalid_argument("zero view_dir");
        l.view_direction = d.normalized();
      }
      out.push_back(l);
    } catch (const std::exception& e) {
      throw Error(ErrorCode::IoError,
                  path + ":" + std::to_string(line_no) + ": bad landmark (" + e.what() + ")");
    }
  }
  return out;
}

void write_scene(const std::string& path, std::span<const Landmark> landmarks) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write scene " + path);
  for (const Landmark& l : landmarks) {
    json j;
    j["id"] = l.id;
    j["p"] = {l.position.x(), l.position.y(), l.position.z()};
    if (l.view_direction) {
      const Vec3& d = *l.view_direction;
      j["view_dir"] = {d.x(), d.y(), d.z()};
    }
    out << j.dump() << '\n';
  }
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path);
}

std::vector<Landmark> generate_uniform_scene(int count, const Vec3& extent,
                                             std::uint64_t seed, const Vec3& center) {
  return generate_clustered_scene({}, count, extent, seed, center);
}

std::vector<Landmark> generate_clustered_scene(std::span<const Cluster> clusters,
                                               int background, const Vec3& extent,
                                               std::uint64_t seed, const Vec3& center) {
  if (background < 0 || !(extent.array() >= 0.0).all()) {
    throw Error(ErrorCode::InvalidArgument, "bad scene size");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> n;
  std::vector<Landmark> out;
  for (const Cluster& c : clusters) {
    if (c.count < 0 || !(c.radius >= 0.0)) {
      throw Error(ErrorCode::InvalidArgument, "bad cluster");
    }
    for (int i = 0; i < c.count; ++i) {
      Vec3 d(n(rng), n(rng), n(rng));
      d.normalize();
      const double r = c.radius * std::cbrt(u(rng));
      out.push_back({c.center + r * d, std::nullopt, static_cast<std::int64_t>(out.size())});
    }
  }
  const Vec3 lo = center - 0.5 * extent;
  for (int i = 0; i < background; ++i) {
    const Vec3 p = lo + Vec3(u(rng), u(rng), u(rng)).cwiseProduct(extent);
    out.push_back({p, std::nullopt, static_cast<std::int64_t>(out.size())});
  }
  return out;
}

GridConfig parse_grid(const std::string& text) {
  const auto parts = split(text, ':');
  GridConfig g;
  try {
    if (parts.size() != 3) throw std::invalid_argument("three ':' groups");
    const auto o = split(parts[0], ',');
    const auto d = split(parts[2], ',');
    if (o.size() != 3 || d.size() != 3) throw std::invalid_argument("three components");
    g.origin = Vec3(to_double(o[0]), to_double(o[1]), to_double(o[2]));
    g.voxel_size = to_double(parts[1]);
    for (int k = 0; k < 3; ++k) {
      const long v = std::stol(d[k]);
      if (v <= 0) throw std::invalid_argument("dims must be positive");
      g.dims[k] = static_cast<std::uint32_t>(v);
    }
  } catch (const std::exception& e) {
    throw Error(ErrorCode::InvalidArgument,
                "grid '" + text + "' is not ox,oy,oz:vs:nx,ny,nz (" + e.what() + ")");
  }
  g.validate();
  return g;
}

std::string format_grid(const GridConfig& g) {
  std::ostringstream s;
  s << g.origin.x() << ',' << g.origin.y() << ',' << g.origin.z() << ':' << g.voxel_size
    << ':' << g.dims[0] << ',' << g.dims[1] << ',' << g.dims[2];
  return s.str();
}

GridConfig default_grid() {
  GridConfig g;
  g.origin = Vec3(-4.5, -4.5, -2.0);
  g.voxel_size = 0.5;
  g.dims = {18, 18, 8};
  return g;
}

PinholeCamera default_camera() {
  return PinholeCamera::from_horizontal_fov(640, 480, std::numbers::pi / 2);
}

VisibilityModelPtr parse_model(const std::string& text, double alpha) {
  const auto colon = text.find(':');
  const std::string kind = text.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : text.substr(colon + 1);
  try {
    if (kind == "quad") {
      return std::make_shared<QuadraticVisibility>(alpha, arg.empty() ? 0.5 : to_double(arg));
    }
    if (kind == "gp") {
      const int n = arg.empty() ? 70 : static_cast<int>(std::stol(arg));
      return make_trained_gp(n, alpha);
    }
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(ErrorCode::InvalidArgument, "model '" + text + "': " + e.what());
  }
  throw Error(ErrorCode::InvalidArgument, "model '" + text + "' is not quad:<v> or gp:<n>");
}

FactorKind factor_from_string(const std::string& name) {
  if (name == "info") return FactorKind::Info;
  if (name == "trace") return FactorKind::Trace;
  throw Error(ErrorCode::InvalidArgument, "factor must be info or trace, got " + name);
}

}  // namespace fif
