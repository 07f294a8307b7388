#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fif/field.hpp"
#include "fif/fim.hpp"
#include "fif/visibility.hpp"

namespace fif {

/// JSON lines, one landmark per line: {"id": 3, "p": [x, y, z], "view_dir": [..]}.
/// Blank lines are skipped. Throws IoError on unreadable or malformed files.
std::vector<Landmark> read_scene(const std::string& path);
void write_scene(const std::string& path, std::span<const Landmark> landmarks);

/// `count` landmarks uniform in the box of size `extent` centered at `center`.
std::vector<Landmark> generate_uniform_scene(int count, const Vec3& extent,
                                             std::uint64_t seed,
                                             const Vec3& center = Vec3::Zero());

struct Cluster {
  Vec3 center = Vec3::Zero();
  double radius = 0.5;
  int count = 100;
};

/// Landmarks uniform inside each cluster ball, then `background` more uniform
/// in the box. Ids are consecutive.
std::vector<Landmark> generate_clustered_scene(std::span<const Cluster> clusters,
                                               int background, const Vec3& extent,
                                               std::uint64_t seed,
                                               const Vec3& center = Vec3::Zero());

/// "ox,oy,oz:vs:nx,ny,nz". Throws InvalidArgument.
GridConfig parse_grid(const std::string& text);
std::string format_grid(const GridConfig& grid);

/// 9 x 9 x 4 m around the origin with 0.5 m voxels.
GridConfig default_grid();

/// 640 x 480 pixels, 90 degree horizontal field of view.
PinholeCamera default_camera();

/// "quad:<v_alpha>" or "gp:<n_s>". GP models get a trained length scale.
/// Throws InvalidArgument.
VisibilityModelPtr parse_model(const std::string& text, double alpha);

FactorKind factor_from_string(const std::string& name);

}  // namespace fif
