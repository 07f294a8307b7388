#pragma once

#include <vector>

#include "fif/geometry.hpp"

namespace fif {

struct Sphere {
  Vec3 center = Vec3::Zero();
  double radius = 1.0;
};

struct Box {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Ones();
};

/// Analytic obstacle set standing in for an ESDF.
struct ObstacleWorld {
  std::vector<Sphere> spheres;
  std::vector<Box> boxes;

  bool empty() const { return spheres.empty() && boxes.empty(); }
  /// Throws InvalidArgument on non-positive radii or inverted boxes.
  void validate() const;
};

double signed_distance(const Sphere& s, const Vec3& p);
double signed_distance(const Box& b, const Vec3& p);

/// Minimum signed distance over all primitives (negative inside); +inf for
/// an empty world.
double obstacle_distance(const ObstacleWorld& world, const Vec3& p);

/// True when the open segment (a, b) passes through any primitive.
bool segment_blocked(const ObstacleWorld& world, const Vec3& a, const Vec3& b);

}  // namespace fif
