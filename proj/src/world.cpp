#include "fif/world.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fif/error.hpp"

namespace fif {

void ObstacleWorld::validate() const {
  for (const Sphere& s : spheres) {
    if (!(s.radius > 0.0)) {
      throw Error(ErrorCode::InvalidArgument, "sphere radius must be positive");
    }
  }
  for (const Box& b : boxes) {
    if (!(b.min.array() < b.max.array()).all()) {
      throw Error(ErrorCode::InvalidArgument, "box min must be below max");
    }
  }
}

double signed_distance(const Sphere& s, const Vec3& p) {
  return (p - s.center).norm() - s.radius;
}

double signed_distance(const Box& b, const Vec3& p) {
  const Vec3 center = 0.5 * (b.min + b.max);
  const Vec3 half = 0.5 * (b.max - b.min);
  const Vec3 q = (p - center).cwiseAbs() - half;
  const double outside = q.cwiseMax(0.0).norm();
  const double inside = std::min(q.maxCoeff(), 0.0);
  return outside + inside;
}

double obstacle_distance(const ObstacleWorld& world, const Vec3& p) {
  double d = std::numeric_limits<double>::infinity();
  for (const Sphere& s : world.spheres) d = std::min(d, signed_distance(s, p));
  for (const Box& b : world.boxes) d = std::min(d, signed_distance(b, p));
  return d;
}

namespace {

bool segment_hits_sphere(const Sphere& s, const Vec3& a, const Vec3& b) {
  const Vec3 d = b - a;
  const double len2 = d.squaredNorm();
  if (len2 == 0.0) return signed_distance(s, a) < 0.0;
  const double t = std::clamp((s.center - a).dot(d) / len2, 0.0, 1.0);
  return (a + t * d - s.center).norm() < s.radius;
}

// Slab test restricted to the open parameter interval (0, 1).
bool segment_hits_box(const Box& box, const Vec3& a, const Vec3& b) {
  const Vec3 d = b - a;
  double t0 = 0.0;
  double t1 = 1.0;
  for (int k = 0; k < 3; ++k) {
    if (std::abs(d[k]) < 1e-15) {
      if (a[k] <= box.min[k] || a[k] >= box.max[k]) return false;
      continue;
    }
    double ta = (box.min[k] - a[k]) / d[k];
    double tb = (box.max[k] - a[k]) / d[k];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 >= t1) return false;
  }
  return true;
}

}  // namespace

bool segment_blocked(const ObstacleWorld& world, const Vec3& a, const Vec3& b) {
  for (const Sphere& s : world.spheres) {
    if (segment_hits_sphere(s, a, b)) return true;
  }
  for (const Box& bx : world.boxes) {
    if (segment_hits_box(bx, a, b)) return true;
  }
  return false;
}

}  // namespace fif
