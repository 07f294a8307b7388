#pragma once

#include <Eigen/Geometry>
#include <random>
#include <vector>

#include "fif/geometry.hpp"

namespace fif::test {

inline Mat3 random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
  return q.normalized().toRotationMatrix();
}

inline Vec3 random_in_box(std::mt19937_64& rng, const Vec3& lo, const Vec3& hi) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return lo + Vec3(u(rng), u(rng), u(rng)).cwiseProduct(hi - lo);
}

inline std::vector<Landmark> random_landmarks(int n, std::uint64_t seed, const Vec3& lo,
                                              const Vec3& hi) {
  std::mt19937_64 rng(seed);
  std::vector<Landmark> out(n);
  for (int i = 0; i < n; ++i) {
    out[i].position = random_in_box(rng, lo, hi);
    out[i].id = i;
  }
  return out;
}

template <class A, class B>
double rel_diff(const A& a, const B& b) {
  const double d = (a - b).norm();
  const double s = b.norm();
  return s > 0.0 ? d / s : d;
}

inline double rel_diff(double a, double b) {
  return b != 0.0 ? std::abs(a - b) / std::abs(b) : std::abs(a);
}

}  // namespace fif::test
