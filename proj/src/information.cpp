#include <bit>
#include <cstring>
#include <unordered_map>

#include "fif/error.hpp"
#include "fif/planners.hpp"

namespace fif {

namespace {

struct CornerKey {
  std::array<std::uint64_t, 3> axis;
  std::array<std::int32_t, 3> voxel;
  int metric;
  bool operator==(const CornerKey&) const = default;
};

struct CornerKeyHash {
  std::size_t operator()(const CornerKey& k) const {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](std::uint64_t v) {
      h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    };
    for (auto a : k.axis) mix(a);
    for (auto v : k.voxel) mix(static_cast<std::uint32_t>(v));
    mix(static_cast<std::uint64_t>(k.metric));
    return h;
  }
};

constexpr std::size_t kMaxCacheEntries = 1 << 20;

}  // namespace

struct FieldInformation::Cache {
  std::unordered_map<CornerKey, double, CornerKeyHash> metrics;
  Vec3 axis = Vec3::Constant(std::numeric_limits<double>::quiet_NaN());
  std::vector<double> vr;
};

FieldInformation::FieldInformation(const Field& field, QueryMode mode, bool memoize)
    : field_(field), mode_(mode) {
  if (memoize) cache_ = std::make_unique<Cache>();
}

FieldInformation::~FieldInformation() = default;

double FieldInformation::metric(const Pose& pose, MetricKind kind) const {
  if (!cache_) return field_.query_metric(pose, kind, mode_);
  if (field_.factor_kind() == FactorKind::Trace && kind != MetricKind::Trace) {
    throw Error(ErrorCode::WrongFactorKind,
                "determinant and smallest eigenvalue need an info field");
  }
  const FactorSample sample = field_.query_factor(pose.translation(), mode_);
  const Vec3 axis = optical_axis(pose.rotation());
  Cache& c = *cache_;
  if (axis != c.axis) {
    c.vr.resize(field_.model().size());
    field_.model().rotation_vector(axis, c.vr);
    c.axis = axis;
  }
  if (c.metrics.size() > kMaxCacheEntries) c.metrics.clear();
  CornerKey key{{std::bit_cast<std::uint64_t>(axis[0]), std::bit_cast<std::uint64_t>(axis[1]),
                 std::bit_cast<std::uint64_t>(axis[2])},
                {},
                static_cast<int>(kind)};
  double value = 0.0;
  for (int i = 0; i < sample.count; ++i) {
    const FactorCorner& corner = sample.corners[i];
    if (!corner.data) continue;
    key.voxel = corner.index;
    auto [it, inserted] = c.metrics.try_emplace(key, 0.0);
    if (inserted) it->second = field_.corner_metric(corner.data, c.vr, kind);
    value += corner.weight * it->second;
  }
  return value;
}

}  // namespace fif
