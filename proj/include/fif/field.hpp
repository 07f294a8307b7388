#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "fif/fim.hpp"
#include "fif/visibility.hpp"
#include "fif/world.hpp"

namespace fif {

struct GridConfig {
  Vec3 origin = Vec3::Zero();  ///< min corner, meters
  double voxel_size = 0.5;
  std::array<std::uint32_t, 3> dims{1, 1, 1};

  /// Throws InvalidArgument on a non-positive voxel size.
  void validate() const;
  std::uint64_t voxel_count() const {
    return std::uint64_t{dims[0]} * dims[1] * dims[2];
  }
  Vec3 extent() const {
    return voxel_size * Vec3(dims[0], dims[1], dims[2]);
  }
};

using VoxelIndex = std::array<std::int32_t, 3>;

enum class FactorKind : std::uint8_t { Info = 0, Trace = 1 };
enum class QueryMode { Nearest, Trilinear };

const char* to_string(FactorKind kind);

/// Decides which landmarks contribute to the factor stored at a voxel center.
using Matchability = std::function<bool(const Vec3& center, const Landmark&)>;

Matchability always_matchable();

/// Range gate, optional view-direction cone and optional occlusion test.
struct MatchabilitySpec {
  double min_range = 0.0;
  double max_range = 1e30;
  /// Maximum angle (radians) between the voxel-to-landmark direction and the
  /// landmark's stored view direction; disabled when unset. Landmarks without
  /// a view direction always pass.
  std::optional<double> max_view_angle;
  /// Landmarks hidden behind these primitives are rejected.
  ObstacleWorld occluders;
};

Matchability make_matchability(const MatchabilitySpec& spec);

/// One voxel taking part in a query together with its interpolation weight.
/// `data` is null for voxels with no stored factor (implicit zero).
struct FactorCorner {
  VoxelIndex index{};
  const double* data = nullptr;
  double weight = 0.0;
};

struct FactorSample {
  std::array<FactorCorner, 8> corners{};
  int count = 0;
};

struct MemoryStats {
  std::uint64_t voxel_count = 0;
  std::uint64_t scalars_per_voxel = 0;
  std::uint64_t bytes_factors = 0;      ///< 8-byte scalars, as stored
  std::uint64_t bytes_factors_f32 = 0;  ///< same payload as 4-byte floats
  std::uint64_t bytes_total = 0;        ///< factors + index + model
};

struct BuildOptions {
  double sigma = kDefaultSigma;
  int threads = 1;
};

/// Voxel grid of positional information factors (N_v symmetric 6x6 blocks
/// per voxel) or positional trace factors (N_v scalars per voxel).
///
/// The information of a pose is recovered by contracting the factor near its
/// position with the rotation vector v_r(R) of the visibility model, so the
/// query cost does not depend on the number of landmarks. Voxels no landmark
/// contributes to are not stored.
class Field {
 public:
  /// Throws EmptyGrid when the grid has no voxels.
  static Field build(std::span<const Landmark> landmarks,
                     const GridConfig& config, VisibilityModelPtr model,
                     FactorKind kind, Matchability matchability = nullptr,
                     const BuildOptions& options = {});

  const GridConfig& config() const { return config_; }
  const VisibilityModel& model() const { return *model_; }
  const VisibilityModelPtr& model_ptr() const { return model_; }
  FactorKind factor_kind() const { return kind_; }
  double sigma() const { return sigma_; }
  /// Scalars stored per voxel: 36 N_v (Info) or N_v (Trace).
  int stride() const { return stride_; }
  std::size_t voxel_count() const { return slots_.size(); }

  Vec3 voxel_center(const VoxelIndex& index) const;
  std::optional<VoxelIndex> voxel_of(const Vec3& position) const;
  /// Stored factor or null (implicit zero).
  const double* factor(const VoxelIndex& index) const;
  /// Stored voxel indices in lexicographic (x, y, z) order.
  std::vector<VoxelIndex> voxel_indices() const;

  /// Throws OutOfField. Nearest: the containing voxel. Trilinear: the eight
  /// surrounding voxel centers; positions outside the inner region spanned by
  /// the centers are OutOfField.
  FactorSample query_factor(const Vec3& position, QueryMode mode) const;

  /// Approximated FIM; Trilinear blends the contracted blocks. Throws
  /// OutOfField or WrongFactorKind (Trace fields).
  Fim query_fim(const Pose& pose, QueryMode mode = QueryMode::Nearest) const;

  /// Metric of the approximated FIM. Trilinear computes the metric at each
  /// neighbour and blends the scalars. Determinant and smallest eigenvalue
  /// need an Info field.
  double query_metric(const Pose& pose, MetricKind metric,
                      QueryMode mode = QueryMode::Trilinear) const;

  /// Incremental updates using the field's matchability predicate. Each
  /// returns the number of voxels touched.
  std::size_t add_landmark(const Landmark& landmark);
  std::size_t remove_landmark(const Landmark& landmark);
  std::size_t update_landmark(const Landmark& old_landmark,
                              const Landmark& new_landmark);

  /// Matchability is not part of the file format; a loaded field starts with
  /// always_matchable() and callers re-attach their predicate here.
  void set_matchability(Matchability matchability);

  MemoryStats memory_stats() const;

  void save(const std::string& path) const;
  std::vector<std::uint8_t> serialize() const;
  /// Throws BadMagic, VersionMismatch, TruncatedFile, or WrongFactorKind
  /// when `expected` is given and differs from the stored kind.
  static Field load(const std::string& path,
                    std::optional<FactorKind> expected = std::nullopt);
  static Field deserialize(std::span<const std::uint8_t> bytes,
                           std::optional<FactorKind> expected = std::nullopt);
  /// Size of the serialized header (everything before the voxel records).
  std::uint64_t header_bytes() const;

  /// Field value v_r(R)^T C at a stored factor, written into `out`.
  void contract(const double* data, std::span<const double> rotation_vector,
                Fim& out) const;
  double contract_trace(const double* data,
                        std::span<const double> rotation_vector) const;
  /// Metric of one stored factor contracted with `rotation_vector`.
  double corner_metric(const double* data, std::span<const double> rotation_vector,
                       MetricKind metric) const;

 private:
  Field(const GridConfig& config, VisibilityModelPtr model, FactorKind kind,
        double sigma, Matchability matchability);

  static std::uint64_t pack(const VoxelIndex& index);
  double* slot_data(std::size_t slot) { return data_.data() + slot * stride_; }
  std::size_t acquire_slot(const VoxelIndex& index);
  void release_slot(const VoxelIndex& index, std::size_t slot);
  std::size_t apply_landmark(const Landmark& landmark, double sign);
  void accumulate_voxel(const Vec3& center, std::span<const Landmark> landmarks,
                        std::span<const std::size_t> contributing,
                        std::span<double> out) const;

  GridConfig config_;
  VisibilityModelPtr model_;
  FactorKind kind_;
  double sigma_;
  int stride_;
  Matchability matchability_;

  std::unordered_map<std::uint64_t, std::size_t> slots_;
  std::vector<double> data_;
  /// Number of landmarks accumulated per slot; -1 when unknown (loaded).
  std::vector<std::int32_t> contributors_;
  std::vector<std::size_t> free_slots_;
};

}  // namespace fif
