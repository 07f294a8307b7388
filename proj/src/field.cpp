#include "fif/field.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <thread>

#include "fif/error.hpp"

namespace fif {

namespace {

constexpr std::uint32_t kFormatVersion = 1;
constexpr char kMagic[4] = {'F', 'I', 'F', '1'};
constexpr std::int32_t kMaxDim = 1 << 21;
constexpr std::size_t kChunk = 256;

// Upper-triangle (row <= col) entries of a symmetric 6x6 block.
struct UpperEntries {
  std::array<int, 21> row{};
  std::array<int, 21> col{};
  UpperEntries() {
    int e = 0;
    for (int c = 0; c < 6; ++c) {
      for (int r = 0; r <= c; ++r) {
        row[e] = r;
        col[e] = c;
        ++e;
      }
    }
  }
};
const UpperEntries kUpper;

std::vector<double>& scratch_rotation_vector(std::size_t n) {
  thread_local std::vector<double> buf;
  if (buf.size() < n) buf.resize(n);
  return buf;
}

class ByteWriter {
 public:
  template <typename T>
  void put(T value) {
    static_assert(std::is_arithmetic_v<T>);
    std::array<std::uint8_t, sizeof(T)> raw{};
    std::memcpy(raw.data(), &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) {
      std::reverse(raw.begin(), raw.end());
    }
    bytes_.insert(bytes_.end(), raw.begin(), raw.end());
  }
  void put_raw(const char* data, std::size_t n) {
    bytes_.insert(bytes_.end(), data, data + n);
  }
  std::vector<std::uint8_t>& bytes() { return bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    std::array<std::uint8_t, sizeof(T)> raw{};
    std::memcpy(raw.data(), bytes_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) {
      std::reverse(raw.begin(), raw.end());
    }
    pos_ += sizeof(T);
    T value;
    std::memcpy(&value, raw.data(), sizeof(T));
    return value;
  }
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) {
      throw Error(ErrorCode::TruncatedFile, "field file is truncated");
    }
  }
  std::size_t position() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

int stride_for(const VisibilityModel& model, FactorKind kind) {
  return kind == FactorKind::Info ? 36 * model.size() : model.size();
}

}  // namespace

void GridConfig::validate() const {
  if (!(voxel_size > 0.0) || !origin.allFinite()) {
    throw Error(ErrorCode::InvalidArgument, "voxel size must be positive");
  }
  for (std::uint32_t d : dims) {
    if (d >= static_cast<std::uint32_t>(kMaxDim)) {
      throw Error(ErrorCode::InvalidArgument, "grid dimension too large");
    }
  }
}

const char* to_string(FactorKind kind) {
  return kind == FactorKind::Info ? "info" : "trace";
}

Matchability always_matchable() {
  return [](const Vec3&, const Landmark&) { return true; };
}

Matchability make_matchability(const MatchabilitySpec& spec) {
  spec.occluders.validate();
  const double cos_max =
      spec.max_view_angle ? std::cos(*spec.max_view_angle) : -2.0;
  return [spec, cos_max](const Vec3& center, const Landmark& l) {
    const Vec3 d = l.position - center;
    const double range = d.norm();
    if (range < spec.min_range || range > spec.max_range) return false;
    if (spec.max_view_angle && l.view_direction && range > 0.0) {
      // view_direction points from the observing cameras towards the landmark.
      if (d.dot(*l.view_direction) / range < cos_max) return false;
    }
    if (!spec.occluders.empty() &&
        segment_blocked(spec.occluders, center, l.position)) {
      return false;
    }
    return true;
  };
}

// --- construction ----------------------------------------------------------

Field::Field(const GridConfig& config, VisibilityModelPtr model,
             FactorKind kind, double sigma, Matchability matchability)
    : config_(config),
      model_(std::move(model)),
      kind_(kind),
      sigma_(sigma),
      stride_(stride_for(*model_, kind)),
      matchability_(matchability ? std::move(matchability)
                                 : always_matchable()) {}

Field Field::build(std::span<const Landmark> landmarks,
                   const GridConfig& config, VisibilityModelPtr model,
                   FactorKind kind, Matchability matchability,
                   const BuildOptions& options) {
  config.validate();
  if (config.voxel_count() == 0) {
    throw Error(ErrorCode::EmptyGrid, "grid has no voxels");
  }
  if (!model) throw Error(ErrorCode::InvalidArgument, "null visibility model");
  if (!(options.sigma > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "sigma must be positive");
  }
  Field field(config, std::move(model), kind, options.sigma,
              std::move(matchability));

  struct Result {
    VoxelIndex index;
    std::int32_t contributors;
    std::vector<double> factor;
  };
  const std::uint64_t total = config.voxel_count();
  const int threads = std::max(1, std::min<int>(options.threads, 64));
  std::vector<std::vector<Result>> results(threads);

  auto worker = [&](int t) {
    std::vector<std::size_t> contributing;
    for (std::uint64_t lin = t; lin < total; lin += threads) {
      const auto i = static_cast<std::int32_t>(lin % config.dims[0]);
      const auto j = static_cast<std::int32_t>((lin / config.dims[0]) % config.dims[1]);
      const auto k = static_cast<std::int32_t>(lin / (std::uint64_t{config.dims[0]} * config.dims[1]));
      const VoxelIndex index{i, j, k};
      const Vec3 center = field.voxel_center(index);
      contributing.clear();
      for (std::size_t l = 0; l < landmarks.size(); ++l) {
        if ((landmarks[l].position - center).norm() > 1e-9 &&
            field.matchability_(center, landmarks[l])) {
          contributing.push_back(l);
        }
      }
      if (contributing.empty()) continue;
      Result r{index, static_cast<std::int32_t>(contributing.size()),
               std::vector<double>(field.stride_)};
      field.accumulate_voxel(center, landmarks, contributing, r.factor);
      results[t].push_back(std::move(r));
    }
  };
  if (threads == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker, t);
    for (auto& th : pool) th.join();
  }

  for (auto& part : results) {
    for (Result& r : part) {
      const std::size_t slot = field.acquire_slot(r.index);
      std::copy(r.factor.begin(), r.factor.end(), field.slot_data(slot));
      field.contributors_[slot] = r.contributors;
    }
  }
  return field;
}

void Field::accumulate_voxel(const Vec3& center,
                             std::span<const Landmark> landmarks,
                             std::span<const std::size_t> contributing,
                             std::span<double> out) const {
  const int n_v = model_->size();
  const int rows = kind_ == FactorKind::Info ? 21 : 1;
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(rows, n_v);
  const auto chunk = std::min(kChunk, contributing.size());
  Eigen::Matrix3Xd bearings(3, chunk);
  Eigen::MatrixXd info(rows, chunk);
  Eigen::MatrixXd vp(n_v, chunk);
  // Few landmarks (incremental updates): map each bearing instead of the sum.
  const bool direct = contributing.size() < static_cast<std::size_t>(rows);

  for (std::size_t start = 0; start < contributing.size(); start += kChunk) {
    const auto count = static_cast<Eigen::Index>(
        std::min(kChunk, contributing.size() - start));
    for (Eigen::Index c = 0; c < count; ++c) {
      const Vec3& p = landmarks[contributing[start + c]].position;
      bearings.col(c) = (p - center).normalized();
      const Fim fim = landmark_fim(center, p, sigma_);
      if (kind_ == FactorKind::Info) {
        for (int e = 0; e < 21; ++e) info(e, c) = fim(kUpper.row[e], kUpper.col[e]);
      } else {
        info(0, c) = fim.trace();
      }
    }
    if (direct) {
      model_->position_vectors(bearings.leftCols(count), vp.leftCols(count));
    } else {
      model_->position_features(bearings.leftCols(count), vp.leftCols(count));
    }
    acc.noalias() += info.leftCols(count) * vp.leftCols(count).transpose();
  }
  if (!direct) model_->apply_feature_map(acc);

  if (kind_ == FactorKind::Info) {
    for (int k = 0; k < n_v; ++k) {
      double* block = out.data() + 36 * k;
      for (int e = 0; e < 21; ++e) {
        block[kUpper.row[e] + 6 * kUpper.col[e]] = acc(e, k);
        block[kUpper.col[e] + 6 * kUpper.row[e]] = acc(e, k);
      }
    }
  } else {
    for (int k = 0; k < n_v; ++k) out[k] = acc(0, k);
  }
}

// --- storage ---------------------------------------------------------------

std::uint64_t Field::pack(const VoxelIndex& index) {
  return static_cast<std::uint64_t>(index[0]) |
         (static_cast<std::uint64_t>(index[1]) << 21) |
         (static_cast<std::uint64_t>(index[2]) << 42);
}

std::size_t Field::acquire_slot(const VoxelIndex& index) {
  const std::uint64_t key = pack(index);
  if (auto it = slots_.find(key); it != slots_.end()) return it->second;
  std::size_t slot;
  if (!free_slots_.empty()) {
    slot = free_slots_.back();
    free_slots_.pop_back();
    std::fill_n(slot_data(slot), stride_, 0.0);
    contributors_[slot] = 0;
  } else {
    slot = contributors_.size();
    data_.resize(data_.size() + stride_, 0.0);
    contributors_.push_back(0);
  }
  slots_.emplace(key, slot);
  return slot;
}

void Field::release_slot(const VoxelIndex& index, std::size_t slot) {
  slots_.erase(pack(index));
  free_slots_.push_back(slot);
}

Vec3 Field::voxel_center(const VoxelIndex& index) const {
  return config_.origin +
         config_.voxel_size * (Vec3(index[0], index[1], index[2]).array() + 0.5).matrix();
}

std::optional<VoxelIndex> Field::voxel_of(const Vec3& position) const {
  const Vec3 f = (position - config_.origin) / config_.voxel_size;
  VoxelIndex index{};
  for (int a = 0; a < 3; ++a) {
    if (!std::isfinite(f[a])) return std::nullopt;
    const double fl = std::floor(f[a]);
    if (fl < 0.0 || fl >= static_cast<double>(config_.dims[a])) {
      return std::nullopt;
    }
    index[a] = static_cast<std::int32_t>(fl);
  }
  return index;
}

const double* Field::factor(const VoxelIndex& index) const {
  for (int a = 0; a < 3; ++a) {
    if (index[a] < 0 || index[a] >= static_cast<std::int32_t>(config_.dims[a])) {
      return nullptr;
    }
  }
  auto it = slots_.find(pack(index));
  return it == slots_.end() ? nullptr : data_.data() + it->second * stride_;
}

std::vector<VoxelIndex> Field::voxel_indices() const {
  std::vector<VoxelIndex> out;
  out.reserve(slots_.size());
  for (const auto& [key, slot] : slots_) {
    (void)slot;
    out.push_back({static_cast<std::int32_t>(key & (kMaxDim - 1)),
                   static_cast<std::int32_t>((key >> 21) & (kMaxDim - 1)),
                   static_cast<std::int32_t>((key >> 42) & (kMaxDim - 1))});
  }
  std::sort(out.begin(), out.end());
  return out;
}

// --- queries ---------------------------------------------------------------

FactorSample Field::query_factor(const Vec3& position, QueryMode mode) const {
  FactorSample sample;
  if (mode == QueryMode::Nearest) {
    const auto index = voxel_of(position);
    if (!index) throw Error(ErrorCode::OutOfField, "position outside the field");
    sample.corners[0] = {*index, factor(*index), 1.0};
    sample.count = 1;
    return sample;
  }

  std::array<std::int32_t, 3> lo{};
  std::array<std::int32_t, 3> hi{};
  std::array<double, 3> t{};
  const Vec3 f = (position - config_.origin) / config_.voxel_size;
  for (int a = 0; a < 3; ++a) {
    const auto dim = static_cast<std::int32_t>(config_.dims[a]);
    if (dim == 1) {
      // A single layer has no neighbour to blend with; stay inside it.
      if (!(f[a] >= 0.0 && f[a] < 1.0)) {
        throw Error(ErrorCode::OutOfField, "position outside the field");
      }
      lo[a] = hi[a] = 0;
      t[a] = 0.0;
      continue;
    }
    const double c = f[a] - 0.5;  // continuous index in voxel-center units
    if (!(c >= 0.0 && c <= dim - 1)) {
      throw Error(ErrorCode::OutOfField,
                  "position outside the interpolation region of the field");
    }
    lo[a] = std::min(static_cast<std::int32_t>(std::floor(c)), dim - 2);
    hi[a] = lo[a] + 1;
    t[a] = c - lo[a];
  }
  for (int corner = 0; corner < 8; ++corner) {
    VoxelIndex index{};
    double w = 1.0;
    for (int a = 0; a < 3; ++a) {
      const bool upper = (corner >> a) & 1;
      index[a] = upper ? hi[a] : lo[a];
      w *= upper ? t[a] : 1.0 - t[a];
    }
    if (w == 0.0) continue;
    sample.corners[sample.count++] = {index, factor(index), w};
  }
  return sample;
}

void Field::contract(const double* data, std::span<const double> vr,
                     Fim& out) const {
  const int n_v = model_->size();
  Eigen::Map<const Eigen::Matrix<double, 36, Eigen::Dynamic>> blocks(data, 36, n_v);
  Eigen::Map<const Eigen::VectorXd> v(vr.data(), n_v);
  Eigen::Map<Eigen::Matrix<double, 36, 1>>(out.data()).noalias() = blocks * v;
}

double Field::contract_trace(const double* data,
                             std::span<const double> vr) const {
  const int n_v = model_->size();
  if (kind_ == FactorKind::Trace) {
    double s = 0.0;
    for (int k = 0; k < n_v; ++k) s += data[k] * vr[k];
    return s;
  }
  double s = 0.0;
  for (int k = 0; k < n_v; ++k) {
    const double* b = data + 36 * k;
    s += vr[k] * (b[0] + b[7] + b[14] + b[21] + b[28] + b[35]);
  }
  return s;
}

Fim Field::query_fim(const Pose& pose, QueryMode mode) const {
  if (kind_ != FactorKind::Info) {
    throw Error(ErrorCode::WrongFactorKind, "FIM query needs an info field");
  }
  const FactorSample sample = query_factor(pose.translation(), mode);
  const auto n_v = static_cast<std::size_t>(model_->size());
  auto& buf = scratch_rotation_vector(n_v);
  std::span<double> vr(buf.data(), n_v);
  model_->rotation_vector(optical_axis(pose.rotation()), vr);

  Fim sum = Fim::Zero();
  Fim tmp;
  for (int c = 0; c < sample.count; ++c) {
    const FactorCorner& corner = sample.corners[c];
    if (!corner.data) continue;
    contract(corner.data, vr, tmp);
    if (sample.count == 1) return tmp;
    sum += corner.weight * tmp;
  }
  return sum;
}

double Field::query_metric(const Pose& pose, MetricKind metric,
                           QueryMode mode) const {
  if (kind_ == FactorKind::Trace && metric != MetricKind::Trace) {
    throw Error(ErrorCode::WrongFactorKind,
                "determinant and smallest eigenvalue need an info field");
  }
  const FactorSample sample = query_factor(pose.translation(), mode);
  const auto n_v = static_cast<std::size_t>(model_->size());
  auto& buf = scratch_rotation_vector(n_v);
  std::span<double> vr(buf.data(), n_v);
  model_->rotation_vector(optical_axis(pose.rotation()), vr);

  double value = 0.0;
  for (int c = 0; c < sample.count; ++c) {
    const FactorCorner& corner = sample.corners[c];
    if (!corner.data) continue;  // zero factor: every metric is zero
    value += corner.weight * corner_metric(corner.data, vr, metric);
  }
  return value;
}

double Field::corner_metric(const double* data, std::span<const double> vr,
                            MetricKind metric) const {
  if (metric == MetricKind::Trace) return contract_trace(data, vr);
  Fim tmp;
  contract(data, vr, tmp);
  return fim_metric(tmp, metric);
}

// --- incremental updates ---------------------------------------------------

void Field::set_matchability(Matchability matchability) {
  matchability_ = matchability ? std::move(matchability) : always_matchable();
}

std::size_t Field::apply_landmark(const Landmark& landmark, double sign) {
  std::size_t touched = 0;
  std::vector<double> contribution(stride_);
  const std::size_t single[1] = {0};
  for (std::uint32_t k = 0; k < config_.dims[2]; ++k) {
    for (std::uint32_t j = 0; j < config_.dims[1]; ++j) {
      for (std::uint32_t i = 0; i < config_.dims[0]; ++i) {
        const VoxelIndex index{static_cast<std::int32_t>(i),
                               static_cast<std::int32_t>(j),
                               static_cast<std::int32_t>(k)};
        const Vec3 center = voxel_center(index);
        if (!((landmark.position - center).norm() > 1e-9) ||
            !matchability_(center, landmark)) {
          continue;
        }
        accumulate_voxel(center, std::span<const Landmark>(&landmark, 1),
                         single, contribution);
        const std::size_t slot = acquire_slot(index);
        double* dst = slot_data(slot);
        for (int s = 0; s < stride_; ++s) dst[s] += sign * contribution[s];
        std::int32_t& count = contributors_[slot];
        if (count >= 0) {
          count += sign > 0 ? 1 : -1;
          if (count == 0) release_slot(index, slot);
        }
        ++touched;
      }
    }
  }
  return touched;
}

std::size_t Field::add_landmark(const Landmark& landmark) {
  return apply_landmark(landmark, 1.0);
}

std::size_t Field::remove_landmark(const Landmark& landmark) {
  return apply_landmark(landmark, -1.0);
}

std::size_t Field::update_landmark(const Landmark& old_landmark,
                                   const Landmark& new_landmark) {
  return remove_landmark(old_landmark) + add_landmark(new_landmark);
}

// --- memory ----------------------------------------------------------------

MemoryStats Field::memory_stats() const {
  MemoryStats m;
  m.voxel_count = slots_.size();
  m.scalars_per_voxel = static_cast<std::uint64_t>(stride_);
  m.bytes_factors = m.voxel_count * m.scalars_per_voxel * sizeof(double);
  m.bytes_factors_f32 = m.voxel_count * m.scalars_per_voxel * sizeof(float);
  // Hash node (key, slot, next pointer) plus bucket pointer and count.
  const std::uint64_t index_bytes =
      m.voxel_count * (sizeof(std::uint64_t) + sizeof(std::size_t) +
                       2 * sizeof(void*) + sizeof(std::int32_t));
  std::uint64_t model_bytes = 0;
  if (const auto* gp = dynamic_cast<const GpVisibility*>(model_.get())) {
    const auto n = static_cast<std::uint64_t>(gp->size());
    model_bytes = 2 * n * n * sizeof(double) + 6 * n * sizeof(double);
  } else {
    model_bytes = 4 * sizeof(double);
  }
  m.bytes_total = m.bytes_factors + index_bytes + model_bytes;
  return m;
}

// --- serialization ---------------------------------------------------------

std::uint64_t Field::header_bytes() const {
  std::uint64_t n = 4 + 4 + 1 + 1 + 8;  // magic, version, kinds, alpha
  if (model_->kind() == VisibilityKind::Quadratic) {
    n += 3 * 8;
  } else {
    n += 4 + 3 * 8 * static_cast<std::uint64_t>(model_->size()) + 4 * 8;
  }
  n += 8;              // sigma
  n += 3 * 8 + 8 + 3 * 4;  // grid
  n += 8;              // voxel count
  return n;
}

std::vector<std::uint8_t> Field::serialize() const {
  ByteWriter w;
  w.put_raw(kMagic, 4);
  w.put<std::uint32_t>(kFormatVersion);
  w.put<std::uint8_t>(static_cast<std::uint8_t>(kind_));
  w.put<std::uint8_t>(static_cast<std::uint8_t>(model_->kind()));
  w.put<double>(model_->half_fov());
  if (const auto* q = dynamic_cast<const QuadraticVisibility*>(model_.get())) {
    w.put<double>(q->coefficients().k2);
    w.put<double>(q->coefficients().k1);
    w.put<double>(q->coefficients().k0);
  } else if (const auto* g = dynamic_cast<const GpVisibility*>(model_.get())) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(g->size()));
    for (const Vec3& z : g->samples()) {
      w.put<double>(z.x());
      w.put<double>(z.y());
      w.put<double>(z.z());
    }
    w.put<double>(g->params().sigma2);
    w.put<double>(g->params().length_scale);
    w.put<double>(g->params().jitter);
    w.put<double>(g->sigmoid_slope());
  } else {
    throw Error(ErrorCode::InvalidArgument,
                "visibility model has no file representation");
  }
  w.put<double>(sigma_);
  for (int a = 0; a < 3; ++a) w.put<double>(config_.origin[a]);
  w.put<double>(config_.voxel_size);
  for (int a = 0; a < 3; ++a) w.put<std::uint32_t>(config_.dims[a]);
  w.put<std::uint64_t>(slots_.size());
  for (const VoxelIndex& index : voxel_indices()) {
    for (int a = 0; a < 3; ++a) w.put<std::int32_t>(index[a]);
    const double* data = factor(index);
    for (int s = 0; s < stride_; ++s) w.put<double>(data[s]);
  }
  return std::move(w.bytes());
}

void Field::save(const std::string& path) const {
  const std::vector<std::uint8_t> bytes = serialize();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot open '" + path + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoError, "failed writing '" + path + "'");
}

Field Field::load(const std::string& path, std::optional<FactorKind> expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return deserialize(bytes, expected);
}

Field Field::deserialize(std::span<const std::uint8_t> bytes,
                         std::optional<FactorKind> expected) {
  ByteReader r(bytes);
  r.need(4);
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw Error(ErrorCode::BadMagic, "not a field file (bad magic)");
  }
  for (int i = 0; i < 4; ++i) r.get<std::uint8_t>();
  const auto version = r.get<std::uint32_t>();
  if (version != kFormatVersion) {
    throw Error(ErrorCode::VersionMismatch,
                "unsupported field file version " + std::to_string(version));
  }
  const auto kind_raw = r.get<std::uint8_t>();
  if (kind_raw > 1) {
    throw Error(ErrorCode::BadMagic, "unknown factor kind in field file");
  }
  const auto kind = static_cast<FactorKind>(kind_raw);
  if (expected && *expected != kind) {
    throw Error(ErrorCode::WrongFactorKind,
                std::string("field file holds ") + to_string(kind) +
                    " factors, expected " + to_string(*expected));
  }
  const auto model_kind = r.get<std::uint8_t>();
  const double alpha = r.get<double>();
  VisibilityModelPtr model;
  if (model_kind == static_cast<std::uint8_t>(VisibilityKind::Quadratic)) {
    QuadCoefficients k;
    k.k2 = r.get<double>();
    k.k1 = r.get<double>();
    k.k0 = r.get<double>();
    model = std::make_shared<const QuadraticVisibility>(alpha, k);
  } else if (model_kind ==
             static_cast<std::uint8_t>(VisibilityKind::GaussianProcess)) {
    const auto n = r.get<std::uint32_t>();
    r.need(std::uint64_t{n} * 24);
    std::vector<Vec3> samples(n);
    for (auto& z : samples) {
      const double x = r.get<double>();
      const double y = r.get<double>();
      z = Vec3(x, y, r.get<double>());
    }
    SeKernelParams params;
    params.sigma2 = r.get<double>();
    params.length_scale = r.get<double>();
    params.jitter = r.get<double>();
    const double k_s = r.get<double>();
    model = gp_build(samples, params, alpha, k_s);
  } else {
    throw Error(ErrorCode::BadMagic, "unknown visibility model in field file");
  }
  const double sigma = r.get<double>();
  GridConfig config;
  for (int a = 0; a < 3; ++a) config.origin[a] = r.get<double>();
  config.voxel_size = r.get<double>();
  for (int a = 0; a < 3; ++a) config.dims[a] = r.get<std::uint32_t>();
  config.validate();
  const auto count = r.get<std::uint64_t>();

  Field field(config, std::move(model), kind, sigma, nullptr);
  const std::uint64_t record = 12 + 8 * static_cast<std::uint64_t>(field.stride_);
  if (count > r.remaining() / record) {
    throw Error(ErrorCode::TruncatedFile, "field file is truncated");
  }
  field.data_.reserve(count * field.stride_);
  for (std::uint64_t v = 0; v < count; ++v) {
    VoxelIndex index{};
    for (int a = 0; a < 3; ++a) index[a] = r.get<std::int32_t>();
    for (int a = 0; a < 3; ++a) {
      if (index[a] < 0 || index[a] >= static_cast<std::int32_t>(config.dims[a])) {
        throw Error(ErrorCode::InvalidArgument, "voxel index outside the grid");
      }
    }
    const std::size_t slot = field.acquire_slot(index);
    field.contributors_[slot] = -1;
    double* dst = field.slot_data(slot);
    for (int s = 0; s < field.stride_; ++s) dst[s] = r.get<double>();
  }
  return field;
}

}  // namespace fif
