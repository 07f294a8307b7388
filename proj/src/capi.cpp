#include "fif/fif.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

#include <nlohmann/json.hpp>

#include "fif/error.hpp"
#include "fif/experiments.hpp"
#include "fif/field.hpp"
#include "fif/fim.hpp"
#include "fif/scene.hpp"
#include "fif/visibility.hpp"

struct fif_scene {
  std::vector<fif::Landmark> landmarks;
};

struct fif_model {
  fif::VisibilityModelPtr model;
};

struct fif_field {
  fif::Field field;
};

namespace {

thread_local std::string last_error;

fif_status status_of(fif::ErrorCode code) {
  return static_cast<fif_status>(static_cast<int>(code) + 1);
}

template <class F>
fif_status guard(F&& body) {
  try {
    body();
    last_error.clear();
    return FIF_OK;
  } catch (const fif::Error& e) {
    last_error = e.what();
    return status_of(e.code());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return FIF_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return FIF_INTERNAL;
  } catch (...) {
    last_error = "unknown error";
    return FIF_INTERNAL;
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw fif::Error(fif::ErrorCode::InvalidArgument, what);
}

fif::Vec3 vec(const double* p) { return fif::Vec3(p[0], p[1], p[2]); }

fif::Pose pose_of(const double* r, const double* t) {
  require(r != nullptr && t != nullptr, "null pose");
  fif::Mat3 m;
  m << r[0], r[1], r[2], r[3], r[4], r[5], r[6], r[7], r[8];
  return fif::Pose(m, vec(t));
}

void copy_fim(const fif::Fim& f, double* out) {
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 6; ++j) out[6 * i + j] = f(i, j);
  }
}

fif::QueryMode mode_of(fif_query q) {
  require(q == FIF_QUERY_NEAREST || q == FIF_QUERY_TRILINEAR, "bad query mode");
  return q == FIF_QUERY_NEAREST ? fif::QueryMode::Nearest : fif::QueryMode::Trilinear;
}

fif::MetricKind metric_of(fif_metric m) {
  switch (m) {
    case FIF_METRIC_DET: return fif::MetricKind::Determinant;
    case FIF_METRIC_MIN_EIG: return fif::MetricKind::SmallestEigenvalue;
    case FIF_METRIC_TRACE: return fif::MetricKind::Trace;
  }
  throw fif::Error(fif::ErrorCode::InvalidArgument, "bad metric");
}

fif::Landmark landmark_at(const double* xyz) {
  require(xyz != nullptr, "null landmark");
  fif::Landmark l;
  l.position = vec(xyz);
  return l;
}

}  // namespace

extern "C" {

const char* fif_status_string(fif_status status) {
  if (status == FIF_OK) return "Ok";
  if (status == FIF_INTERNAL) return "Internal";
  if (status < FIF_OK || status > FIF_INTERNAL) return "Unknown";
  return fif::to_string(static_cast<fif::ErrorCode>(static_cast<int>(status) - 1));
}

const char* fif_last_error(void) { return last_error.c_str(); }

fif_status fif_scene_create(const double* xyz, size_t count, fif_scene** out) {
  return guard([&] {
    require(out != nullptr && (xyz != nullptr || count == 0), "null argument");
    auto s = std::make_unique<fif_scene>();
    s->landmarks.resize(count);
    for (size_t i = 0; i < count; ++i) {
      s->landmarks[i].position = vec(xyz + 3 * i);
      s->landmarks[i].id = static_cast<std::int64_t>(i);
    }
    *out = s.release();
  });
}

fif_status fif_scene_load(const char* path, fif_scene** out) {
  return guard([&] {
    require(path != nullptr && out != nullptr, "null argument");
    *out = new fif_scene{fif::read_scene(path)};
  });
}

fif_status fif_scene_save(const fif_scene* scene, const char* path) {
  return guard([&] {
    require(scene != nullptr && path != nullptr, "null argument");
    fif::write_scene(path, scene->landmarks);
  });
}

size_t fif_scene_size(const fif_scene* scene) {
  return scene ? scene->landmarks.size() : 0;
}

fif_status fif_scene_landmark(const fif_scene* scene, size_t i, double xyz[3]) {
  return guard([&] {
    require(scene != nullptr && xyz != nullptr, "null argument");
    require(i < scene->landmarks.size(), "landmark index out of range");
    const fif::Vec3& p = scene->landmarks[i].position;
    xyz[0] = p.x();
    xyz[1] = p.y();
    xyz[2] = p.z();
  });
}

void fif_scene_free(fif_scene* scene) { delete scene; }

fif_status fif_model_quadratic(double alpha, double v_alpha, fif_model** out) {
  return guard([&] {
    require(out != nullptr, "null argument");
    *out = new fif_model{std::make_shared<fif::QuadraticVisibility>(alpha, v_alpha)};
  });
}

fif_status fif_model_gp(int n_samples, double alpha, fif_model** out) {
  return guard([&] {
    require(out != nullptr, "null argument");
    *out = new fif_model{fif::make_trained_gp(n_samples, alpha)};
  });
}

fif_status fif_model_parse(const char* spec, double alpha, fif_model** out) {
  return guard([&] {
    require(spec != nullptr && out != nullptr, "null argument");
    *out = new fif_model{fif::parse_model(spec, alpha)};
  });
}

int fif_model_size(const fif_model* model) { return model ? model->model->size() : 0; }

fif_status fif_model_visibility(const fif_model* model, const double rotation[9],
                                const double camera[3], const double landmark[3],
                                double* out) {
  return guard([&] {
    require(model != nullptr && camera != nullptr && landmark != nullptr && out != nullptr,
            "null argument");
    const fif::Pose pose = pose_of(rotation, camera);
    *out = model->model->evaluate(pose.rotation(), vec(camera), vec(landmark));
  });
}

void fif_model_free(fif_model* model) { delete model; }

fif_status fif_exact_fim(const fif_scene* scene, const fif_camera* camera, double sigma,
                         const double rotation[9], const double translation[3],
                         double out[36]) {
  return guard([&] {
    require(scene != nullptr && camera != nullptr && out != nullptr, "null argument");
    const auto cam =
        fif::PinholeCamera::from_horizontal_fov(camera->width, camera->height, camera->hfov);
    cam.validate();
    copy_fim(fif::exact_pose_fim(pose_of(rotation, translation), scene->landmarks, cam, sigma),
             out);
  });
}

fif_status fif_field_build(const fif_scene* scene, const fif_grid* grid,
                           const fif_model* model, fif_factor factor, double sigma,
                           double min_range, int threads, fif_field** out) {
  return guard([&] {
    require(scene != nullptr && grid != nullptr && model != nullptr && out != nullptr,
            "null argument");
    require(factor == FIF_FACTOR_INFO || factor == FIF_FACTOR_TRACE, "bad factor kind");
    fif::GridConfig g;
    g.origin = vec(grid->origin);
    g.voxel_size = grid->voxel_size;
    g.dims = {grid->dims[0], grid->dims[1], grid->dims[2]};
    fif::MatchabilitySpec spec;
    spec.min_range = min_range;
    *out = new fif_field{fif::Field::build(
        scene->landmarks, g, model->model, static_cast<fif::FactorKind>(factor),
        fif::make_matchability(spec), {sigma, threads})};
  });
}

fif_status fif_field_load(const char* path, fif_field** out) {
  return guard([&] {
    require(path != nullptr && out != nullptr, "null argument");
    *out = new fif_field{fif::Field::load(path)};
  });
}

fif_status fif_field_save(const fif_field* field, const char* path) {
  return guard([&] {
    require(field != nullptr && path != nullptr, "null argument");
    field->field.save(path);
  });
}

fif_status fif_field_query_fim(const fif_field* field, const double rotation[9],
                               const double translation[3], fif_query mode,
                               double out[36]) {
  return guard([&] {
    require(field != nullptr && out != nullptr, "null argument");
    copy_fim(field->field.query_fim(pose_of(rotation, translation), mode_of(mode)), out);
  });
}

fif_status fif_field_query_metric(const fif_field* field, const double rotation[9],
                                  const double translation[3], fif_metric metric,
                                  fif_query mode, double* out) {
  return guard([&] {
    require(field != nullptr && out != nullptr, "null argument");
    *out = field->field.query_metric(pose_of(rotation, translation), metric_of(metric),
                                     mode_of(mode));
  });
}

fif_status fif_field_add_landmark(fif_field* field, const double xyz[3], size_t* touched) {
  return guard([&] {
    require(field != nullptr, "null argument");
    const size_t n = field->field.add_landmark(landmark_at(xyz));
    if (touched) *touched = n;
  });
}

fif_status fif_field_remove_landmark(fif_field* field, const double xyz[3],
                                     size_t* touched) {
  return guard([&] {
    require(field != nullptr, "null argument");
    const size_t n = field->field.remove_landmark(landmark_at(xyz));
    if (touched) *touched = n;
  });
}

fif_status fif_field_memory(const fif_field* field, fif_memory* out) {
  return guard([&] {
    require(field != nullptr && out != nullptr, "null argument");
    const fif::MemoryStats m = field->field.memory_stats();
    *out = {m.voxel_count, m.scalars_per_voxel, m.bytes_factors, m.bytes_factors_f32,
            m.bytes_total};
  });
}

fif_factor fif_field_factor(const fif_field* field) {
  return field && field->field.factor_kind() == fif::FactorKind::Trace ? FIF_FACTOR_TRACE
                                                                       : FIF_FACTOR_INFO;
}

void fif_field_free(fif_field* field) { delete field; }

fif_status fif_run_command(const char* name, const char* config_json, char** report) {
  return guard([&] {
    require(name != nullptr && report != nullptr, "null argument");
    nlohmann::json cfg = nlohmann::json::object();
    if (config_json != nullptr && *config_json != '\0') {
      cfg = nlohmann::json::parse(config_json, nullptr, false);
      if (cfg.is_discarded()) {
        throw fif::Error(fif::ErrorCode::InvalidArgument, "config is not valid JSON");
      }
    }
    const std::string text = fif::run_command(name, cfg).dump(2);
    char* s = static_cast<char*>(std::malloc(text.size() + 1));
    if (!s) throw std::bad_alloc();
    std::memcpy(s, text.c_str(), text.size() + 1);
    *report = s;
  });
}

void fif_string_free(char* s) { std::free(s); }

}  // extern "C"
