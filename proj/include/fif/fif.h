/* C interface to the fif library. All functions return a fif_status; on
 * failure fif_last_error() describes the problem for the calling thread.
 * Matrices are row-major. Poses are camera-to-world (R, t). */
#ifndef FIF_H
#define FIF_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(__GNUC__)
#define FIF_API __attribute__((visibility("default")))
#else
#define FIF_API
#endif

typedef enum fif_status {
  FIF_OK = 0,
  FIF_INVALID_ARGUMENT = 1,
  FIF_DEGENERATE_POINT = 2,
  FIF_TOO_FEW_SAMPLES = 3,
  FIF_SINGULAR_FOV = 4,
  FIF_SINGULAR_GRAM = 5,
  FIF_EMPTY_GRID = 6,
  FIF_OUT_OF_FIELD = 7,
  FIF_WRONG_FACTOR_KIND = 8,
  FIF_BAD_MAGIC = 9,
  FIF_VERSION_MISMATCH = 10,
  FIF_TRUNCATED_FILE = 11,
  FIF_IO_ERROR = 12,
  FIF_NO_PATH = 13,
  FIF_SINGULAR_COST_MATRIX = 14,
  FIF_INTERNAL = 15
} fif_status;

typedef enum fif_factor { FIF_FACTOR_INFO = 0, FIF_FACTOR_TRACE = 1 } fif_factor;
typedef enum fif_query { FIF_QUERY_NEAREST = 0, FIF_QUERY_TRILINEAR = 1 } fif_query;
typedef enum fif_metric {
  FIF_METRIC_DET = 0,
  FIF_METRIC_MIN_EIG = 1,
  FIF_METRIC_TRACE = 2
} fif_metric;

typedef struct fif_scene fif_scene;
typedef struct fif_model fif_model;
typedef struct fif_field fif_field;

typedef struct fif_grid {
  double origin[3]; /* min corner */
  double voxel_size;
  uint32_t dims[3];
} fif_grid;

typedef struct fif_camera {
  int width;
  int height;
  double hfov; /* radians */
} fif_camera;

typedef struct fif_memory {
  uint64_t voxel_count;
  uint64_t scalars_per_voxel;
  uint64_t bytes_factors;
  uint64_t bytes_factors_f32;
  uint64_t bytes_total;
} fif_memory;

FIF_API const char* fif_status_string(fif_status status);
/* Message of the last failed call on this thread; "" when none. */
FIF_API const char* fif_last_error(void);

/* Scenes: landmark positions, xyz interleaved. */
FIF_API fif_status fif_scene_create(const double* xyz, size_t count, fif_scene** out);
FIF_API fif_status fif_scene_load(const char* path, fif_scene** out);
FIF_API fif_status fif_scene_save(const fif_scene* scene, const char* path);
FIF_API size_t fif_scene_size(const fif_scene* scene);
FIF_API fif_status fif_scene_landmark(const fif_scene* scene, size_t i, double xyz[3]);
FIF_API void fif_scene_free(fif_scene* scene);

/* Visibility models. alpha is the half field of view in radians. */
FIF_API fif_status fif_model_quadratic(double alpha, double v_alpha, fif_model** out);
FIF_API fif_status fif_model_gp(int n_samples, double alpha, fif_model** out);
/* "quad:<v_alpha>" or "gp:<n_samples>". */
FIF_API fif_status fif_model_parse(const char* spec, double alpha, fif_model** out);
FIF_API int fif_model_size(const fif_model* model);
FIF_API fif_status fif_model_visibility(const fif_model* model, const double rotation[9],
                                        const double camera[3], const double landmark[3],
                                        double* out);
FIF_API void fif_model_free(fif_model* model);

/* Exact point-cloud FIM, the reference the field approximates. */
FIF_API fif_status fif_exact_fim(const fif_scene* scene, const fif_camera* camera,
                                 double sigma, const double rotation[9],
                                 const double translation[3], double out[36]);

/* Fields. min_range rejects landmarks closer than that to a voxel center. */
FIF_API fif_status fif_field_build(const fif_scene* scene, const fif_grid* grid,
                                   const fif_model* model, fif_factor factor,
                                   double sigma, double min_range, int threads,
                                   fif_field** out);
FIF_API fif_status fif_field_load(const char* path, fif_field** out);
FIF_API fif_status fif_field_save(const fif_field* field, const char* path);
FIF_API fif_status fif_field_query_fim(const fif_field* field, const double rotation[9],
                                       const double translation[3], fif_query mode,
                                       double out[36]);
FIF_API fif_status fif_field_query_metric(const fif_field* field, const double rotation[9],
                                          const double translation[3], fif_metric metric,
                                          fif_query mode, double* out);
/* touched may be NULL. */
FIF_API fif_status fif_field_add_landmark(fif_field* field, const double xyz[3],
                                          size_t* touched);
FIF_API fif_status fif_field_remove_landmark(fif_field* field, const double xyz[3],
                                             size_t* touched);
FIF_API fif_status fif_field_memory(const fif_field* field, fif_memory* out);
FIF_API fif_factor fif_field_factor(const fif_field* field);
FIF_API void fif_field_free(fif_field* field);

/* Runs a named experiment with a JSON config. On success *report holds the
 * JSON report, to be released with fif_string_free. */
FIF_API fif_status fif_run_command(const char* name, const char* config_json,
                                   char** report);
FIF_API void fif_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif
