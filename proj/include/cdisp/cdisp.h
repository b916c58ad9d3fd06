#ifndef CDISP_H
#define CDISP_H

/*
 * C interface to the cdisp library. Every object is an opaque handle owned by
 * the caller and released with its *_free function. Functions return a
 * cdisp_status; on failure cdisp_last_error() describes the problem for the
 * calling thread until its next failing call. Strings returned through char**
 * are released with cdisp_string_free.
 */

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(CDISP_BUILDING)
#define CDISP_API __attribute__((visibility("default")))
#else
#define CDISP_API
#endif

typedef enum cdisp_status {
  CDISP_OK = 0,
  CDISP_ERR_INVALID_DISTRIBUTION = 1,
  CDISP_ERR_INVALID_INPUT = 2,
  CDISP_ERR_DOMAIN = 3,
  CDISP_ERR_MISSING_GROUND_TRUTH = 4,
  CDISP_ERR_EMPTY_SET = 5,
  CDISP_ERR_FORMAT = 6,
  CDISP_ERR_PARSE = 7,
  CDISP_ERR_SPEC = 8,
  CDISP_ERR_IO = 9,
  CDISP_ERR_INTERNAL = 10
} cdisp_status;

typedef struct cdisp_mixture cdisp_mixture;
typedef struct cdisp_scene cdisp_scene; /* left, right and ground truth */
typedef struct cdisp_map cdisp_map;
typedef struct cdisp_model cdisp_model;

CDISP_API const char* cdisp_last_error(void);
CDISP_API const char* cdisp_status_name(cdisp_status status);
CDISP_API void cdisp_string_free(char* s);

/* ---- transport ---- */

CDISP_API cdisp_status cdisp_mixture_create(const double* locations, const double* weights, size_t n,
                                            cdisp_mixture** out);
CDISP_API void cdisp_mixture_free(cdisp_mixture* m);
CDISP_API size_t cdisp_mixture_size(const cdisp_mixture* m);
/* Copies the canonical atoms; either output may be NULL. */
CDISP_API cdisp_status cdisp_mixture_atoms(const cdisp_mixture* m, double* locations, double* weights);
CDISP_API cdisp_status cdisp_wp_general(const cdisp_mixture* a, const cdisp_mixture* b, double p, double* out);
CDISP_API cdisp_status cdisp_w1_cdf_area(const cdisp_mixture* a, const cdisp_mixture* b, double* out);
CDISP_API cdisp_status cdisp_wp_to_dirac(const cdisp_mixture* a, double target, double p, double* out);

/* ---- scenes and maps ---- */

/* scene_json NULL selects the built-in default scene. */
CDISP_API cdisp_status cdisp_scene_synth(const char* scene_json, cdisp_scene** out);
/* Named presets: "default", "boundary-heavy". Writes the JSON spec. */
CDISP_API cdisp_status cdisp_scene_preset(const char* name, char** scene_json);
/* Reads left.pgm, right.pgm and gt.pfm from a directory. */
CDISP_API cdisp_status cdisp_scene_load(const char* dir, cdisp_scene** out);
/* Writes left.pgm, right.pgm and gt.pfm into an existing directory. */
CDISP_API cdisp_status cdisp_scene_save(const cdisp_scene* scene, const char* dir);
CDISP_API void cdisp_scene_free(cdisp_scene* scene);
/* Borrowed view of the ground truth; valid while the scene lives. */
CDISP_API const cdisp_map* cdisp_scene_gt(const cdisp_scene* scene);

CDISP_API cdisp_status cdisp_map_load_pfm(const char* path, cdisp_map** out);
CDISP_API cdisp_status cdisp_map_save_pfm(const cdisp_map* map, const char* path);
CDISP_API void cdisp_map_free(cdisp_map* map);
CDISP_API int cdisp_map_width(const cdisp_map* map);
CDISP_API int cdisp_map_height(const cdisp_map* map);
/* Row-major values; invalid pixels are written as 0 when `valid` is NULL. */
CDISP_API cdisp_status cdisp_map_values(const cdisp_map* map, double* values, uint8_t* valid);

/* ---- training and prediction ---- */

typedef struct cdisp_fit_config {
  double grid_origin;
  double bin_size;
  int bins;
  int window;
  const char* loss; /* w1, w2sq, kl-laplace, kl-gaussian, smooth-l1 */
  int offsets;      /* nonzero trains the offset head */
  int multimodal;
  int mm_k;
  double mm_alpha;
  int steps;
  double step_size;
  uint64_t seed;
} cdisp_fit_config;

/* Desk defaults: grid 0 / 2 / 12, window 5, w1 with offsets, 2000 steps of 0.02. */
CDISP_API void cdisp_fit_config_default(cdisp_fit_config* config);

CDISP_API cdisp_status cdisp_fit(const cdisp_scene* scene, const cdisp_fit_config* config, cdisp_model** out);
CDISP_API void cdisp_model_free(cdisp_model* model);
/* Loss before each update; `trace` holds cdisp_model_trace_length values. */
CDISP_API size_t cdisp_model_trace_length(const cdisp_model* model);
CDISP_API cdisp_status cdisp_model_trace(const cdisp_model* model, double* trace);
CDISP_API cdisp_status cdisp_model_to_json(const cdisp_model* model, char** json);
CDISP_API cdisp_status cdisp_model_from_json(const char* json, cdisp_model** out);

/* readout: mean-grid, mean-mixture or mode-offset. */
CDISP_API cdisp_status cdisp_predict(const cdisp_scene* scene, const cdisp_model* model, const char* readout,
                                     cdisp_map** out);

/* ---- evaluation and experiments ---- */

typedef struct cdisp_eval_config {
  int has_boundary_threshold;
  double boundary_threshold;
  int has_rig;
  double focal_length;
  double baseline;
} cdisp_eval_config;

/* config may be NULL. */
CDISP_API cdisp_status cdisp_evaluate(const cdisp_map* pred, const cdisp_map* gt, const cdisp_eval_config* config,
                                      char** report_json);

/* Runs every check suite; *all_passed is 1 iff each suite is within tolerance. */
CDISP_API cdisp_status cdisp_run_checks(uint64_t seed, char** summary, int* all_passed);

/* scene_json NULL selects the default scene. */
CDISP_API cdisp_status cdisp_ablate(const char* scene_json, int steps, double step_size, uint64_t seed,
                                    char** csv);

#ifdef __cplusplus
}
#endif

#endif /* CDISP_H */
