#ifndef SCOOPFLOW_SCOOPFLOW_H
#define SCOOPFLOW_SCOOPFLOW_H

/*
 * C interface to the scoopflow scene-flow library.
 *
 * Objects are opaque handles created by sf_*_create / sf_*_load and released
 * with the matching sf_*_free. Every fallible call returns an sf_status; on
 * failure a description is available from sf_last_error() on the same thread
 * until the next failing call. Handles are not synchronized: share a handle
 * across threads only for read-only calls.
 *
 * Arrays of 3D vectors are passed as n * 3 doubles, row-major (x0 y0 z0 x1 ...).
 */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(SCOOPFLOW_BUILDING)
#    define SCOOPFLOW_API __declspec(dllexport)
#  else
#    define SCOOPFLOW_API __declspec(dllimport)
#  endif
#else
#  define SCOOPFLOW_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sf_status {
  SF_OK = 0,
  SF_ERR_INVALID_INPUT = 1,
  SF_ERR_PARSE = 2,
  SF_ERR_DEGENERATE_FEATURE = 3,
  SF_ERR_SHAPE_MISMATCH = 4,
  SF_ERR_DEGENERATE_TRANSPORT = 5,
  SF_ERR_NUMERICAL_DIVERGENCE = 6,
  SF_ERR_IO = 7,
  SF_ERR_INTERNAL = 8
} sf_status;

typedef struct sf_cloud sf_cloud;
typedef struct sf_config sf_config;
typedef struct sf_synth_spec sf_synth_spec;
typedef struct sf_result sf_result;

typedef struct sf_metric_report {
  double epe;     /* meters */
  double as_pct;  /* strict accuracy, percent */
  double ar_pct;  /* relaxed accuracy, percent */
  double out_pct; /* outliers, percent */
  size_t n;
} sf_metric_report;

typedef struct sf_loss_report {
  double dist;
  double conf;
  double flow;
  double total;
} sf_loss_report;

typedef enum sf_flow_kind {
  SF_FLOW_INITIAL = 0, /* correspondence-based flow */
  SF_FLOW_REFINED = 1, /* initial + residual; only when refinement ran */
  SF_FLOW_FINAL = 2    /* refined when available, else initial */
} sf_flow_kind;

SCOOPFLOW_API const char* sf_version(void);
SCOOPFLOW_API const char* sf_status_name(sf_status status);
SCOOPFLOW_API const char* sf_last_error(void);

/* ---- point clouds ---------------------------------------------------- */

/* gt_flow may be NULL. Coordinates must be finite and n >= 1. */
SCOOPFLOW_API sf_status sf_cloud_create(const double* xyz, size_t n, const double* gt_flow, sf_cloud** out);
/* Format from the extension (.ply, .sfb) or the file's magic bytes. */
SCOOPFLOW_API sf_status sf_cloud_load(const char* path, sf_cloud** out);
/* .sfb writes SFB; .ply writes binary little-endian PLY; ascii=1 forces ASCII PLY. */
SCOOPFLOW_API sf_status sf_cloud_save(const sf_cloud* cloud, const char* path, int ascii);
SCOOPFLOW_API void sf_cloud_free(sf_cloud* cloud);
SCOOPFLOW_API size_t sf_cloud_size(const sf_cloud* cloud);
SCOOPFLOW_API int sf_cloud_has_flow(const sf_cloud* cloud);
/* Copies n * 3 values; capacity is in doubles. */
SCOOPFLOW_API sf_status sf_cloud_points(const sf_cloud* cloud, double* out, size_t capacity);
SCOOPFLOW_API sf_status sf_cloud_flow(const sf_cloud* cloud, double* out, size_t capacity);
/* Attaches ground truth read from a 3-channel SFB flow file. */
SCOOPFLOW_API sf_status sf_cloud_attach_flow_file(sf_cloud* cloud, const char* path);

/* ---- configuration --------------------------------------------------- */

SCOOPFLOW_API sf_status sf_config_create(sf_config** out);
SCOOPFLOW_API sf_status sf_config_clone(const sf_config* cfg, sf_config** out);
SCOOPFLOW_API void sf_config_free(sf_config* cfg);
/* key = value, e.g. ("k_s", "64"), ("refine", "off"), ("k_s", "all"). */
SCOOPFLOW_API sf_status sf_config_set(sf_config* cfg, const char* key, const char* value);
/* Writes the NUL-terminated value into buf; *needed receives the size
 * including the terminator. Returns SF_ERR_INVALID_INPUT if buf is too small. */
SCOOPFLOW_API sf_status sf_config_get(const sf_config* cfg, const char* key, char* buf, size_t capacity,
                                      size_t* needed);
/* Checks cross-field invariants. */
SCOOPFLOW_API sf_status sf_config_validate(const sf_config* cfg);

/* ---- estimation ------------------------------------------------------ */

/* Full pipeline on one scene pair; direct or chunked per the "inference" key.
 * Metrics are computed when the source carries ground-truth flow. */
SCOOPFLOW_API sf_status sf_estimate(const sf_cloud* source, const sf_cloud* target, const sf_config* cfg,
                                    sf_result** out);
SCOOPFLOW_API sf_status sf_estimate_direct(const sf_cloud* source, const sf_cloud* target, const sf_config* cfg,
                                           sf_result** out);
SCOOPFLOW_API sf_status sf_estimate_chunked(const sf_cloud* source, const sf_cloud* target, const sf_config* cfg,
                                            sf_result** out);
/* Refines an external flow (n * 3 doubles) with confidence fixed to 1. */
SCOOPFLOW_API sf_status sf_refine_external(const sf_cloud* source, const sf_cloud* target, const double* flow,
                                           size_t n, const sf_config* cfg, sf_result** out);
SCOOPFLOW_API sf_status sf_refine_external_file(const sf_cloud* source, const sf_cloud* target,
                                                const char* flow_path, const sf_config* cfg, sf_result** out);

SCOOPFLOW_API void sf_result_free(sf_result* result);
SCOOPFLOW_API size_t sf_result_size(const sf_result* result);
SCOOPFLOW_API int sf_result_refined(const sf_result* result);
SCOOPFLOW_API sf_status sf_result_flow(const sf_result* result, sf_flow_kind kind, double* out, size_t capacity);
SCOOPFLOW_API sf_status sf_result_confidence(const sf_result* result, double* out, size_t capacity);
/* Returns SF_ERR_INVALID_INPUT when the requested report is absent. */
SCOOPFLOW_API sf_status sf_result_metrics(const sf_result* result, sf_flow_kind kind, sf_metric_report* out);
SCOOPFLOW_API sf_status sf_result_losses(const sf_result* result, int at_end, sf_loss_report* out);
/* Writes the chosen flow as a 3-channel SFB file. */
SCOOPFLOW_API sf_status sf_result_save_flow(const sf_result* result, sf_flow_kind kind, const char* path);
/* JSON record; same buffer protocol as sf_config_get. */
SCOOPFLOW_API sf_status sf_result_json(const sf_result* result, int include_timings, char* buf, size_t capacity,
                                       size_t* needed);

/* ---- metrics --------------------------------------------------------- */

SCOOPFLOW_API sf_status sf_metrics(const double* pred, const double* gt, size_t n, sf_metric_report* out);

/* ---- synthetic scenes ------------------------------------------------ */

SCOOPFLOW_API sf_status sf_synth_create(sf_synth_spec** out);
SCOOPFLOW_API void sf_synth_free(sf_synth_spec* spec);
SCOOPFLOW_API sf_status sf_synth_set(sf_synth_spec* spec, const char* key, const char* value);
/* Source carries the ground-truth flow. */
SCOOPFLOW_API sf_status sf_synth_generate(const sf_synth_spec* spec, sf_cloud** source, sf_cloud** target);

#ifdef __cplusplus
}
#endif

#endif /* SCOOPFLOW_SCOOPFLOW_H */
