#ifndef OTTV_H
#define OTTV_H

/* C interface to the ottv restoration library.
 *
 * Objects are opaque handles released with the matching *_free function.
 * Every fallible call returns an ottv_status; on failure ottv_last_error()
 * describes the most recent error raised on the calling thread. Handles may
 * be moved between threads but must not be used concurrently. */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(OTTV_BUILDING_LIBRARY)
#    define OTTV_API __declspec(dllexport)
#  else
#    define OTTV_API __declspec(dllimport)
#  endif
#else
#  define OTTV_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ottv_status {
  OTTV_OK = 0,
  OTTV_ERR_INVALID_ARGUMENT = 1,
  OTTV_ERR_SHAPE = 2,
  OTTV_ERR_NUMERICAL = 3,
  OTTV_ERR_IO = 4,
  OTTV_ERR_CALIBRATION = 5,
  OTTV_ERR_INTERNAL = 6
} ottv_status;

typedef enum ottv_model { OTTV_MODEL_OTTV = 0, OTTV_MODEL_ROF = 1, OTTV_MODEL_MTV = 2 } ottv_model;

typedef enum ottv_blur { OTTV_BLUR_NONE = 0, OTTV_BLUR_GAUSSIAN = 1, OTTV_BLUR_BOX = 2 } ottv_blur;

typedef enum ottv_component {
  OTTV_COMPONENT_U = 0,         /* cartoon */
  OTTV_COMPONENT_V = 1,         /* texture */
  OTTV_COMPONENT_W = 2,         /* f - K*u - v */
  OTTV_COMPONENT_RESIDUAL = 3,  /* f - K*u */
  OTTV_COMPONENT_BLURRED_U = 4, /* K*u */
  OTTV_COMPONENT_POTENTIAL = 5
} ottv_component;

typedef enum ottv_trace { OTTV_TRACE_OUTER = 0, OTTV_TRACE_PDHG = 1, OTTV_TRACE_ALM = 2 } ottv_trace;

typedef enum ottv_knob { OTTV_KNOB_ALPHA = 0, OTTV_KNOB_LAMBDA = 1 } ottv_knob;

typedef struct ottv_field ottv_field;
typedef struct ottv_result ottv_result;

/* Model and solver settings. Fields documented as "<= 0: default" fall back
 * to the library's grid-dependent defaults. */
typedef struct ottv_params {
  ottv_model model;
  double alpha;         /* fidelity weight */
  double lambda;        /* transport weight (OTTV only) */
  int use_mtv;          /* OTTV with the modified-TV regularizer */
  double mtv_a;         /* modified-TV threshold */
  ottv_blur blur;       /* forward operator K */
  double blur_width;    /* Gaussian sigma or box radius, in pixels */
  double pdhg_tau;
  double pdhg_eps;      /* <= 0: default */
  size_t pdhg_max_iters;
  double alm_r;         /* <= 0: default */
  double alm_tol_u;
  double alm_tol_res;
  size_t alm_max_iters;
  size_t max_outer;
  double outer_tol;
} ottv_params;

typedef struct ottv_metrics {
  double energy;
  double regularizer;
  double fidelity;
  double transport;
  double transport_lagrangian;
  double residual_norm;  /* |f - K*u| */
  double remainder_norm; /* |f - K*u - v| */
  double texture_norm;   /* |v| */
  size_t outer_iterations;
  size_t pdhg_iterations;
  size_t alm_iterations;
  int converged;
} ottv_metrics;

OTTV_API const char* ottv_version(void);
OTTV_API const char* ottv_last_error(void);
OTTV_API const char* ottv_status_name(ottv_status status);

/* Fields: n x n samples, row-major, spacing h. */
OTTV_API ottv_status ottv_field_create(size_t n, double h, const double* values, ottv_field** out);
OTTV_API ottv_status ottv_field_load(const char* path, ottv_field** out);
OTTV_API ottv_status ottv_field_save(const ottv_field* field, const char* path, double offset);
OTTV_API ottv_status ottv_field_dims(const ottv_field* field, size_t* n, double* h);
OTTV_API ottv_status ottv_field_read(const ottv_field* field, double* values, size_t count);
OTTV_API void ottv_field_free(ottv_field* field);

OTTV_API ottv_status ottv_field_add_noise(const ottv_field* field, double sigma, uint64_t seed, ottv_field** out);
OTTV_API ottv_status ottv_field_blur(const ottv_field* field, ottv_blur blur, double width, ottv_field** out);
OTTV_API ottv_status ottv_field_norm(const ottv_field* field, double* out);
OTTV_API ottv_status ottv_psnr(const ottv_field* u, const ottv_field* reference, double* out);

/* Wasserstein-1 distance between nonnegative images. With normalize != 0
 * both are rescaled to unit mass first; otherwise their masses must agree.
 * tau <= 0 and eps <= 0 select defaults (tau = 16, eps relative to the
 * squared difference); max_iters = 0 selects 200000. */
OTTV_API ottv_status ottv_w1_distance(const ottv_field* a, const ottv_field* b, int normalize, double tau,
                                      double eps, size_t max_iters, double* out);

OTTV_API void ottv_params_default(ottv_params* params);
OTTV_API ottv_status ottv_restore(const ottv_field* f, const ottv_params* params, ottv_result** out);

/* Tunes one knob until |f - K*u| is within rel_tol of target. On success the
 * tuned settings are written to *tuned and, if out is non-null, the result. */
OTTV_API ottv_status ottv_calibrate(const ottv_field* f, const ottv_params* params, double target, ottv_knob knob,
                                    double rel_tol, ottv_params* tuned, ottv_result** out);

OTTV_API ottv_status ottv_result_component(const ottv_result* result, ottv_component which, ottv_field** out);
OTTV_API ottv_status ottv_result_metrics(const ottv_result* result, ottv_metrics* out);
OTTV_API ottv_status ottv_result_write_trace(const ottv_result* result, ottv_trace which, const char* path);
OTTV_API void ottv_result_free(ottv_result* result);

#ifdef __cplusplus
}
#endif

#endif /* OTTV_H */
