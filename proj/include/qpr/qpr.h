/* Copyright 2026 qpreduce contributors */
/* SPDX-License-Identifier: Apache-2.0 */
#ifndef QPR_QPR_H
#define QPR_QPR_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(QPR_BUILDING_LIBRARY)
#define QPR_API __declspec(dllexport)
#else
#define QPR_API __declspec(dllimport)
#endif
#else
#define QPR_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum qpr_status {
  QPR_OK = 0,
  QPR_ERR_INVALID_ARGUMENT = 1,
  QPR_ERR_PARSE = 2,
  QPR_ERR_DOMAIN = 3,
  QPR_ERR_STRUCTURAL = 4,
  QPR_ERR_PRECONDITION = 5,
  QPR_ERR_NUMERICAL = 6, /* defective matrix, small divisor, smallness, truncation */
  QPR_ERR_INTEGRATION = 7,
  QPR_ERR_IO = 8,
  QPR_ERR_INTERNAL = 9
} qpr_status;

typedef enum qpr_command {
  QPR_CMD_REDUCE = 0,
  QPR_CMD_SWEEP = 1,
  QPR_CMD_HILL = 2,
  QPR_CMD_VERIFY = 3
} qpr_command;

typedef struct qpr_config qpr_config;
typedef struct qpr_output qpr_output;
typedef struct qpr_reduction qpr_reduction;

typedef struct qpr_run_options {
  int workers;       /* <= 0: hardware concurrency */
  int has_seed;
  uint64_t seed;
  int has_horizon;
  double horizon;
} qpr_run_options;

/* Message of the last failed call on this thread; never NULL. */
QPR_API const char* qpr_last_error(void);
QPR_API const char* qpr_status_string(qpr_status status);
QPR_API const char* qpr_version(void);

QPR_API void qpr_run_options_init(qpr_run_options* opt);

QPR_API qpr_status qpr_config_load(const char* path, qpr_config** out);
QPR_API qpr_status qpr_config_parse(const char* text, qpr_config** out);
/* Built-in Hill fixture with a(t) = 1 + cos(t)/2 + cos(golden t)/2. */
QPR_API qpr_status qpr_config_default(qpr_config** out);
QPR_API void qpr_config_free(qpr_config* cfg);
/* The config's mode field, or "" when absent. */
QPR_API const char* qpr_config_mode(const qpr_config* cfg);

/* Runs a command. A computation that completes but fails (for example a
 * reduction that does not converge) still returns QPR_OK; inspect
 * qpr_output_exit_code. */
QPR_API qpr_status qpr_run(const qpr_config* cfg, qpr_command cmd,
                           const qpr_run_options* opt, qpr_output** out);
QPR_API int qpr_output_exit_code(const qpr_output* out);
QPR_API const char* qpr_output_summary(const qpr_output* out);
QPR_API size_t qpr_output_artifact_count(const qpr_output* out);
QPR_API const char* qpr_output_artifact_name(const qpr_output* out, size_t i);
QPR_API const char* qpr_output_artifact_data(const qpr_output* out, size_t i,
                                             size_t* size);
QPR_API qpr_status qpr_output_write(const qpr_output* out, const char* dir);
QPR_API void qpr_output_free(qpr_output* out);

/* Direct reduction of the config's system at eps. */
QPR_API qpr_status qpr_reduce(const qpr_config* cfg, double eps,
                              qpr_reduction** out);
QPR_API int qpr_reduction_reduced(const qpr_reduction* r);
QPR_API const char* qpr_reduction_status(const qpr_reduction* r);
QPR_API size_t qpr_reduction_dim(const qpr_reduction* r);
QPR_API size_t qpr_reduction_steps(const qpr_reduction* r);
/* Residual h_m ||Q_m|| of record m. */
QPR_API qpr_status qpr_reduction_residual(const qpr_reduction* r, size_t m,
                                          double* residual);
/* Row-major n*n real and imaginary parts of B. */
QPR_API qpr_status qpr_reduction_B(const qpr_reduction* r, double* re,
                                   double* im);
/* b when B has a purely imaginary pair +-i sqrt(b). */
QPR_API qpr_status qpr_reduction_b(const qpr_reduction* r, double* b);
QPR_API qpr_status qpr_reduction_convergence_slope(const qpr_reduction* r,
                                                   double* slope);
/* max ||Phi(t) - psi(t) e^{Bt} psi(0)^{-1}|| over [0, horizon]. */
QPR_API qpr_status qpr_reduction_oracle_error(const qpr_reduction* r,
                                              double horizon, double* error);
QPR_API void qpr_reduction_free(qpr_reduction* r);

#ifdef __cplusplus
}
#endif

#endif /* QPR_QPR_H */
