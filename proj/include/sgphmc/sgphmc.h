/* C interface to the sparse GP + HMC library.
 *
 * Every fallible call returns an sgphmc_status; on failure the message is
 * available from sgphmc_last_error() on the calling thread until the next
 * call. Handles are opaque and owned by the caller, who releases them with
 * the matching *_free function (NULL is accepted).
 *
 * Hyperparameter vectors use the constrained layout
 *   [lengthscale_0 .. lengthscale_{D-1}, signal_std, noise_std]
 * and matrices are row-major.
 */
#ifndef SGPHMC_SGPHMC_H
#define SGPHMC_SGPHMC_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(SGPHMC_BUILDING_LIBRARY)
#    define SGPHMC_API __declspec(dllexport)
#  else
#    define SGPHMC_API __declspec(dllimport)
#  endif
#else
#  define SGPHMC_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sgphmc_status {
  SGPHMC_OK = 0,
  SGPHMC_ERR_INPUT = 1,     /* bad arguments, shapes or config values */
  SGPHMC_ERR_PARSE = 2,     /* malformed CSV or config file */
  SGPHMC_ERR_NUMERICAL = 3, /* factorization failure */
  SGPHMC_ERR_SAMPLER = 4,   /* HMC could not adapt */
  SGPHMC_ERR_IO = 5,
  SGPHMC_ERR_INTERNAL = 6
} sgphmc_status;

typedef struct sgphmc_dataset sgphmc_dataset;
typedef struct sgphmc_config sgphmc_config;
typedef struct sgphmc_fit sgphmc_fit;

SGPHMC_API const char* sgphmc_version(void);
SGPHMC_API const char* sgphmc_last_error(void);
SGPHMC_API const char* sgphmc_status_string(sgphmc_status status);
/* 0 quiet, 1 warnings (default), 2 progress. */
SGPHMC_API void sgphmc_set_log_level(int level);

/* Arrays are used as given (no standardization). */
SGPHMC_API sgphmc_status sgphmc_dataset_from_arrays(const double* x, const double* y, size_t n,
                                                    size_t d, sgphmc_dataset** out);
/* Loads a CSV (last column target) and standardizes it with its own statistics. */
SGPHMC_API sgphmc_status sgphmc_dataset_load_csv(const char* path, sgphmc_dataset** out);
SGPHMC_API void sgphmc_dataset_free(sgphmc_dataset* data);
SGPHMC_API size_t sgphmc_dataset_rows(const sgphmc_dataset* data);
SGPHMC_API size_t sgphmc_dataset_dims(const sgphmc_dataset* data);

SGPHMC_API sgphmc_status sgphmc_exact_lml(const sgphmc_dataset* data, const double* hypers,
                                          double* value);
/* z is m x d. */
SGPHMC_API sgphmc_status sgphmc_collapsed_elbo(const sgphmc_dataset* data, const double* hypers,
                                               const double* z, size_t m, double* value);
/* grad_hypers (d + 2 entries) is over log-hyperparameters; grad_z is m x d.
 * Either gradient pointer may be NULL. */
SGPHMC_API sgphmc_status sgphmc_collapsed_elbo_grad(const sgphmc_dataset* data,
                                                    const double* hypers, const double* z,
                                                    size_t m, double* value, double* grad_hypers,
                                                    double* grad_z);

SGPHMC_API sgphmc_status sgphmc_config_create(sgphmc_config** out);
SGPHMC_API sgphmc_status sgphmc_config_load(const char* path, sgphmc_config** out);
/* key is "section.name", e.g. "experiment.seed". */
SGPHMC_API sgphmc_status sgphmc_config_set(sgphmc_config* config, const char* key,
                                           const char* value);
/* Reads GP_SEED from the environment if set. */
SGPHMC_API sgphmc_status sgphmc_config_apply_environment(sgphmc_config* config);
SGPHMC_API sgphmc_status sgphmc_config_write(const sgphmc_config* config, const char* path);
SGPHMC_API void sgphmc_config_free(sgphmc_config* config);

/* Harness commands; outputs land in the config's output directory. */
SGPHMC_API sgphmc_status sgphmc_run_fit(const sgphmc_config* config);
SGPHMC_API sgphmc_status sgphmc_run_bench(const sgphmc_config* config);
SGPHMC_API sgphmc_status sgphmc_run_surface(const sgphmc_config* config);
SGPHMC_API sgphmc_status sgphmc_run_diagnose(const sgphmc_config* config, const char* trace_path);
SGPHMC_API sgphmc_status sgphmc_run_synth1d(const sgphmc_config* config);

/* Fits the config's first method on the whole dataset. */
SGPHMC_API sgphmc_status sgphmc_fit_create(const sgphmc_dataset* train,
                                           const sgphmc_config* config, sgphmc_fit** out);
SGPHMC_API void sgphmc_fit_free(sgphmc_fit* fit);
/* Number of predictive mixture components (1 for a point estimate). */
SGPHMC_API size_t sgphmc_fit_draws(const sgphmc_fit* fit);
/* x_star is p x d in the dataset's input units; mean and var (p entries each)
 * are in the dataset's target units and include observation noise. */
SGPHMC_API sgphmc_status sgphmc_fit_predict(const sgphmc_fit* fit, const double* x_star,
                                            size_t p, double* mean, double* var);
SGPHMC_API sgphmc_status sgphmc_fit_write_trace(const sgphmc_fit* fit, const char* path);

#ifdef __cplusplus
}
#endif

#endif /* SGPHMC_SGPHMC_H */
