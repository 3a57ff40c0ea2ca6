/* C interface to the dreval library.
 *
 * All functions return a dre_status; on failure dre_last_error() holds a
 * one-line message for the calling thread. Objects are opaque handles that
 * the caller releases with the matching *_free function.
 */
#ifndef DREVAL_H
#define DREVAL_H

#include <stddef.h>
#include <stdint.h>

#if defined(DREVAL_BUILDING_LIBRARY)
#define DRE_API __attribute__((visibility("default")))
#else
#define DRE_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum dre_status {
  DRE_OK = 0,
  DRE_INVALID_INPUT = 1,
  DRE_INVALID_PROPENSITY = 2,
  DRE_PARSE_ERROR = 3,
  DRE_SINGULAR_SYSTEM = 4,
  DRE_DEGENERATE_DISTRIBUTION = 5,
  DRE_IO_ERROR = 6,
  DRE_CHECK_FAILED = 7,
  DRE_INTERNAL_ERROR = 99
} dre_status;

DRE_API const char* dre_version(void);
DRE_API const char* dre_status_name(dre_status status);
/* Message of the last failed call on this thread ("" if none). */
DRE_API const char* dre_last_error(void);

/* ------------------------------------------------------------------ */
/* Datasets */

typedef struct dre_dataset dre_dataset;

typedef struct dre_load_options {
  int append_bias; /* nonzero: add a constant 1 feature (default 1) */
  int standardize; /* nonzero: z-score every file column (default 0) */
} dre_load_options;

DRE_API void dre_load_options_default(dre_load_options* options);
DRE_API dre_status dre_dataset_load_csv(const char* path, const dre_load_options* options, dre_dataset** out);
DRE_API dre_status dre_dataset_info(const dre_dataset* data, size_t* examples, size_t* classes, size_t* dimension);
DRE_API void dre_dataset_free(dre_dataset* data);

/* ------------------------------------------------------------------ */
/* Reports: CSV text plus a key=value manifest */

typedef struct dre_report dre_report;

DRE_API const char* dre_report_csv(const dre_report* report);
DRE_API const char* dre_report_manifest(const dre_report* report);
DRE_API size_t dre_report_row_count(const dre_report* report);
/* Looks up the value of the first row matching all three keys. */
DRE_API dre_status dre_report_value(const dre_report* report, const char* dataset, const char* subject,
                                    const char* metric, double* value);
DRE_API void dre_report_free(dre_report* report);

/* ------------------------------------------------------------------ */
/* Learner settings shared by the protocols */

typedef struct dre_dlm_config {
  double epsilon;
  size_t restarts;
  size_t max_iterations;
  double convergence_tol;
  double perturbation_scale;
} dre_dlm_config;

/* ------------------------------------------------------------------ */
/* Evaluation protocol */

typedef struct dre_eval_config {
  size_t replicates;
  double train_fraction;
  double ridge_lambda;
  int partial_label_model; /* nonzero: fit the loss model on one revealed loss per training example */
  int include_replicates;  /* nonzero: add per-replicate estimates to the report */
  uint64_t seed;
  size_t threads; /* 0 = all cores */
  dre_dlm_config dlm;
} dre_eval_config;

DRE_API void dre_eval_config_default(dre_eval_config* config);
DRE_API dre_status dre_run_eval(const dre_dataset* data, const char* dataset_name, const dre_eval_config* config,
                                dre_report** out);

/* ------------------------------------------------------------------ */
/* Optimization protocol */

enum { DRE_IMPUTE_IPS = 1, DRE_IMPUTE_DR = 2 };
enum { DRE_LEARNER_DLM = 1, DRE_LEARNER_FILTER_TREE = 2 };

typedef struct dre_opt_config {
  size_t runs;
  double train_fraction;
  double ridge_lambda;
  unsigned impute_mask;  /* DRE_IMPUTE_* bits */
  unsigned learner_mask; /* DRE_LEARNER_* bits */
  int full_feedback;     /* nonzero: every training loss is revealed */
  size_t tree_max_depth;
  size_t tree_min_samples_leaf;
  uint64_t seed;
  size_t threads;
  dre_dlm_config dlm;
} dre_opt_config;

DRE_API void dre_opt_config_default(dre_opt_config* config);
DRE_API dre_status dre_run_opt(const dre_dataset* data, const char* dataset_name, const dre_opt_config* config,
                               dre_report** out);

/* ------------------------------------------------------------------ */
/* Covariate-shift protocol */

enum { DRE_SAMPLING_DENSITY = 0, DRE_SAMPLING_CDF = 1 };

typedef struct dre_shift_config {
  size_t population_size;
  size_t feature_dimension;
  double sparsity;
  const double* fractions; /* NULL: default fraction list */
  size_t fraction_count;
  size_t replicates;
  double ridge_lambda;
  int sampling_law;
  double probability_override; /* > 0: replace every sampling probability */
  const char* population_path; /* NULL: generate a synthetic population */
  const char* export_path;     /* non-NULL: write the population used */
  uint64_t seed;
  size_t threads;
} dre_shift_config;

DRE_API void dre_shift_config_default(dre_shift_config* config);
DRE_API dre_status dre_run_shift(const dre_shift_config* config, dre_report** out);

/* ------------------------------------------------------------------ */
/* Oracle checks on a finite instance file. Returns DRE_CHECK_FAILED (with
 * the report still produced) when any check exceeds the tolerance. */

DRE_API dre_status dre_oracle_check(const char* instance_path, double tolerance, dre_report** out);

/* ------------------------------------------------------------------ */
/* Low-level estimator over arrays.
 *   contexts: n x d row-major, actions/payoffs/propensities: n,
 *   policy_weights and model_weights: k x d row-major (model may be NULL for IPS). */

enum { DRE_ESTIMATOR_DM = 0, DRE_ESTIMATOR_IPS = 1, DRE_ESTIMATOR_DR = 2 };

DRE_API dre_status dre_estimate(int estimator, size_t n, size_t k, size_t d, const double* contexts,
                                const size_t* actions, const double* payoffs, const double* propensities,
                                const double* policy_weights, const double* model_weights, double* value);

#ifdef __cplusplus
}
#endif

#endif
