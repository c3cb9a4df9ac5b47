/* C interface to the nested kernel quadrature library.
 *
 * Handles are opaque and owned by the caller (destroy them with the matching
 * *_destroy function). Every function returns an nkq_status; on failure the
 * message is available from nkq_last_error() on the same thread. Strings
 * returned through `const char **` stay valid until the next call on the same
 * thread, or, for sweep accessors, until the sweep is destroyed.
 */
#ifndef NKQ_NKQ_H
#define NKQ_NKQ_H

#include <stddef.h>
#include <stdint.h>

#if defined(NKQ_BUILDING_LIBRARY)
#define NKQ_API __attribute__((visibility("default")))
#else
#define NKQ_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum nkq_status {
  NKQ_OK = 0,
  NKQ_ERR_INVALID_ARGUMENT = 1,
  NKQ_ERR_DIMENSION_MISMATCH = 2,
  NKQ_ERR_NON_FINITE = 3,
  NKQ_ERR_DEGENERATE_LENGTHSCALE = 4,
  NKQ_ERR_NO_CLOSED_FORM_KME = 5,
  NKQ_ERR_ORACLE_UNSUPPORTED = 6,
  NKQ_ERR_SINGULAR_GRAM = 7,
  NKQ_ERR_UNSUPPORTED = 8,
  NKQ_ERR_CONFIG = 9,
  NKQ_ERR_IO = 10,
  /* The sweep finished but at least one cell failed; the handle is valid. */
  NKQ_PARTIAL_FAILURE = 20,
  NKQ_ERR_INTERNAL = 99
} nkq_status;

typedef struct nkq_problem nkq_problem;
typedef struct nkq_sweep nkq_sweep;

/* One run. String members point into the owning sweep (or a thread-local
 * buffer for nkq_estimate). */
typedef struct nkq_record {
  const char *problem;
  const char *estimator;
  const char *point_source;
  uint64_t cost;
  int64_t N;
  int64_t T;
  int64_t L;
  int64_t replicate;
  uint64_t seed;
  double estimate;
  double abs_error; /* NaN without a known truth */
  double wall_millis;
  double lambda0_x;
  double lambda0_theta;
} nkq_record;

NKQ_API const char *nkq_version(void);
NKQ_API const char *nkq_last_error(void);
NKQ_API const char *nkq_status_string(nkq_status status);

/* JSON array of built-in problem ids. */
NKQ_API nkq_status nkq_problem_ids(const char **json_out);

NKQ_API nkq_status nkq_problem_create(const char *id, const char *overrides_json,
                                      nkq_problem **out);
NKQ_API void nkq_problem_destroy(nkq_problem *problem);
/* JSON object: id, dim_x, dim_theta, outputs, targets, true_value,
 * truth_provenance, default_change_of_variable. */
NKQ_API nkq_status nkq_problem_describe(const nkq_problem *problem, const char **json_out);
NKQ_API nkq_status nkq_problem_evaluations(const nkq_problem *problem, uint64_t *count);

/* Single estimate. `config_json` uses the sweep schema (see README) with one
 * estimator and one budget entry; the run seed is `seed` itself. */
NKQ_API nkq_status nkq_estimate(const nkq_problem *problem, const char *config_json,
                                nkq_record *out);

NKQ_API nkq_status nkq_sweep_run(const char *spec_json, nkq_sweep **out);
NKQ_API nkq_status nkq_sweep_read_csv(const char *path, nkq_sweep **out);
NKQ_API void nkq_sweep_destroy(nkq_sweep *sweep);
NKQ_API size_t nkq_sweep_record_count(const nkq_sweep *sweep);
NKQ_API nkq_status nkq_sweep_record(const nkq_sweep *sweep, size_t index, nkq_record *out);
NKQ_API size_t nkq_sweep_failure_count(const nkq_sweep *sweep);
NKQ_API const char *nkq_sweep_failure(const nkq_sweep *sweep, size_t index);
NKQ_API nkq_status nkq_sweep_write_csv(const nkq_sweep *sweep, const char *path);
/* JSON array of per-cell summaries. */
NKQ_API nkq_status nkq_sweep_summary(const nkq_sweep *sweep, const char **json_out);
/* JSON array with one log-log fit of mean error on mean cost per
 * (problem, estimator, point_source). */
NKQ_API nkq_status nkq_sweep_fit(const nkq_sweep *sweep, const char **json_out);

/* lambda0 grid search; JSON object with the chosen pair and the score grid. */
NKQ_API nkq_status nkq_tune(const char *spec_json, const char **json_out);

#ifdef __cplusplus
}
#endif

#endif /* NKQ_NKQ_H */
