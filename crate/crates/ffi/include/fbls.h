#ifndef FBLS_H
#define FBLS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes. Zero is success.
 */
typedef enum FblsStatus {
  FBLS_STATUS_OK = 0,
  FBLS_STATUS_NULL_POINTER = 1,
  FBLS_STATUS_INVALID_UTF8 = 2,
  /**
   * Malformed TOML or a parameter out of range.
   */
  FBLS_STATUS_INVALID_ARGUMENT = 3,
  /**
   * Wrong dimension, start outside the domain, or an unsatisfiable request.
   */
  FBLS_STATUS_PRECONDITION = 4,
  /**
   * An oracle returned a non-finite value or a certificate could not run.
   */
  FBLS_STATUS_FAILED = 5,
  FBLS_STATUS_IO = 6,
  FBLS_STATUS_OUT_OF_RANGE = 7,
  FBLS_STATUS_PANIC = 8,
} FblsStatus;

typedef enum FblsTermination {
  FBLS_TERMINATION_RESIDUAL_TOLERANCE = 0,
  FBLS_TERMINATION_MAX_ITERATIONS = 1,
  FBLS_TERMINATION_LINESEARCH_FAILURE = 2,
  FBLS_TERMINATION_DIVERGED = 3,
} FblsTermination;

typedef enum FblsCertificateStatus {
  FBLS_CERTIFICATE_STATUS_PASSED = 0,
  FBLS_CERTIFICATE_STATUS_VIOLATED = 1,
  FBLS_CERTIFICATE_STATUS_NOT_OBSERVED = 2,
} FblsCertificateStatus;

/**
 * Opaque problem handle.
 */
typedef struct FblsProblem FblsProblem;

/**
 * Opaque trace handle. Keeps the start point and linesearch parameters so
 * certificates can be evaluated later.
 */
typedef struct FblsTrace FblsTrace;

/**
 * One iteration. Fields without a value for the method are NaN.
 */
typedef struct FblsRecord {
  size_t k;
  double objective;
  double stepsize;
  double residual;
  double step_norm;
  size_t ls_trials;
  size_t cum_prox;
  size_t cum_grad;
  size_t cum_f;
  double t_k;
  double dist_to_solution;
} FblsRecord;

typedef struct FblsCertificate {
  bool passed;
  enum FblsCertificateStatus status;
  double worst_margin;
  /**
   * Record index of the worst margin.
   */
  size_t worst_index;
  double tolerance;
} FblsCertificate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *fbls_last_error(void);

/**
 * Builds a problem from a TOML table such as `family = "lasso"` plus its
 * fields.
 *
 * # Safety
 * `toml` must be a NUL-terminated string and `out` a valid pointer.
 */
enum FblsStatus fbls_problem_from_toml(const char *toml, struct FblsProblem **out);

/**
 * # Safety
 * `problem` must come from [`fbls_problem_from_toml`].
 */
enum FblsStatus fbls_problem_dimension(const struct FblsProblem *problem, size_t *out);

/**
 * # Safety
 * `problem` must be null or come from [`fbls_problem_from_toml`], and must
 * not be used afterwards.
 */
void fbls_problem_free(struct FblsProblem *problem);

/**
 * Runs a solver. `solver_toml` is a solver table (`method = "method1"`,
 * optional `[params]`, ...). A null `x0` selects the family's default start.
 *
 * # Safety
 * `x0` must point to `len` doubles when not null; the other pointers must be
 * valid.
 */
enum FblsStatus fbls_solve(const struct FblsProblem *problem,
                           const char *solver_toml,
                           const double *x0,
                           size_t len,
                           struct FblsTrace **out);

/**
 * Number of records in the trace.
 *
 * # Safety
 * `trace` must come from [`fbls_solve`].
 */
enum FblsStatus fbls_trace_len(const struct FblsTrace *trace, size_t *out);

/**
 * # Safety
 * `trace` must come from [`fbls_solve`] and `out` must be valid.
 */
enum FblsStatus fbls_trace_record(const struct FblsTrace *trace,
                                  size_t index,
                                  struct FblsRecord *out);

/**
 * # Safety
 * `trace` must come from [`fbls_solve`] and `out` must be valid.
 */
enum FblsStatus fbls_trace_termination(const struct FblsTrace *trace, enum FblsTermination *out);

/**
 * Copies the final point into `buf`. `*written` receives the dimension; if
 * `capacity` is smaller nothing is copied and `OutOfRange` is returned, so a
 * call with a null buffer queries the size.
 *
 * # Safety
 * `buf` must hold `capacity` doubles when not null.
 */
enum FblsStatus fbls_trace_final_point(const struct FblsTrace *trace,
                                       double *buf,
                                       size_t capacity,
                                       size_t *written);

/**
 * Writes the trace as CSV.
 *
 * # Safety
 * `path` must be a NUL-terminated string.
 */
enum FblsStatus fbls_trace_write_csv(const struct FblsTrace *trace, const char *path);

/**
 * # Safety
 * `trace` must be null or come from [`fbls_solve`], and must not be used
 * afterwards.
 */
void fbls_trace_free(struct FblsTrace *trace);

/**
 * Evaluates a certificate, given as a TOML table such as `name = "descent"`,
 * on a trace of `problem`.
 *
 * # Safety
 * All pointers must be valid; `trace` must have been solved on `problem`.
 */
enum FblsStatus fbls_certify(const struct FblsProblem *problem,
                             const struct FblsTrace *trace,
                             const char *request_toml,
                             struct FblsCertificate *out);

/**
 * Runs a configuration file like `fbls run`. `*exit_code` receives the
 * command-line exit code (0 success, 1 solver or certificate failure,
 * 2 invalid configuration) whenever the call itself succeeds.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `exit_code` valid.
 */
enum FblsStatus fbls_run_config(const char *path, int32_t *exit_code);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FBLS_H */
