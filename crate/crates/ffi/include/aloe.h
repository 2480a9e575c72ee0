#ifndef ALOE_H
#define ALOE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum AloeStatus {
  ALOE_STATUS_OK = 0,
  ALOE_STATUS_INVALID_INPUT = 1,
  ALOE_STATUS_INFEASIBLE_DETERMINISTIC = 2,
  ALOE_STATUS_EMPTY_MIXTURE = 3,
  ALOE_STATUS_DOMAIN = 4,
  ALOE_STATUS_UNSAMPLEABLE = 5,
  ALOE_STATUS_NEAR_SINGULAR_COVARIANCE = 6,
  ALOE_STATUS_DEGENERATE_CONSTRAINT = 7,
  ALOE_STATUS_DISCONNECTED_NETWORK = 8,
  ALOE_STATUS_INVALID_WEIGHTS = 9,
  ALOE_STATUS_INVALID_DISTRIBUTION = 10,
  ALOE_STATUS_IO = 11,
  ALOE_STATUS_NULL_POINTER = 12,
  ALOE_STATUS_PANIC = 13,
} AloeStatus;

// Opaque problem handle.
typedef struct AloeProblem AloeProblem;

// Summary of one ALOE run.
typedef struct AloeEstimateResult {
  double mu_hat;
  double se;
  uint64_t n;
  double union_bound;
  double lower_bound;
  double hard_range_lo;
  double hard_range_hi;
  double var_bound_theorem;
  double var_bound_lemma;
  double cv_bound;
  // Fraction of draws with more than one event.
  double multi_event_fraction;
  double dropped_mass;
  uint64_t num_events;
  // Nonzero when only one value of S was observed, so `se` is 0.
  uint8_t degenerate_se;
} AloeEstimateResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the most recent failure on this thread, or null. The pointer
// stays valid until the next failing call on the same thread.
const char *aloe_last_error(void);

// Library version as a static NUL-terminated string.
const char *aloe_version(void);

double aloe_normal_cdf(double x);

// # Safety
// `out` must be valid for writes.
enum AloeStatus aloe_normal_quantile(double p, double *out);

// Draws from `N(0,1)` conditioned to exceed `tau`, by inversion of `u`.
//
// # Safety
// `out` must be valid for writes.
enum AloeStatus aloe_truncated_normal(double tau, double u, double *out);

// Half-spaces `ω_jᵀx ≥ τ_j` in dimension `dim`; `normals` holds `num_events`
// rows of length `dim`, row-major.
//
// # Safety
// `normals` must hold `dim * num_events` values, `taus` `num_events` values,
// and `out` must be valid for writes.
enum AloeStatus aloe_problem_new(size_t dim,
                                 const double *normals,
                                 size_t num_events,
                                 const double *taus,
                                 struct AloeProblem **out);

// Parses a problem in either the whitened or the raw JSON form.
//
// # Safety
// `json` must be a NUL-terminated string and `out` valid for writes.
enum AloeStatus aloe_problem_from_json(const char *json, struct AloeProblem **out);

// Whitens `γ_jᵀy ≥ κ_j` for `y ~ N(η, Σ)`. `sigma` is `dim × dim` and
// `gamma` is `num_events × dim`, both row-major.
//
// # Safety
// Array lengths must match the stated dimensions and `out` must be valid
// for writes.
enum AloeStatus aloe_problem_whiten(size_t dim,
                                    const double *eta,
                                    const double *sigma,
                                    size_t num_events,
                                    const double *gamma,
                                    const double *kappa,
                                    struct AloeProblem **out);

// Builds the violation problem of a DC grid case given as JSON.
//
// # Safety
// `json` must be a NUL-terminated string and `out` valid for writes.
enum AloeStatus aloe_problem_from_grid_json(const char *json, struct AloeProblem **out);

// The exterior of the regular `num_sides`-gon circumscribing the circle of
// radius `tau`.
//
// # Safety
// `out` must be valid for writes.
enum AloeStatus aloe_problem_polygon(size_t num_sides, double tau, struct AloeProblem **out);

// Excludes events with `τ_j > threshold` from sampling and counting.
//
// # Safety
// `problem` must be a live handle.
enum AloeStatus aloe_problem_set_drop_threshold(struct AloeProblem *problem, double threshold);

// # Safety
// `problem` must be a handle from this library or null; it must not be
// used afterwards.
void aloe_problem_free(struct AloeProblem *problem);

// Number of events, including those excluded from sampling.
//
// # Safety
// `problem` must be a live handle or null (which yields 0).
size_t aloe_problem_num_events(const struct AloeProblem *problem);

// `μ̄ = Σ P_j`; NaN for a null handle.
//
// # Safety
// `problem` must be a live handle or null.
double aloe_problem_union_bound(const struct AloeProblem *problem);

// `max P_j`; NaN for a null handle.
//
// # Safety
// `problem` must be a live handle or null.
double aloe_problem_lower_bound(const struct AloeProblem *problem);

// Copies the event probabilities `P_j` into `out`, which holds `len` values.
//
// # Safety
// `out` must be valid for `len` writes.
enum AloeStatus aloe_problem_probabilities(const struct AloeProblem *problem,
                                           double *out,
                                           size_t len);

// Runs `n` ALOE draws on stream `(seed, stream_id)`. A `block_size` of 0
// selects the default. Results do not depend on the block size.
//
// # Safety
// `problem` must be a live handle and `out` valid for writes.
enum AloeStatus aloe_estimate(const struct AloeProblem *problem,
                              uint64_t n,
                              uint64_t seed,
                              uint64_t stream_id,
                              size_t block_size,
                              struct AloeEstimateResult *out);

// As [`aloe_estimate`], writing every estimate field, including the `S`
// histogram, as a JSON object. Release the string with
// [`aloe_string_free`].
//
// # Safety
// `problem` must be a live handle and `out` valid for writes.
enum AloeStatus aloe_estimate_json(const struct AloeProblem *problem,
                                   uint64_t n,
                                   uint64_t seed,
                                   uint64_t stream_id,
                                   size_t block_size,
                                   char **out);

// # Safety
// `s` must come from this library or be null.
void aloe_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ALOE_H */
