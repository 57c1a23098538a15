#ifndef BIVP_H
#define BIVP_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum BivpPolicy {
  BIVP_POLICY_INTERIOR = 0,
  BIVP_POLICY_BOUNDARY = 1,
} BivpPolicy;

typedef enum BivpStatus {
  BIVP_STATUS_OK = 0,
  BIVP_STATUS_NULL_ARGUMENT = 1,
  BIVP_STATUS_INVALID_INPUT = 2,
  BIVP_STATUS_OUTSIDE_DOMAIN = 3,
  BIVP_STATUS_NUMERIC = 4,
  BIVP_STATUS_UNKNOWN_CORPUS = 5,
  BIVP_STATUS_INDEX_OUT_OF_RANGE = 6,
  BIVP_STATUS_PANIC = 7,
} BivpStatus;

typedef enum BivpUniqueness {
  BIVP_UNIQUENESS_UNIQUENESS = 0,
  BIVP_UNIQUENESS_FORMAL_ONLY = 1,
  BIVP_UNIQUENESS_HIDDEN_NON_UNIQUENESS = 2,
  BIVP_UNIQUENESS_NON_UNIQUENESS = 3,
  BIVP_UNIQUENESS_UNKNOWN = 4,
} BivpUniqueness;

/**
 * A parsed and validated problem.
 */
typedef struct BivpProblem BivpProblem;

/**
 * Euler nodes in global coordinates.
 */
typedef struct BivpTrace BivpTrace;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. Valid until the
 * next call into the library from the same thread.
 */
const char *bivp_last_error_message(void);

/**
 * Frees a string returned by this library.
 *
 * # Safety
 * `s` must come from this library and not be freed twice.
 */
void bivp_string_free(char *s);

/**
 * The constant θ of the cusp example.
 */
double bivp_theta(void);

/**
 * # Safety
 * `id` must be a nul-terminated string, `out` a valid pointer.
 */
enum BivpStatus bivp_problem_from_corpus(const char *id, struct BivpProblem **out);

/**
 * Parses a problem file in its JSON form.
 *
 * # Safety
 * `json` must be a nul-terminated string, `out` a valid pointer.
 */
enum BivpStatus bivp_problem_from_json(const char *json, struct BivpProblem **out);

/**
 * # Safety
 * `p` must come from a `bivp_problem_from_*` call and not be freed twice.
 */
void bivp_problem_free(struct BivpProblem *p);

/**
 * Case tag at `(x, y)` looking right, such as `B1[=,=]` or `unclassified`.
 * The string is freed with [`bivp_string_free`].
 *
 * # Safety
 * `p` must be a live problem handle, `out` a valid pointer.
 */
enum BivpStatus bivp_classify(const struct BivpProblem *p, double x, double y, char **out);

/**
 * Uniqueness membership at `(x, y)` with default settings.
 *
 * # Safety
 * `p` must be a live problem handle, `out` a valid pointer.
 */
enum BivpStatus bivp_uniqueness(const struct BivpProblem *p,
                                double x,
                                double y,
                                enum BivpUniqueness *out);

/**
 * Euler polygon from `(x, y)` to the right over `span` with step `eps`.
 *
 * # Safety
 * `p` must be a live problem handle, `out` a valid pointer.
 */
enum BivpStatus bivp_solve(const struct BivpProblem *p,
                           double x,
                           double y,
                           double span,
                           double eps,
                           enum BivpPolicy policy,
                           struct BivpTrace **out);

/**
 * # Safety
 * `t` must be a live trace handle.
 */
size_t bivp_trace_len(const struct BivpTrace *t);

/**
 * Node `i` of the trace.
 *
 * # Safety
 * `t` must be a live trace handle, `x` and `y` valid pointers.
 */
enum BivpStatus bivp_trace_point(const struct BivpTrace *t, size_t i, double *x, double *y);

/**
 * Why integration stopped. Owned by the trace.
 *
 * # Safety
 * `t` must be a live trace handle.
 */
const char *bivp_trace_terminal(const struct BivpTrace *t);

/**
 * # Safety
 * `t` must come from [`bivp_solve`] and not be freed twice.
 */
void bivp_trace_free(struct BivpTrace *t);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BIVP_H */
