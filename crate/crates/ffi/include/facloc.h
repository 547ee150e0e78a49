#ifndef FACLOC_H
#define FACLOC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum FlStatus {
  FL_STATUS_OK = 0,
  FL_STATUS_NULL_POINTER = 1,
  FL_STATUS_INVALID_UTF8 = 2,
  FL_STATUS_MALFORMED = 3,
  FL_STATUS_EMPTY_PROFILE = 4,
  FL_STATUS_OUTLIER_BUDGET = 5,
  FL_STATUS_INFEASIBLE = 6,
  FL_STATUS_INDEX_OUT_OF_RANGE = 7,
  FL_STATUS_PHANTOM_COUNT = 8,
  FL_STATUS_ODD_PROFILE = 9,
  FL_STATUS_GAMMA_OUT_OF_RANGE = 10,
  FL_STATUS_MISSING_PREDICTION = 11,
  FL_STATUS_TOO_LARGE = 12,
  FL_STATUS_INVALID_PARAMETERS = 13,
  FL_STATUS_NOT_DETERMINISTIC = 14,
  FL_STATUS_PANIC = 15,
} FlStatus;

typedef enum FlObjective {
  FL_OBJECTIVE_UTILITARIAN = 0,
  FL_OBJECTIVE_EGALITARIAN = 1,
} FlObjective;

/**
 * Opaque instance handle.
 */
typedef struct FlInstance FlInstance;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. Valid until the
 * next failing call on the same thread.
 */
const char *facloc_last_error(void);

/**
 * Parses an instance document: `{"locations": [...], "z": k, "prediction": p}`.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum FlStatus facloc_instance_from_json(const char *json, struct FlInstance **out);

/**
 * Builds an instance from `n` fractions `nums[i] / dens[i]`.
 *
 * # Safety
 * `nums` and `dens` must point to `n` values each; `out` must be valid.
 */
enum FlStatus facloc_instance_from_fractions(const int64_t *nums,
                                             const int64_t *dens,
                                             size_t n,
                                             size_t z,
                                             struct FlInstance **out);

/**
 * # Safety
 * `instance` must come from this library and not be used afterwards.
 */
void facloc_instance_free(struct FlInstance *instance);

/**
 * Number of agents, 0 for NULL.
 *
 * # Safety
 * `instance` must be NULL or a live handle.
 */
size_t facloc_instance_n(const struct FlInstance *instance);

/**
 * Outlier budget, 0 for NULL.
 *
 * # Safety
 * `instance` must be NULL or a live handle.
 */
size_t facloc_instance_z(const struct FlInstance *instance);

/**
 * Sets the predicted location (`"p/q"` or decimal); NULL clears it.
 *
 * # Safety
 * `instance` must be a live handle; `value` NULL or a NUL-terminated string.
 */
enum FlStatus facloc_instance_set_prediction(struct FlInstance *instance, const char *value);

/**
 * Optimal solution as JSON (`location`, `cost`, `window`, `alternates`).
 *
 * # Safety
 * `instance` must be a live handle and `out` a valid pointer.
 */
enum FlStatus facloc_solve(const struct FlInstance *instance,
                           enum FlObjective objective,
                           char **out);

/**
 * Outlier-adjusted cost at `y`, written as a `p/q` string.
 *
 * # Safety
 * `instance` must be a live handle, `y` a NUL-terminated string and `out` valid.
 */
enum FlStatus facloc_eval_cost(const struct FlInstance *instance,
                               const char *y,
                               enum FlObjective objective,
                               char **out);

/**
 * Mechanism outcome as JSON: a `p/q` string, `"inf"`/`"-inf"`, or a list of
 * `[location, probability]` pairs for lotteries. `mech` takes the short form
 * (`left_z`, `kth:3`, `in_range:1`, ...) or a JSON tag.
 *
 * # Safety
 * Pointers must be valid as for [`facloc_solve`]; `mech` NUL-terminated.
 */
enum FlStatus facloc_run(const struct FlInstance *instance, const char *mech, char **out);

/**
 * Ratio report as JSON (`mechanism_cost`, `opt_cost`, `ratio`, `bound`, ...).
 *
 * # Safety
 * As for [`facloc_run`].
 */
enum FlStatus facloc_measure_ratio(const struct FlInstance *instance,
                                   const char *mech,
                                   enum FlObjective objective,
                                   char **out);

/**
 * Searches the default deviation grid. `*found` is set when a profitable
 * misreport exists and `out` receives the certificate JSON (`null` if none).
 * Randomized mechanisms are compared in expectation.
 *
 * # Safety
 * As for [`facloc_run`]; `found` must be a valid pointer.
 */
enum FlStatus facloc_check_sp(const struct FlInstance *instance,
                              const char *mech,
                              bool *found,
                              char **out);

/**
 * Releases a string returned by this library.
 *
 * # Safety
 * `s` must be NULL or a string from this library, released only once.
 */
void facloc_string_free(char *s);

/**
 * Library version, statically allocated.
 */
const char *facloc_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FACLOC_H */
