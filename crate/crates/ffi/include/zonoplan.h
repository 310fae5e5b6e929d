#ifndef ZONOPLAN_H
#define ZONOPLAN_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ZpStatus {
  ZP_STATUS_OK = 0,
  ZP_STATUS_NULL_ARGUMENT = 1,
  ZP_STATUS_INVALID_UTF8 = 2,
  ZP_STATUS_INVALID_JSON = 3,
  ZP_STATUS_CONFIG = 4,
  ZP_STATUS_RUNTIME = 5,
  ZP_STATUS_PANIC = 6,
} ZpStatus;

/**
 * Planner with its reachable sets and run configuration.
 */
typedef struct ZpPlanner ZpPlanner;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, empty after a success.
 * The pointer stays valid until the next library call on this thread.
 */
const char *zp_last_error(void);

/**
 * Releases a string returned by the library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and must not be used afterwards.
 */
void zp_string_free(char *s);

/**
 * Creates a planner from a JSON run configuration. A null `config_json`
 * selects the defaults and the bundled reachable sets.
 *
 * # Safety
 * `config_json` is null or a NUL-terminated string; `out` is writable.
 */
enum ZpStatus zp_planner_new(const char *config_json, struct ZpPlanner **out);

/**
 * Destroys a planner. Null is ignored.
 *
 * # Safety
 * `planner` comes from [`zp_planner_new`] and is not used afterwards.
 */
void zp_planner_free(struct ZpPlanner *planner);

/**
 * Number of maneuver bins in the planner's reachable sets.
 *
 * # Safety
 * `planner` is a live handle; `out` is writable.
 */
enum ZpStatus zp_planner_bin_count(const struct ZpPlanner *planner, size_t *out);

/**
 * Plans once from the scenario's initial state and writes a JSON report
 * to `out_json`.
 *
 * # Safety
 * `planner` is a live handle, `scenario_json` a NUL-terminated string and
 * `out_json` writable. Free the result with [`zp_string_free`].
 */
enum ZpStatus zp_plan_json(const struct ZpPlanner *planner,
                           const char *scenario_json,
                           char **out_json);

/**
 * Runs one closed-loop trial and writes the trial result as JSON.
 *
 * # Safety
 * Same contract as [`zp_plan_json`].
 */
enum ZpStatus zp_simulate_json(const struct ZpPlanner *planner,
                               const char *scenario_json,
                               char **out_json);

/**
 * Signed distance between two zonotopes given as a center `[x, y]` and
 * `n` generators stored as interleaved `x, y` pairs. Negative values are
 * penetration depths.
 *
 * # Safety
 * Centers point to 2 doubles and generator arrays to `2 * n` doubles.
 */
enum ZpStatus zp_signed_distance(const double *center_a,
                                 const double *gens_a,
                                 size_t n_a,
                                 const double *center_b,
                                 const double *gens_b,
                                 size_t n_b,
                                 double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ZONOPLAN_H */
