#ifndef NETSLICE_FFI_H
#define NETSLICE_FFI_H

/* Auto-generated by cbindgen from the netslice-ffi crate; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every call. Anything but `NS_STATUS_OK` leaves the outputs
 * untouched and stores a message for [`ns_last_error`].
 */
typedef enum NsStatus {
  NS_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  NS_STATUS_NULL_ARGUMENT,
  /**
   * A string argument was not valid UTF-8.
   */
  NS_STATUS_UTF8,
  /**
   * The scenario file could not be read.
   */
  NS_STATUS_IO,
  /**
   * The scenario text is not valid TOML (or has unknown keys).
   */
  NS_STATUS_PARSE,
  /**
   * The scenario parsed but failed cross-validation.
   */
  NS_STATUS_VALIDATION,
  /**
   * No slice with the given id exists in the scenario.
   */
  NS_STATUS_UNKNOWN_VN,
  /**
   * A buffer length does not match what the slice needs.
   */
  NS_STATUS_DIMENSION,
  /**
   * The routing matrix keeps all traffic inside; no flow solution.
   */
  NS_STATUS_CLOSED_NETWORK,
  /**
   * Arrival rates meet or exceed service rates somewhere.
   */
  NS_STATUS_UNSTABLE,
  /**
   * Degenerate input (for example, no traffic at all).
   */
  NS_STATUS_DEGENERATE,
  /**
   * A scalar argument is out of range.
   */
  NS_STATUS_INVALID_PARAMETER,
  /**
   * Exhaustive embedding was asked for an instance beyond its limits.
   */
  NS_STATUS_TOO_LARGE,
  /**
   * The output buffer is too small; the needed size was reported.
   */
  NS_STATUS_BUFFER_TOO_SMALL,
} NsStatus;

/**
 * Opaque, immutable scenario handle.
 */
typedef struct NsScenario NsScenario;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Version of the underlying library as a static NUL-terminated string.
 */
const char *ns_version(void);

/**
 * Short static name of a status code.
 */
const char *ns_status_name(enum NsStatus status);

/**
 * Copy the current thread's last error message into `buf` (NUL-terminated).
 * On success `written` holds the message length without the NUL; when the
 * buffer is too small, `written` holds the required size including the NUL
 * and nothing is copied.
 *
 * # Safety
 * `buf` must point to at least `len` writable bytes; `written` must be a
 * valid pointer.
 */
enum NsStatus ns_last_error(char *buf, size_t len, size_t *written);

/**
 * Parse a scenario from TOML text into a new handle.
 *
 * # Safety
 * `text` must be a valid NUL-terminated string; `out` must be a valid
 * pointer. The returned handle must be freed with [`ns_scenario_free`].
 */
enum NsStatus ns_scenario_parse(const char *text, struct NsScenario **out);

/**
 * Read and parse a scenario file into a new handle.
 *
 * # Safety
 * `path` must be a valid NUL-terminated string; `out` must be a valid
 * pointer. The returned handle must be freed with [`ns_scenario_free`].
 */
enum NsStatus ns_scenario_load_file(const char *path, struct NsScenario **out);

/**
 * Release a handle. Null is a no-op.
 *
 * # Safety
 * `scenario` must be a pointer previously returned by a constructor and not
 * yet freed.
 */
void ns_scenario_free(struct NsScenario *scenario);

/**
 * Number of slices described by the scenario.
 *
 * # Safety
 * `scenario` must be a live handle; `out` must be a valid pointer.
 */
enum NsStatus ns_scenario_vn_count(const struct NsScenario *scenario, size_t *out);

/**
 * Copy the id of the `index`-th slice (declaration order) into `buf`,
 * NUL-terminated. Same buffer contract as [`ns_last_error`].
 *
 * # Safety
 * `scenario` must be a live handle; `buf` must point to `len` writable
 * bytes; `written` must be a valid pointer.
 */
enum NsStatus ns_scenario_vn_id(const struct NsScenario *scenario,
                                size_t index,
                                char *buf,
                                size_t len,
                                size_t *written);

/**
 * Number of virtual nodes in one slice.
 *
 * # Safety
 * `scenario` must be a live handle; `vn_id` must be a valid NUL-terminated
 * string; `out` must be a valid pointer.
 */
enum NsStatus ns_scenario_vn_node_count(const struct NsScenario *scenario,
                                        const char *vn_id,
                                        size_t *out);

/**
 * Solve the slice's traffic equations; `out_lambdas` receives one effective
 * arrival rate per virtual node and must hold exactly `len` entries equal to
 * the slice's node count.
 *
 * # Safety
 * `scenario` must be a live handle; `vn_id` a valid string; `out_lambdas`
 * must point to `len` writable doubles.
 */
enum NsStatus ns_scenario_flows(const struct NsScenario *scenario,
                                const char *vn_id,
                                double *out_lambdas,
                                size_t len);

/**
 * Size the slice at the scenario prices. `t_seconds <= 0` means "use the
 * slice's own SLA latency". `out_mus` must hold exactly the slice's node
 * count; `out_total_cost` and `out_alpha` may be null if not wanted.
 *
 * # Safety
 * `scenario` must be a live handle; `vn_id` a valid string; `out_mus` must
 * point to `len` writable doubles; the optional outputs must be valid or
 * null.
 */
enum NsStatus ns_scenario_optimal_capacity(const struct NsScenario *scenario,
                                           const char *vn_id,
                                           double t_seconds,
                                           double *out_mus,
                                           size_t len,
                                           double *out_total_cost,
                                           double *out_alpha);

/**
 * Analytic mean end-to-end delay of the slice under caller-chosen service
 * rates (`mus`, one per virtual node).
 *
 * # Safety
 * `scenario` must be a live handle; `vn_id` a valid string; `mus` must point
 * to `len` readable doubles; `out_delay` must be a valid pointer.
 */
enum NsStatus ns_scenario_mean_delay(const struct NsScenario *scenario,
                                     const char *vn_id,
                                     const double *mus,
                                     size_t len,
                                     double *out_delay);

/**
 * Packet-level simulation of one slice under its sized plan: mean measured
 * delay, the 95% half-width, and the number of completed packets.
 * Deterministic for a given seed.
 *
 * # Safety
 * `scenario` must be a live handle; `vn_id` a valid string; the outputs must
 * be valid pointers or null.
 */
enum NsStatus ns_scenario_simulate_slice(const struct NsScenario *scenario,
                                         const char *vn_id,
                                         double duration_seconds,
                                         uint64_t seed,
                                         double *out_mean_delay,
                                         double *out_ci_half_width,
                                         uint64_t *out_packets);

/**
 * Embed every slice onto the scenario substrate (sized at the scenario
 * prices) and report how many were admitted. `exact` selects exhaustive
 * search; otherwise the greedy heuristic runs.
 *
 * # Safety
 * `scenario` must be a live handle; `out_admitted` must be a valid pointer.
 */
enum NsStatus ns_scenario_embed_count(const struct NsScenario *scenario,
                                      bool exact,
                                      size_t *out_admitted);

/**
 * Size the four-node reference slice directly, without a scenario: external
 * rate `lambda`, admin branch probability `q`, `prices` and `out_mus` are
 * arrays of exactly four doubles.
 *
 * # Safety
 * `prices` must point to 4 readable doubles and `out_mus` to 4 writable
 * doubles; the optional outputs must be valid or null.
 */
enum NsStatus ns_case_study_capacity(double lambda,
                                     double q,
                                     const double *prices,
                                     double t_seconds,
                                     double *out_mus,
                                     double *out_total_cost,
                                     double *out_alpha);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NETSLICE_FFI_H */
