#ifndef RELFIX_H
#define RELFIX_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RelfixStatus {
  RELFIX_STATUS_OK = 0,
  RELFIX_STATUS_NULL_POINTER = 1,
  RELFIX_STATUS_INVALID_UTF8 = 2,
  RELFIX_STATUS_INVALID_INPUT = 3,
  RELFIX_STATUS_PARSE_ERROR = 4,
  RELFIX_STATUS_IO_ERROR = 5,
  /**
   * The requested value does not exist, e.g. no fixed point was reached.
   */
  RELFIX_STATUS_NOT_FOUND = 6,
  RELFIX_STATUS_PANIC = 7,
} RelfixStatus;

/**
 * A validated-shape finite instance.
 */
typedef struct RelfixInstance RelfixInstance;

/**
 * Result of a certified existence solve.
 */
typedef struct RelfixSolution RelfixSolution;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *relfix_last_error(void);

/**
 * Parses instance JSON.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a writable pointer.
 */
enum RelfixStatus relfix_instance_from_json(const char *json, struct RelfixInstance **out);

/**
 * Reads instance JSON from a file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a writable pointer.
 */
enum RelfixStatus relfix_instance_load(const char *path, struct RelfixInstance **out);

/**
 * Releases an instance; NULL is ignored.
 *
 * # Safety
 * `inst` must come from this library and not be used afterwards.
 */
void relfix_instance_free(struct RelfixInstance *inst);

/**
 * Number of points.
 *
 * # Safety
 * `inst` must be a live handle and `out` writable.
 */
enum RelfixStatus relfix_instance_len(const struct RelfixInstance *inst, size_t *out);

/**
 * Metric axioms and transitivity.
 *
 * # Safety
 * `inst` must be a live handle and `out` writable.
 */
enum RelfixStatus relfix_instance_validate(const struct RelfixInstance *inst, bool *out);

/**
 * Serializes the instance back to JSON.
 *
 * # Safety
 * `inst` must be a live handle and `out` writable.
 */
enum RelfixStatus relfix_instance_to_json(const struct RelfixInstance *inst, char **out);

/**
 * Hypothesis report for theorem 3 or 5 as JSON.
 *
 * # Safety
 * `inst` must be a live handle and `out` writable.
 */
enum RelfixStatus relfix_check_json(const struct RelfixInstance *inst, uint8_t theorem, char **out);

/**
 * Certified Picard iteration from the instance start point.
 *
 * # Safety
 * `inst` must be a live handle and `out` writable.
 */
enum RelfixStatus relfix_solve(const struct RelfixInstance *inst, struct RelfixSolution **out);

/**
 * Releases a solution; NULL is ignored.
 *
 * # Safety
 * `sol` must come from this library and not be used afterwards.
 */
void relfix_solution_free(struct RelfixSolution *sol);

/**
 * The limit point; `RELFIX_STATUS_NOT_FOUND` when the orbit cycled.
 *
 * # Safety
 * `sol` must be a live handle and `out` writable.
 */
enum RelfixStatus relfix_solution_fixed_point(const struct RelfixSolution *sol, size_t *out);

/**
 * Number of map applications performed.
 *
 * # Safety
 * `sol` must be a live handle and `out` writable.
 */
enum RelfixStatus relfix_solution_iterations(const struct RelfixSolution *sol, size_t *out);

/**
 * Whether every hypothesis of the certificate holds.
 *
 * # Safety
 * `sol` must be a live handle and `out` writable.
 */
enum RelfixStatus relfix_solution_certified(const struct RelfixSolution *sol, bool *out);

/**
 * Full result as JSON.
 *
 * # Safety
 * `sol` must be a live handle and `out` writable.
 */
enum RelfixStatus relfix_solution_to_json(const struct RelfixSolution *sol, char **out);

/**
 * Releases a string returned by this library; NULL is ignored.
 *
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void relfix_string_free(char *s);

/**
 * `m k^n ε`.
 *
 * # Safety
 * `out` must be writable.
 */
enum RelfixStatus relfix_step_bound(size_t m, double k, double epsilon, size_t n, double *out);

/**
 * `k^n ε / (1 - k)`.
 *
 * # Safety
 * `out` must be writable.
 */
enum RelfixStatus relfix_tail_bound(double k, double epsilon, size_t n, double *out);

/**
 * Smallest `n0` with `m k^n0 < 1`.
 *
 * # Safety
 * `out` must be writable.
 */
enum RelfixStatus relfix_select_n0(size_t m, double k, size_t *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RELFIX_H */
