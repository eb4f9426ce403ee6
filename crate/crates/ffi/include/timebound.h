#ifndef TIMEBOUND_H
#define TIMEBOUND_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every call. The first five values match the exit codes of the
 * `timebound` command-line tool.
 */
typedef enum TbStatus {
  /**
   * Success; for checks, every statement holds.
   */
  TB_OK = 0,
  /**
   * A checked statement does not hold.
   */
  TB_FAILS = 1,
  /**
   * A node or state budget was exhausted.
   */
  TB_BUDGET = 2,
  /**
   * A simulated adversary broke the Unit-Time condition.
   */
  TB_UNIT_TIME_VIOLATION = 3,
  /**
   * The statements do not form a chain.
   */
  TB_BROKEN_CHAIN = 4,
  /**
   * An argument or scenario file is invalid.
   */
  TB_INVALID_ARGUMENT = 64,
  /**
   * A required pointer was null.
   */
  TB_NULL_POINTER = 65,
  /**
   * Reading a file failed.
   */
  TB_IO_ERROR = 66,
  /**
   * An internal error; the library caught a panic.
   */
  TB_INTERNAL = 70,
} TbStatus;

/**
 * A Lehmann–Rabin ring.
 */
typedef struct TbRing TbRing;

/**
 * A parsed and validated scenario file.
 */
typedef struct TbScenario TbScenario;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *tb_version(void);

/**
 * Message describing the last failing call on this thread, or null. The
 * pointer stays valid until the next call into the library on this thread.
 */
const char *tb_last_error(void);

/**
 * Releases a string returned by the library. Null is ignored.
 *
 * # Safety
 * `s` must be null or a string returned by this library, not yet freed.
 */
void tb_string_free(char *s);

/**
 * Parses and validates a scenario file given as JSON text.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum TbStatus tb_scenario_from_json(const char *json, struct TbScenario **out);

/**
 * Loads and validates a scenario file from disk.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum TbStatus tb_scenario_load(const char *path, struct TbScenario **out);

/**
 * Releases a scenario handle. Null is ignored.
 *
 * # Safety
 * `scenario` must be null or a handle from this library, not yet freed.
 */
void tb_scenario_free(struct TbScenario *scenario);

/**
 * Replaces the seed of a loaded scenario.
 *
 * # Safety
 * `scenario` must be a live handle.
 */
enum TbStatus tb_scenario_set_seed(struct TbScenario *scenario, uint64_t seed);

/**
 * Checks every statement and scenario of `scenario`. On return `report_json`
 * holds the JSON report (free it with [`tb_string_free`]) unless the
 * status is `TbInvalidArgument`, `TbNullPointer`, `TbIoError` or
 * `TbInternal`.
 *
 * # Safety
 * `scenario` must be a live handle; `report_json` must be writable.
 */
enum TbStatus tb_verify(const struct TbScenario *scenario, char **report_json);

/**
 * Composes the statements of `scenario` into a chain and bounds the
 * expected time. Report ownership as for [`tb_verify`].
 *
 * # Safety
 * `scenario` must be a live handle; `report_json` must be writable.
 */
enum TbStatus tb_chain(const struct TbScenario *scenario, char **report_json);

/**
 * Creates a ring of `n` processes, `2 <= n <= 64`.
 *
 * # Safety
 * `out` must be writable.
 */
enum TbStatus tb_ring_new(size_t n, struct TbRing **out);

/**
 * Number of processes of a ring, or 0 for null.
 *
 * # Safety
 * `ring` must be null or a live handle.
 */
size_t tb_ring_size(const struct TbRing *ring);

/**
 * Releases a ring handle. Null is ignored.
 *
 * # Safety
 * `ring` must be null or a handle from this library, not yet freed.
 */
void tb_ring_free(struct TbRing *ring);

/**
 * Checks the resource invariant on the ring: on every reachable state when
 * `walk_length` is 0, otherwise along `walks` random walks of that length.
 * Returns `TbOk` when it holds and `TbFails` with a counterexample in the
 * report otherwise. Report ownership as for [`tb_verify`].
 *
 * # Safety
 * `ring` must be a live handle; `report_json` must be writable.
 */
enum TbStatus tb_ring_check_invariants(const struct TbRing *ring,
                                       uint64_t walks,
                                       size_t walk_length,
                                       size_t budget_states,
                                       uint64_t seed,
                                       char **report_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TIMEBOUND_H */
