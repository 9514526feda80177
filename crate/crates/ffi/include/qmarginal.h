#ifndef QMARGINAL_H
#define QMARGINAL_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every call.
 */
typedef enum QmStatus {
  QM_STATUS_OK = 0,
  /**
   * A required pointer was null or a string was not UTF-8.
   */
  QM_STATUS_NULL_OR_INVALID_ARGUMENT = 1,
  /**
   * Input JSON did not match its schema.
   */
  QM_STATUS_SCHEMA = 2,
  /**
   * Parameters or configuration were rejected.
   */
  QM_STATUS_CONFIG = 3,
  /**
   * A numerical precondition failed (dimensions, spectra, positivity).
   */
  QM_STATUS_NUMERICAL = 4,
  /**
   * A Rust panic was caught at the boundary.
   */
  QM_STATUS_PANIC = 5,
} QmStatus;

/**
 * A promise-problem answer.
 */
typedef enum QmDecision {
  QM_DECISION_YES = 0,
  QM_DECISION_NO = 1,
} QmDecision;

/**
 * A consistency instance in trace or Pauli-coordinate form.
 */
typedef struct QmConsistency QmConsistency;

/**
 * A Local Hamiltonian instance.
 */
typedef struct QmLocalHamiltonian QmLocalHamiltonian;

/**
 * A global density matrix.
 */
typedef struct QmState QmState;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failing call on this thread, or null. Valid until the
 * next failing call on the same thread.
 */
const char *qm_last_error(void);

/**
 * Library version as a static string.
 */
const char *qm_version(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void qm_string_free(char *s);

/**
 * Parses a Local Hamiltonian instance from JSON.
 *
 * # Safety
 * `json` must be a nul-terminated string; `out` must be writable.
 */
enum QmStatus qm_lh_parse(const char *json, struct QmLocalHamiltonian **out);

/**
 * Random promise instance; `promise_yes` selects the YES side.
 *
 * # Safety
 * `out` must be writable.
 */
enum QmStatus qm_lh_generate(size_t n,
                             size_t m,
                             size_t k,
                             double gap,
                             bool promise_yes,
                             uint64_t seed,
                             struct QmLocalHamiltonian **out);

/**
 * Canonical JSON of an instance, released with [`qm_string_free`].
 *
 * # Safety
 * `lh` must be a live handle; `out` must be writable.
 */
enum QmStatus qm_lh_to_json(const struct QmLocalHamiltonian *lh, char **out);

/**
 * Exact ground energy by dense diagonalization.
 *
 * # Safety
 * `lh` must be a live handle; `out` must be writable.
 */
enum QmStatus qm_lh_min_eigenvalue(const struct QmLocalHamiltonian *lh, double *out);

/**
 * Majority answer of `runs` (odd) reduction runs. `config_json` may be null.
 *
 * # Safety
 * `lh` must be a live handle; `config_json` null or a nul-terminated string;
 * `answer` must be writable.
 */
enum QmStatus qm_lh_reduce(const struct QmLocalHamiltonian *lh,
                           const char *config_json,
                           size_t runs,
                           uint64_t seed,
                           enum QmDecision *answer);

/**
 * Releases a handle. Null is ignored.
 *
 * # Safety
 * `lh` must come from this library and not have been freed.
 */
void qm_lh_free(struct QmLocalHamiltonian *lh);

/**
 * Parses a consistency instance in either form.
 *
 * # Safety
 * `json` must be a nul-terminated string; `out` must be writable.
 */
enum QmStatus qm_consistency_parse(const char *json, struct QmConsistency **out);

/**
 * Runs the consistency oracle. `distance` may be null.
 *
 * # Safety
 * `inst` must be a live handle; `config_json` null or a nul-terminated
 * string; `decision` writable; `distance` null or writable.
 */
enum QmStatus qm_consistency_check(const struct QmConsistency *inst,
                                   const char *config_json,
                                   enum QmDecision *decision,
                                   double *distance);

/**
 * # Safety
 * `inst` must come from this library and not have been freed.
 */
void qm_consistency_free(struct QmConsistency *inst);

/**
 * Parses a state file `{"n", "matrix"}`.
 *
 * # Safety
 * `json` must be a nul-terminated string; `out` must be writable.
 */
enum QmStatus qm_state_parse(const char *json, struct QmState **out);

/**
 * # Safety
 * `state` must come from this library and not have been freed.
 */
void qm_state_free(struct QmState *state);

/**
 * Largest deviation of the witness's acceptance probability from its
 * target over all verifier rounds. Requires a trace-form instance.
 *
 * # Safety
 * `inst` and `witness` must be live handles; `gap` must be writable.
 */
enum QmStatus qm_verifier_gap(const struct QmConsistency *inst,
                              const struct QmState *witness,
                              double *gap);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QMARGINAL_H */
