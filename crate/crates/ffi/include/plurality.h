#ifndef PLURALITY_H
#define PLURALITY_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PlStatus {
  PL_STATUS_OK = 0,
  PL_STATUS_NULL_POINTER = 1,
  PL_STATUS_INVALID_ARGUMENT = 2,
  PL_STATUS_PARSE = 3,
  PL_STATUS_CAP_EXCEEDED = 4,
  PL_STATUS_SINGULAR = 5,
  PL_STATUS_BUFFER_SIZE = 6,
  PL_STATUS_PANIC = 7,
} PlStatus;

/**
 * Opaque exact Markov chain.
 */
typedef struct PlChain PlChain;

/**
 * Opaque color-count vector.
 */
typedef struct PlConfiguration PlConfiguration;

/**
 * Opaque 3-input rule.
 */
typedef struct PlRule PlRule;

typedef struct PlBiasStats {
  uint64_t m;
  uint64_t s;
  double alpha;
  double gamma;
  /**
   * Lowest-index color holding the maximum.
   */
  uint32_t plurality;
  /**
   * Number of colors tied at the maximum.
   */
  uint32_t majority_set_size;
} PlBiasStats;

typedef struct PlClassification {
  bool clear_majority;
  bool uniform;
  bool in_m3;
  /**
   * Set when `uniform` is false.
   */
  bool has_uniform_counterexample;
  uint32_t counterexample_colors[3];
  uint8_t counterexample_deltas[3];
} PlClassification;

typedef struct PlTrialResult {
  bool converged;
  /**
   * Winning color, or -1 when not converged.
   */
  int64_t winner;
  uint64_t rounds;
  bool reached_majority;
} PlTrialResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. Owned by the library.
 */
const char *pl_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *pl_version(void);

/**
 * # Safety
 * `counts` points to `k` readable values; `out` is writable.
 */
enum PlStatus pl_configuration_new(const uint64_t *counts, size_t k, struct PlConfiguration **out);

/**
 * # Safety
 * `c` is null or a handle from `pl_configuration_new` not yet freed.
 */
void pl_configuration_free(struct PlConfiguration *c);

/**
 * # Safety
 * `c` is a live handle.
 */
size_t pl_configuration_k(const struct PlConfiguration *c);

/**
 * # Safety
 * `c` is a live handle.
 */
uint64_t pl_configuration_n(const struct PlConfiguration *c);

/**
 * # Safety
 * `c` is a live handle; `out` is writable.
 */
enum PlStatus pl_bias_stats(const struct PlConfiguration *c, struct PlBiasStats *out);

/**
 * Per-node pick probabilities under 3-majority; `len` must equal `k`.
 *
 * # Safety
 * `c` is a live handle; `out` has room for `len` doubles.
 */
enum PlStatus pl_pick_probabilities_3maj(const struct PlConfiguration *c, double *out, size_t len);

/**
 * `3maj`, `3maj-first` or `median`.
 *
 * # Safety
 * `name` is a NUL-terminated string; `out` is writable.
 */
enum PlStatus pl_rule_builtin(const char *name, struct PlRule **out);

/**
 * Parses a rule table in the text format (`k=<k>` then `a b c -> y` lines).
 *
 * # Safety
 * `text` is a NUL-terminated string; `out` is writable.
 */
enum PlStatus pl_rule_parse(const char *text, struct PlRule **out);

/**
 * # Safety
 * `r` is null or a live rule handle.
 */
void pl_rule_free(struct PlRule *r);

/**
 * # Safety
 * `r` is a live handle; `out` is writable.
 */
enum PlStatus pl_classify(const struct PlRule *r, size_t k, struct PlClassification *out);

/**
 * Runs one trial from `c` without adversary. `dynamics` is a built-in name
 * such as `3maj`, `median`, `voter` or `hmaj:5`.
 *
 * # Safety
 * `c` is a live handle; `dynamics` is a NUL-terminated string; `out` is
 * writable.
 */
enum PlStatus pl_run_trial(const struct PlConfiguration *c,
                           const char *dynamics,
                           uint64_t max_rounds,
                           uint64_t seed,
                           struct PlTrialResult *out);

/**
 * # Safety
 * `dynamics` is a NUL-terminated string; `out` is writable.
 */
enum PlStatus pl_chain_build(uint64_t n, size_t k, const char *dynamics, struct PlChain **out);

/**
 * # Safety
 * `ch` is null or a live chain handle.
 */
void pl_chain_free(struct PlChain *ch);

/**
 * # Safety
 * `ch` is a live handle.
 */
size_t pl_chain_state_count(const struct PlChain *ch);

/**
 * Index of the state with the given counts.
 *
 * # Safety
 * `ch` is a live handle; `counts` points to `k` values; `out` is writable.
 */
enum PlStatus pl_chain_state_index(const struct PlChain *ch,
                                   const uint64_t *counts,
                                   size_t k,
                                   size_t *out);

/**
 * Expected rounds to absorption from `state`.
 *
 * # Safety
 * `ch` is a live handle; `out` is writable.
 */
enum PlStatus pl_chain_absorption_time(const struct PlChain *ch, size_t state, double *out);

/**
 * Probability of ending monochromatic in each color, indexed by color;
 * `len` must equal `k`.
 *
 * # Safety
 * `ch` is a live handle; `out` has room for `len` doubles.
 */
enum PlStatus pl_chain_absorption_probabilities(const struct PlChain *ch,
                                                size_t state,
                                                double *out,
                                                size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PLURALITY_H */
