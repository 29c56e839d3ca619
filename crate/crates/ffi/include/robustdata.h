#ifndef ROBUSTDATA_H
#define ROBUSTDATA_H

/* Generated by cbindgen from crates/ffi/src. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum RdStatus {
  RD_STATUS_OK = 0,
  RD_STATUS_NULL_POINTER = 1,
  RD_STATUS_INVALID_ARGUMENT = 2,
  RD_STATUS_SHAPE = 3,
  RD_STATUS_IO = 4,
  RD_STATUS_PARSE = 5,
  RD_STATUS_CHECKPOINT = 6,
  RD_STATUS_PANIC = 7,
} RdStatus;

/**
 * Scoring rule used by [`rd_quality_rank`].
 */
typedef enum RdMeasure {
  RD_MEASURE_STABILITY = 0,
  RD_MEASURE_PROBABILITY = 1,
  RD_MEASURE_MIN_PERTURBATION = 2,
  RD_MEASURE_LEARNING_ORDER = 3,
} RdMeasure;

/**
 * Opaque dataset handle.
 */
typedef struct RdDataset RdDataset;

/**
 * Opaque classifier handle.
 */
typedef struct RdNetwork RdNetwork;

/**
 * ℓ∞ PGD parameters. `target_class < 0` means untargeted.
 */
typedef struct RdAttackConfig {
  double epsilon;
  double step_size;
  size_t iterations;
  size_t restarts;
  bool random_start;
  int64_t target_class;
} RdAttackConfig;

typedef struct RdAttackResult {
  bool success;
  /**
   * First fooling iteration; 0 for inputs already misclassified, the
   * iteration budget if the attack never succeeded.
   */
  size_t kappa;
  double loss;
} RdAttackResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Static description of a status code. Never null.
 */
const char *rd_status_message(enum RdStatus status);

/**
 * Message of the most recent failure on the calling thread, or an empty
 * string. The pointer stays valid until the next failing call on this
 * thread.
 */
const char *rd_last_error(void);

/**
 * Desk-scale PGD-10: radius 0.1, step 0.025, one random start.
 */
struct RdAttackConfig rd_attack_config_default(void);

/**
 * Fresh ReLU network with `hidden_len` hidden layers, initialised from
 * `seed`.
 *
 * # Safety
 * `hidden` must point to `hidden_len` readable values; `out` must be
 * writable.
 */
enum RdStatus rd_network_new(size_t input_dim,
                             const size_t *hidden,
                             size_t hidden_len,
                             size_t class_count,
                             uint64_t seed,
                             struct RdNetwork **out);

/**
 * Loads a checkpoint written by the CLI or [`rd_network_save`].
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum RdStatus rd_network_load(const char *path, struct RdNetwork **out);

/**
 * # Safety
 * `net` must be a live handle and `path` a NUL-terminated string.
 */
enum RdStatus rd_network_save(const struct RdNetwork *net, const char *path);

/**
 * Releases a handle. Null is ignored.
 *
 * # Safety
 * `net` must be null or a handle not yet freed.
 */
void rd_network_free(struct RdNetwork *net);

/**
 * Input dimension, or 0 for a null handle.
 *
 * # Safety
 * `net` must be null or a live handle.
 */
size_t rd_network_input_dim(const struct RdNetwork *net);

/**
 * Number of classes, or 0 for a null handle.
 *
 * # Safety
 * `net` must be null or a live handle.
 */
size_t rd_network_class_count(const struct RdNetwork *net);

/**
 * Writes the logits of `x` into `logits_out` (length = class count).
 *
 * # Safety
 * Buffers must match their stated lengths.
 */
enum RdStatus rd_network_logits(const struct RdNetwork *net,
                                const double *x,
                                size_t x_len,
                                double *logits_out,
                                size_t logits_len);

/**
 * Untargeted or targeted cross-entropy PGD with `cfg.restarts` restarts
 * drawn from `seed`. The adversarial point goes to `adv_out` (length =
 * input dimension).
 *
 * # Safety
 * Pointers must be valid and buffers must match their stated lengths.
 */
enum RdStatus rd_pgd(const struct RdNetwork *net,
                     const double *x,
                     size_t x_len,
                     size_t label,
                     const struct RdAttackConfig *cfg,
                     uint64_t seed,
                     double *adv_out,
                     size_t adv_len,
                     struct RdAttackResult *result);

/**
 * Single signed-gradient step of radius `epsilon`.
 *
 * # Safety
 * Pointers must be valid and buffers must match their stated lengths.
 */
enum RdStatus rd_fgsm(const struct RdNetwork *net,
                      const double *x,
                      size_t x_len,
                      size_t label,
                      double epsilon,
                      double *adv_out,
                      size_t adv_len,
                      struct RdAttackResult *result);

/**
 * Smallest grid radius `j * step <= eps_max` at which iterative FGSM
 * changes the prediction. `found_out` is false (and the radius `eps_max`)
 * when none does.
 *
 * # Safety
 * Pointers must be valid and `x` must hold `x_len` values.
 */
enum RdStatus rd_min_perturbation(const struct RdNetwork *net,
                                  const double *x,
                                  size_t x_len,
                                  size_t label,
                                  double step,
                                  double eps_max,
                                  double *radius_out,
                                  bool *found_out);

/**
 * Loads a dataset file in the CLI's delimited format.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum RdStatus rd_dataset_load(const char *path, struct RdDataset **out);

/**
 * Releases a handle. Null is ignored.
 *
 * # Safety
 * `ds` must be null or a handle not yet freed.
 */
void rd_dataset_free(struct RdDataset *ds);

/**
 * Number of examples, or 0 for a null handle.
 *
 * # Safety
 * `ds` must be null or a live handle.
 */
size_t rd_dataset_len(const struct RdDataset *ds);

/**
 * Feature dimension, or 0 for a null handle.
 *
 * # Safety
 * `ds` must be null or a live handle.
 */
size_t rd_dataset_dim(const struct RdDataset *ds);

/**
 * Copies example `index` (file order).
 *
 * # Safety
 * Pointers must be valid and `features_out` must hold `features_len`
 * values.
 */
enum RdStatus rd_dataset_example(const struct RdDataset *ds,
                                 size_t index,
                                 double *features_out,
                                 size_t features_len,
                                 size_t *label_out,
                                 uint64_t *id_out);

/**
 * Clean accuracy on `ds` when `cfg` is null, PGD robust accuracy
 * otherwise. Example `i` is attacked with a stream derived from `seed` and
 * its id.
 *
 * # Safety
 * `net` and `ds` must be live handles, `cfg` null or valid, `out`
 * writable.
 */
enum RdStatus rd_accuracy(const struct RdNetwork *net,
                          const struct RdDataset *ds,
                          const struct RdAttackConfig *cfg,
                          uint64_t seed,
                          double *out);

/**
 * Spearman's ρ between two score vectors of length `n` (ties broken by
 * position).
 *
 * # Safety
 * `a` and `b` must hold `n` values; `out` must be writable.
 */
enum RdStatus rd_spearman(const double *a, const double *b, size_t n, double *out);

/**
 * Quality ranks `1..=n` for `scores` under `measure`: rank 1 is the
 * lowest-quality example. `ranks_out[i]` belongs to `ids[i]`; ids must be
 * distinct.
 *
 * # Safety
 * `ids`, `scores` and `ranks_out` must hold `n` values.
 */
enum RdStatus rd_quality_rank(const uint64_t *ids,
                              const double *scores,
                              size_t n,
                              enum RdMeasure measure,
                              double *ranks_out);

/**
 * Batch-mean-normalised GAIRAT weights for `n` attack counts out of
 * `k_max` iterations.
 *
 * # Safety
 * `kappas` and `weights_out` must hold `n` values.
 */
enum RdStatus rd_gairat_weights(const size_t *kappas,
                                size_t n,
                                size_t k_max,
                                double lambda,
                                double *weights_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ROBUSTDATA_H */
