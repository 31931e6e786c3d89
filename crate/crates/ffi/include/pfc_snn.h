/* Copyright 2026 The pfc-snn Authors
 * SPDX-License-Identifier: Apache-2.0 */

#ifndef PFC_SNN_H
#define PFC_SNN_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible function.
 */
typedef enum PfcStatus {
  PFC_STATUS_OK = 0,
  PFC_STATUS_NULL_POINTER = 1,
  PFC_STATUS_INVALID_ARGUMENT = 2,
  PFC_STATUS_CONFIG = 3,
  PFC_STATUS_IO = 4,
  PFC_STATUS_DATASET = 5,
  PFC_STATUS_NOT_FOUND = 6,
  PFC_STATUS_BUFFER_TOO_SMALL = 7,
  PFC_STATUS_PANIC = 8,
} PfcStatus;

/**
 * Stimulus categories, matching the order used in summaries.
 */
typedef enum PfcCategory {
  PFC_CATEGORY_TARGET = 0,
  PFC_CATEGORY_NON_TARGET = 1,
  PFC_CATEGORY_CONTEXT_TARGET = 2,
  PFC_CATEGORY_CONTEXT_NON_TARGET = 3,
} PfcCategory;

/**
 * Experiment configuration.
 */
typedef struct PfcConfig PfcConfig;

/**
 * A live network that can be stepped tick by tick.
 */
typedef struct PfcNetwork PfcNetwork;

/**
 * Outcome of one experiment condition.
 */
typedef struct PfcResult PfcResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *pfc_version(void);

/**
 * Copies the calling thread's last error message into `buf` (always
 * NUL-terminated when `len > 0`) and returns the full message length, or 0
 * when there is no error.
 */
size_t pfc_last_error(char *buf, size_t len);

/**
 * Configuration with every default filled in.
 */
struct PfcConfig *pfc_config_new(void);

/**
 * Reads a key-value configuration file.
 */
enum PfcStatus pfc_config_load(const char *path, struct PfcConfig **out_cfg);

/**
 * Sets one key, using the same names as the configuration file.
 */
enum PfcStatus pfc_config_set(struct PfcConfig *cfg, const char *key, const char *value);

/**
 * Writes the full configuration snapshot into `buf` and stores its length
 * (excluding the NUL) in `out_len`. Returns `BufferTooSmall` when
 * `len <= *out_len`; call with a null buffer to query the size.
 */
enum PfcStatus pfc_config_to_text(const struct PfcConfig *cfg,
                                  char *buf,
                                  size_t len,
                                  size_t *out_len);

void pfc_config_free(struct PfcConfig *cfg);

/**
 * Runs the condition selected by `experiment.schedule` and
 * `experiment.lesion`, loading the dataset named in the configuration.
 */
enum PfcStatus pfc_run_experiment(const struct PfcConfig *cfg, struct PfcResult **out_result);

/**
 * Accuracy for one category; `NotFound` when it was never presented.
 */
enum PfcStatus pfc_result_accuracy(const struct PfcResult *res,
                                   enum PfcCategory category,
                                   double *out_acc);

/**
 * Correct and total trial counts for one category.
 */
enum PfcStatus pfc_result_counts(const struct PfcResult *res,
                                 enum PfcCategory category,
                                 size_t *out_correct,
                                 size_t *out_total);

/**
 * Index of the response neuron calibrated as the target neuron.
 */
enum PfcStatus pfc_result_target_neuron(const struct PfcResult *res, size_t *out_index);

void pfc_result_free(struct PfcResult *res);

/**
 * Builds an untrained network from the configuration's network section.
 */
enum PfcStatus pfc_network_new(const struct PfcConfig *cfg,
                               uint64_t seed,
                               struct PfcNetwork **out_net);

/**
 * Number of memory-layer neurons.
 */
enum PfcStatus pfc_network_memory_size(const struct PfcNetwork *net, size_t *out_n);

/**
 * Enables or disables plasticity.
 */
enum PfcStatus pfc_network_set_learning(struct PfcNetwork *net, bool on);

/**
 * Advances one tick. `inputs` lists the input neurons (0..784) firing this
 * tick. Indices of memory neurons that fired are written to `mem_out` (room
 * for `mem_cap`), their count to `out_n_mem`; `out_resp` receives a bit mask
 * of response neurons that fired (bit 0 and bit 1).
 */
enum PfcStatus pfc_network_tick(struct PfcNetwork *net,
                                const uint32_t *inputs,
                                size_t n_inputs,
                                uint32_t *mem_out,
                                size_t mem_cap,
                                size_t *out_n_mem,
                                uint32_t *out_resp);

/**
 * Effective input-to-memory weight (0 for a lesioned synapse).
 */
enum PfcStatus pfc_network_input_weight(const struct PfcNetwork *net,
                                        size_t pre,
                                        size_t post,
                                        double *out_w);

void pfc_network_free(struct PfcNetwork *net);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PFC_SNN_H */
