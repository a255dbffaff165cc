#ifndef NEUROSKIN_H
#define NEUROSKIN_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum NsStatus {
  NS_STATUS_OK = 0,
  NS_STATUS_NULL_POINTER = 1,
  NS_STATUS_INVALID_ARGUMENT = 2,
  NS_STATUS_IO = 3,
  NS_STATUS_PARSE = 4,
  NS_STATUS_CONFIG = 5,
  NS_STATUS_SIMULATION = 6,
  NS_STATUS_PANIC = 7,
} NsStatus;

/**
 * Neuron activation selector.
 */
typedef enum NsActivation {
  NS_ACTIVATION_SYMMETRIC_SIGMOID = 0,
  NS_ACTIVATION_LINEAR_SATURATING = 1,
  NS_ACTIVATION_ZERO = 2,
} NsActivation;

/**
 * A membrane with its simulation settings and, when loaded from a config
 * file, its configured input signal.
 */
typedef struct NsModel NsModel;

/**
 * Displacement history: one row per recorded time, first column the output node.
 */
typedef struct NsTrace NsTrace;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next failing call on the same thread.
 */
const char *ns_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *ns_version(void);

/**
 * Builds a model from a TOML experiment file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum NsStatus ns_model_load(const char *path, struct NsModel **out);

/**
 * Builds an `nx` x `ny` membrane of square elements supported on its left
 * edge, with default material and neurons. `output_node` is 1-based.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum NsStatus ns_model_build(size_t nx,
                             size_t ny,
                             double size,
                             size_t output_node,
                             double dt,
                             size_t steps,
                             struct NsModel **out);

/**
 * # Safety
 * `model` must come from this library and not be used afterwards. Null is ignored.
 */
void ns_model_free(struct NsModel *model);

/**
 * # Safety
 * `model` must be a live handle or null (returns 0).
 */
size_t ns_model_element_count(const struct NsModel *model);

/**
 * Number of input channels, one per supported node.
 *
 * # Safety
 * `model` must be a live handle or null (returns 0).
 */
size_t ns_model_support_count(const struct NsModel *model);

/**
 * # Safety
 * `model` must be a live handle or null (returns 0).
 */
size_t ns_model_steps(const struct NsModel *model);

/**
 * Sets element moduli from `len` values; `len` must divide the element
 * count and each value covers a contiguous block of elements.
 *
 * # Safety
 * `model` must be a live handle and `values` point to `len` doubles.
 */
enum NsStatus ns_model_set_moduli(struct NsModel *model, const double *values, size_t len);

/**
 * Gives every element the same neuron.
 *
 * # Safety
 * `model` must be a live handle.
 */
enum NsStatus ns_model_set_neuron(struct NsModel *model,
                                  double input_weight,
                                  enum NsActivation activation,
                                  double output_weight);

/**
 * Runs the model with an explicit input: `steps * channels` doubles, row
 * `k` holding every support's prescribed horizontal displacement at step `k + 1`.
 *
 * # Safety
 * `model` must be a live handle, `input` point to `steps * channels` doubles
 * and `out` be a valid pointer.
 */
enum NsStatus ns_simulate(const struct NsModel *model,
                          const double *input,
                          size_t steps,
                          size_t channels,
                          struct NsTrace **out);

/**
 * Runs a config-loaded model with its configured input.
 *
 * # Safety
 * `model` must be a live handle and `out` a valid pointer.
 */
enum NsStatus ns_simulate_configured(const struct NsModel *model, struct NsTrace **out);

/**
 * # Safety
 * `trace` must come from this library and not be used afterwards. Null is ignored.
 */
void ns_trace_free(struct NsTrace *trace);

/**
 * # Safety
 * `trace` must be a live handle or null (returns 0).
 */
size_t ns_trace_rows(const struct NsTrace *trace);

/**
 * # Safety
 * `trace` must be a live handle or null (returns 0).
 */
size_t ns_trace_columns(const struct NsTrace *trace);

/**
 * Row-major `rows * columns` displacements, owned by the trace.
 *
 * # Safety
 * `trace` must be a live handle or null (returns null).
 */
const double *ns_trace_data(const struct NsTrace *trace);

/**
 * `rows` sample times, owned by the trace.
 *
 * # Safety
 * `trace` must be a live handle or null (returns null).
 */
const double *ns_trace_times(const struct NsTrace *trace);

/**
 * Root-mean-square difference of two series of length `len`.
 *
 * # Safety
 * `a` and `b` must point to `len` doubles and `out` be a valid pointer.
 */
enum NsStatus ns_rmse(const double *a, const double *b, size_t len, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NEUROSKIN_H */
