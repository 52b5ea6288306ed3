#ifndef MIXSEL_H
#define MIXSEL_H

/* Generated by cbindgen from crates/ffi/src. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  MIXSEL_STATUS_OK = 0,
  MIXSEL_STATUS_CONFIG_ERROR = 2,
  MIXSEL_STATUS_INFEASIBLE = 3,
  MIXSEL_STATUS_NUMERIC_ERROR = 4,
  MIXSEL_STATUS_NULL_POINTER = 5,
  MIXSEL_STATUS_UNSUPPORTED = 6,
  MIXSEL_STATUS_OUT_OF_RANGE = 7,
  MIXSEL_STATUS_PANIC = 8,
} MixselStatus;

/**
 * Opaque input distribution.
 */
typedef struct MixselInput MixselInput;

/**
 * Opaque Gaussian mixture.
 */
typedef struct MixselMixture MixselMixture;

/**
 * Opaque selection trace.
 */
typedef struct MixselTrace MixselTrace;

/**
 * One row of a selection trace.
 */
typedef struct {
  size_t m;
  double accuracy;
  double penalty;
  double objective;
} MixselRow;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty if none. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *mixsel_last_error(void);

/**
 * Releases a string returned by this library.
 *
 * # Safety
 * `s` must come from a `mixsel_*_to_json` call and not be freed already.
 */
void mixsel_string_free(char *s);

/**
 * Parses an input distribution such as `{"kind":"exponential","rate":1.0,"n_equiv":100}`.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
MixselStatus mixsel_input_from_json(const char *json, MixselInput **out);

/**
 * # Safety
 * `input` must be null or a handle from [`mixsel_input_from_json`].
 */
void mixsel_input_free(MixselInput *input);

/**
 * Equivalent sample size; 0 for a null handle.
 *
 * # Safety
 * `input` must be null or a live handle.
 */
uint64_t mixsel_input_n_equiv(const MixselInput *input);

/**
 * # Safety
 * `input` must be a live handle and `out` a valid pointer.
 */
MixselStatus mixsel_input_density(const MixselInput *input, double x, double *out);

/**
 * Differential entropy of a continuous input.
 *
 * # Safety
 * `input` must be a live handle and `out` a valid pointer.
 */
MixselStatus mixsel_input_entropy(const MixselInput *input, double *out);

/**
 * Parses `{"components":[{"weight":..,"mean":..,"variance":..}, ...]}`.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
MixselStatus mixsel_mixture_from_json(const char *json, MixselMixture **out);

/**
 * Serializes a mixture; free the result with [`mixsel_string_free`].
 *
 * # Safety
 * `mixture` must be a live handle and `out` a valid pointer.
 */
MixselStatus mixsel_mixture_to_json(const MixselMixture *mixture, char **out);

/**
 * # Safety
 * `mixture` must be null or a handle from this library.
 */
void mixsel_mixture_free(MixselMixture *mixture);

/**
 * Number of components; 0 for a null handle.
 *
 * # Safety
 * `mixture` must be null or a live handle.
 */
size_t mixsel_mixture_order(const MixselMixture *mixture);

/**
 * # Safety
 * `mixture` must be a live handle; the output pointers must be valid.
 */
MixselStatus mixsel_mixture_component(const MixselMixture *mixture,
                                      size_t index,
                                      double *weight,
                                      double *mean,
                                      double *variance);

/**
 * Mixture density at `x`; NaN for a null handle.
 *
 * # Safety
 * `mixture` must be null or a live handle.
 */
double mixsel_mixture_density(const MixselMixture *mixture, double x);

/**
 * Maximum-likelihood fit of an `m`-component mixture with default EM settings.
 * `expected_log_density` may be null.
 *
 * # Safety
 * `input` must be a live handle, `out` a valid pointer.
 */
MixselStatus mixsel_fit(const MixselInput *input,
                        size_t m,
                        uint64_t seed,
                        MixselMixture **out,
                        double *expected_log_density);

/**
 * Relative entropy from a continuous input to a mixture.
 *
 * # Safety
 * Handles must be live and `out` valid.
 */
MixselStatus mixsel_relative_entropy(const MixselInput *input,
                                     const MixselMixture *mixture,
                                     double *out);

/**
 * Runs the order search for one criterion, e.g. `{"kind":"bic","n":100}`;
 * an omitted `n` defaults to the input's equivalent sample size.
 *
 * # Safety
 * `input` must be a live handle, `criterion_json` a NUL-terminated string, `out` valid.
 */
MixselStatus mixsel_select(const MixselInput *input,
                           const char *criterion_json,
                           size_t m_max,
                           size_t lookahead,
                           uint64_t seed,
                           MixselTrace **out);

/**
 * # Safety
 * `trace` must be null or a handle from [`mixsel_select`].
 */
void mixsel_trace_free(MixselTrace *trace);

/**
 * Selected order; 0 for a null handle.
 *
 * # Safety
 * `trace` must be null or a live handle.
 */
size_t mixsel_trace_chosen_m(const MixselTrace *trace);

/**
 * Number of fitted orders; 0 for a null handle.
 *
 * # Safety
 * `trace` must be null or a live handle.
 */
size_t mixsel_trace_len(const MixselTrace *trace);

/**
 * # Safety
 * `trace` must be a live handle and `out` valid.
 */
MixselStatus mixsel_trace_row(const MixselTrace *trace, size_t index, MixselRow *out);

/**
 * Copy of the selected mixture as a new handle.
 *
 * # Safety
 * `trace` must be a live handle and `out` valid.
 */
MixselStatus mixsel_trace_chosen_mixture(const MixselTrace *trace, MixselMixture **out);

/**
 * JSON envelope of the trace, as emitted by `mixsel select`. Free with [`mixsel_string_free`].
 *
 * # Safety
 * `trace` must be a live handle and `out` valid.
 */
MixselStatus mixsel_trace_to_json(const MixselTrace *trace, char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MIXSEL_H */
