#ifndef SPFLOW_H
#define SPFLOW_H

#pragma once

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SpflowStatus {
  SPFLOW_STATUS_OK = 0,
  /**
   * The input was well formed but the computation was refused (e.g. a path
   * whose verdict is not valid).
   */
  SPFLOW_STATUS_REFUSED = 2,
  SPFLOW_STATUS_SCHEMA_ERROR = 3,
  /**
   * An internal cross-check failed; this indicates a bug.
   */
  SPFLOW_STATUS_INTERNAL_ERROR = 4,
  SPFLOW_STATUS_NULL_ARGUMENT = 5,
  SPFLOW_STATUS_PANIC = 6,
} SpflowStatus;

typedef enum SpflowVerdict {
  SPFLOW_VERDICT_VALID = 0,
  SPFLOW_VERDICT_REFINE = 1,
  SPFLOW_VERDICT_INVALID = 2,
} SpflowVerdict;

typedef enum SpflowRoute {
  SPFLOW_ROUTE_WINDING = 0,
  SPFLOW_ROUTE_SECTIONS = 1,
  SPFLOW_ROUTE_CROSSINGS = 2,
} SpflowRoute;

/**
 * Opaque sampled path of hermitian matrices over scalar blocks.
 */
typedef struct SpflowPath SpflowPath;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or NULL. The pointer stays
 * valid until the next spflow call on the same thread.
 */
const char *spflow_last_error_message(void);

/**
 * Runs a problem file given as JSON and writes the result file JSON to
 * `*output` (also on refusals and errors, when the result could be built).
 *
 * # Safety
 * `input` must be a valid NUL-terminated string and `output` a valid pointer.
 */
enum SpflowStatus spflow_run_json(const char *input, char **output);

/**
 * Releases a string returned by this library. NULL is ignored.
 *
 * # Safety
 * `s` must come from this library and not be freed twice.
 */
void spflow_string_free(char *s);

/**
 * Builds a path over scalar blocks of sizes `dims[0..n_blocks]`.
 *
 * `t` holds `n_samples` grid points from 0 to 1. `data` holds, for each sample
 * and then each block, the `d x d` matrix in row-major order as interleaved
 * `(re, im)` doubles.
 *
 * # Safety
 * All pointers must be valid for the lengths implied above; `out` must be valid.
 */
enum SpflowStatus spflow_path_new(const size_t *dims,
                                  size_t n_blocks,
                                  const double *t,
                                  size_t n_samples,
                                  const double *data,
                                  struct SpflowPath **out);

/**
 * Validity verdict of a path for gap threshold `gap_min` (default motion cap).
 *
 * # Safety
 * `path` must come from [`spflow_path_new`]; `verdict` must be valid.
 */
enum SpflowStatus spflow_path_validate(const struct SpflowPath *path,
                                       double gap_min,
                                       enum SpflowVerdict *verdict);

/**
 * Spectral flow per block, written to `out[0..out_len]`; `out_len` must equal
 * the number of blocks.
 *
 * # Safety
 * `path` must come from [`spflow_path_new`]; `out` must hold `out_len` values.
 */
enum SpflowStatus spflow_path_spectral_flow(const struct SpflowPath *path,
                                            enum SpflowRoute route,
                                            int64_t *out,
                                            size_t out_len);

/**
 * Releases a path. NULL is ignored.
 *
 * # Safety
 * `path` must come from [`spflow_path_new`] and not be freed twice.
 */
void spflow_path_free(struct SpflowPath *path);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPFLOW_H */
