#ifndef NIQS_H
#define NIQS_H

/* Generated by cbindgen from niqs-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes returned by every fallible entry point.
typedef enum NiqsStatus {
  // Success.
  NIQS_STATUS_OK = 0,
  // A required pointer argument was null.
  NIQS_STATUS_NULL_POINTER = 1,
  // A string argument was not valid UTF-8.
  NIQS_STATUS_INVALID_UTF8 = 2,
  // The model document failed to parse or validate.
  NIQS_STATUS_INVALID_MODEL = 3,
  // The analysis ran but found no feasible interrogation; the report
  // explains why.
  NIQS_STATUS_INFEASIBLE = 4,
  // Configuration or runtime failure; see `niqs_last_error`.
  NIQS_STATUS_RUNTIME_ERROR = 5,
} NiqsStatus;

// Opaque parsed model handle.
typedef struct NiqsModel NiqsModel;

// Witness-search and simulation settings. Zeroed fields select defaults.
typedef struct NiqsOptions {
  // RNG seed (default 42; pass `has_seed = false` for the default).
  uint64_t seed;
  bool has_seed;
  // Random starts in the witness search (0 = default 48).
  uint32_t starts;
  // Witness acceptance residual (0 = default 1e-8).
  double tol_witness;
  // Monte Carlo trials (0 = default 100000).
  uint64_t trials;
  // |alpha| grid points for optimization (0 = default 201).
  uint32_t alpha_grid;
} NiqsOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the most recent failure on this thread, or null. The pointer
// stays valid until the next failing call on the same thread.
const char *niqs_last_error(void);

// # Safety
// `s` must be null or a pointer previously returned by one of the
// string-producing functions in this library, not yet freed.
void niqs_string_free(char *s);

// Parse a JSON model document into an opaque handle.
//
// # Safety
// `json` must point to a NUL-terminated string and `out` to writable
// storage for one pointer.
enum NiqsStatus niqs_model_parse(const char *json, struct NiqsModel **out);

// Load a JSON model document from a file path.
//
// # Safety
// As `niqs_model_parse`, with `path` NUL-terminated.
enum NiqsStatus niqs_model_load(const char *path, struct NiqsModel **out);

// Build one of the shipped example models
// (`mach-zehnder-atom`, `absorber`, `identity`).
//
// # Safety
// As `niqs_model_parse`.
enum NiqsStatus niqs_model_example(const char *name, struct NiqsModel **out);

// Serialize a shipped example model to JSON.
//
// # Safety
// `name` NUL-terminated, `out` writable; free the result with
// `niqs_string_free`.
enum NiqsStatus niqs_example_json(const char *name, char **out);

// # Safety
// `model` must be null or a pointer from `niqs_model_parse`,
// `niqs_model_load`, or `niqs_model_example`, not yet freed.
void niqs_model_free(struct NiqsModel *model);

// Decide feasibility. Writes the analyze report as JSON.
//
// # Safety
// `model` from a constructor, `out_json` writable, `options` null or valid.
enum NiqsStatus niqs_analyze(const struct NiqsModel *model,
                             const struct NiqsOptions *options,
                             char **out_json);

// Build the success projector. Writes the construct report as JSON.
//
// # Safety
// As `niqs_analyze`.
enum NiqsStatus niqs_construct(const struct NiqsModel *model,
                               const struct NiqsOptions *options,
                               char **out_json);

// Optimize the success probability over the probe split.
//
// # Safety
// As `niqs_analyze`.
enum NiqsStatus niqs_optimize(const struct NiqsModel *model,
                              const struct NiqsOptions *options,
                              char **out_json);

// Monte Carlo interrogation runs with the analytic distribution attached.
//
// # Safety
// As `niqs_analyze`.
enum NiqsStatus niqs_simulate(const struct NiqsModel *model,
                              const struct NiqsOptions *options,
                              char **out_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NIQS_H */
