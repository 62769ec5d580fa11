/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef SLITWAVE_H
#define SLITWAVE_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum SlitwaveStatus {
  SLITWAVE_STATUS_OK = 0,
  // Bad configuration text, key or value.
  SLITWAVE_STATUS_CONFIG = 2,
  // A numerical tolerance or budget could not be met.
  SLITWAVE_STATUS_NUMERICAL = 3,
  SLITWAVE_STATUS_IO = 4,
  SLITWAVE_STATUS_NULL_POINTER = 5,
  // Buffer length mismatch, non-UTF-8 string and similar.
  SLITWAVE_STATUS_INVALID_ARGUMENT = 6,
  // A Rust panic was caught at the boundary.
  SLITWAVE_STATUS_PANIC = 7,
} SlitwaveStatus;

// Parsed experiment configuration.
typedef struct SlitwaveConfig SlitwaveConfig;

// Detector profiles of one scenario.
typedef struct SlitwaveResult SlitwaveResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or NULL. The pointer stays
// valid until the next `slitwave_*` call on the same thread.
const char *slitwave_last_error_message(void);

// Configuration with every key at its default.
//
// # Safety
// `out` must be valid for a pointer write.
enum SlitwaveStatus slitwave_config_new_default(struct SlitwaveConfig **out);

// Parse a TOML document. Missing keys take their defaults.
//
// # Safety
// `toml` must be a NUL-terminated string; `out` must be valid for a pointer write.
enum SlitwaveStatus slitwave_config_parse(const char *toml, struct SlitwaveConfig **out);

// `"usual"`, `"classical"` or `"alternative"`.
//
// # Safety
// `config` must come from this library; `name` must be NUL-terminated.
enum SlitwaveStatus slitwave_config_set_assumption(struct SlitwaveConfig *config, const char *name);

// Worker threads for propagation; 0 uses every core. Results do not depend on it.
//
// # Safety
// `config` must come from this library.
enum SlitwaveStatus slitwave_config_set_workers(struct SlitwaveConfig *config, size_t workers);

// # Safety
// `config` must come from this library and not be used afterwards. NULL is ignored.
void slitwave_config_free(struct SlitwaveConfig *config);

// de Broglie wavelength in metres for the configured particle.
//
// # Safety
// `config` must come from this library; `out` must be valid for a write.
enum SlitwaveStatus slitwave_de_broglie_wavelength(const struct SlitwaveConfig *config,
                                                   double *out);

// Propagate to the detector and evaluate the configured assumption.
//
// # Safety
// `config` must come from this library; `out` must be valid for a pointer write.
enum SlitwaveStatus slitwave_run_scenario(const struct SlitwaveConfig *config,
                                          struct SlitwaveResult **out);

// Number of detector grid points.
//
// # Safety
// `result` must come from this library; `out` must be valid for a write.
enum SlitwaveStatus slitwave_result_len(const struct SlitwaveResult *result, size_t *out);

// Detector positions in metres. `len` must equal `slitwave_result_len`.
//
// # Safety
// `out` must be valid for `len` writes.
enum SlitwaveStatus slitwave_result_copy_grid(const struct SlitwaveResult *result,
                                              double *out,
                                              size_t len);

// `|psi|^2` on the grid.
//
// # Safety
// `out` must be valid for `len` writes.
enum SlitwaveStatus slitwave_result_copy_born(const struct SlitwaveResult *result,
                                              double *out,
                                              size_t len);

// Density reported under the configured assumption.
//
// # Safety
// `out` must be valid for `len` writes.
enum SlitwaveStatus slitwave_result_copy_reported(const struct SlitwaveResult *result,
                                                  double *out,
                                                  size_t len);

// Field as interleaved `re, im` pairs; `len` is twice the grid length.
//
// # Safety
// `out` must be valid for `len` writes.
enum SlitwaveStatus slitwave_result_copy_field(const struct SlitwaveResult *result,
                                               double *out,
                                               size_t len);

// Median of the born profile in metres. `has_median` is false, and `out`
// untouched, unless the assumption is alternative.
//
// # Safety
// `out` and `has_median` must be valid for writes.
enum SlitwaveStatus slitwave_result_median(const struct SlitwaveResult *result,
                                           double *out,
                                           bool *has_median);

// Peaks of the reported profile whose prominence exceeds
// `prominence_fraction` of its maximum.
//
// # Safety
// `out` must be valid for a write.
enum SlitwaveStatus slitwave_result_peak_count(const struct SlitwaveResult *result,
                                               double prominence_fraction,
                                               size_t *out);

// Write the profile CSV with its provenance header.
//
// # Safety
// `path` must be a NUL-terminated UTF-8 string.
enum SlitwaveStatus slitwave_result_write_csv(const struct SlitwaveResult *result,
                                              const char *path);

// # Safety
// `result` must come from this library and not be used afterwards. NULL is ignored.
void slitwave_result_free(struct SlitwaveResult *result);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SLITWAVE_H */
