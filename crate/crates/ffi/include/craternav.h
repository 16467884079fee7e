/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef CRATERNAV_H
#define CRATERNAV_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every call.
typedef enum CnStatus {
  CN_STATUS_OK = 0,
  // A required pointer was null.
  CN_STATUS_NULL_POINTER = 1,
  // An argument was out of range or malformed.
  CN_STATUS_INVALID_ARGUMENT = 2,
  // A file, catalog or configuration could not be used.
  CN_STATUS_INPUT_DATA = 3,
  // The estimation problem has too little information.
  CN_STATUS_UNDERDETERMINED = 4,
  // The computation failed.
  CN_STATUS_RUNTIME = 5,
  // An internal panic was caught.
  CN_STATUS_PANIC = 6,
} CnStatus;

typedef enum CnPositionStatus {
  CN_POSITION_STATUS_CONVERGED = 0,
  CN_POSITION_STATUS_SKIPPED = 1,
  CN_POSITION_STATUS_DIVERGED = 2,
} CnPositionStatus;

// Opaque crater catalog.
typedef struct CnCatalog CnCatalog;

// Opaque scenario run.
typedef struct CnRun CnRun;

typedef struct CnSyntheticSpec {
  size_t count;
  double d_min_km;
  double d_max_km;
  double exponent;
  uint64_t seed;
} CnSyntheticSpec;

typedef struct CnVec3 {
  double x;
  double y;
  double z;
} CnVec3;

// Scalar-first, Hamilton convention; `q_ib` maps body to inertial.
typedef struct CnQuaternion {
  double w;
  double x;
  double y;
  double z;
} CnQuaternion;

// One epoch of a scenario run. Estimate fields are valid only when the
// matching `has_*` flag is nonzero.
typedef struct CnStep {
  double t;
  struct CnVec3 position;
  struct CnVec3 velocity;
  struct CnQuaternion attitude;
  double altitude_km;
  size_t visible;
  size_t identified;
  size_t used;
  enum CnPositionStatus status;
  uint8_t has_position;
  uint8_t has_attitude;
  struct CnVec3 est_position;
  struct CnQuaternion est_attitude;
  // Metres, MCI axes.
  struct CnVec3 position_error_m;
  // φ, θ, ψ in degrees.
  struct CnVec3 attitude_error_deg;
} CnStep;

typedef struct CnRmse {
  struct CnVec3 position_m;
  struct CnVec3 attitude_deg;
  size_t converged_steps;
  size_t skipped_steps;
} CnRmse;

typedef struct CnPositionFix {
  struct CnVec3 position;
  enum CnPositionStatus status;
  size_t iterations;
  double final_step_norm;
} CnPositionFix;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version, a static NUL-terminated string.
const char *cn_version(void);

// Message of the last failed call on this thread, empty after a success.
// Valid until the next call on the same thread.
const char *cn_last_error(void);

// Loads a canonical catalog CSV (`lat,lon,diameter_km` in degrees and km).
//
// # Safety
// `path` must be a NUL-terminated string and `out` a writable pointer.
enum CnStatus cn_catalog_load_csv(const char *path, struct CnCatalog **out);

// Defaults calibrated to the lunar size distribution.
struct CnSyntheticSpec cn_synthetic_spec_lunar(uint64_t seed);

// Generates a synthetic catalog.
//
// # Safety
// `spec` must point to a valid spec and `out` be writable.
enum CnStatus cn_catalog_generate(const struct CnSyntheticSpec *spec, struct CnCatalog **out);

// Number of craters, 0 for a null handle.
//
// # Safety
// `catalog` must be null or a live handle.
size_t cn_catalog_len(const struct CnCatalog *catalog);

// Releases a catalog. Null is ignored.
//
// # Safety
// `catalog` must be null or a handle not yet freed.
void cn_catalog_free(struct CnCatalog *catalog);

// Runs one descent. `config_toml` uses the same keys as the command-line
// config file; null means all defaults.
//
// # Safety
// `catalog` must be a live handle, `config_toml` null or NUL-terminated, `out` writable.
enum CnStatus cn_run_scenario(const struct CnCatalog *catalog,
                              const char *config_toml,
                              struct CnRun **out);

// Number of recorded steps, 0 for a null handle.
//
// # Safety
// `run` must be null or a live handle.
size_t cn_run_len(const struct CnRun *run);

// Copies step `index` into `out`.
//
// # Safety
// `run` must be a live handle and `out` writable.
enum CnStatus cn_run_step(const struct CnRun *run, size_t index, struct CnStep *out);

// Per-axis RMSE over converged steps with `t_start ≤ t ≤ t_end`.
//
// # Safety
// `run` must be a live handle and `out` writable.
enum CnStatus cn_run_rmse(const struct CnRun *run,
                          double t_start,
                          double t_end,
                          struct CnRmse *out);

// Releases a run. Null is ignored.
//
// # Safety
// `run` must be null or a handle not yet freed.
void cn_run_free(struct CnRun *run);

// Position from crater positions and ranges (km). `initial_guess` may be null
// for the crater-centroid cold start. Fewer than three craters gives status
// `Skipped` with `CN_STATUS_OK`.
//
// # Safety
// `craters` and `ranges` must hold `n` elements; `out` must be writable.
enum CnStatus cn_estimate_position(const struct CnVec3 *craters,
                                   const double *ranges,
                                   size_t n,
                                   double tolerance_km,
                                   size_t max_iterations,
                                   const struct CnVec3 *initial_guess,
                                   struct CnPositionFix *out);

// QUEST solution `q_ib` of Wahba's problem for `n` body/reference unit-vector
// pairs and nonnegative weights. The scalar part of the result is nonnegative.
//
// # Safety
// `body`, `reference` and `weights` must hold `n` elements; `out` must be writable.
enum CnStatus cn_quest(const struct CnVec3 *body,
                       const struct CnVec3 *reference,
                       const double *weights,
                       size_t n,
                       struct CnQuaternion *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CRATERNAV_H */
