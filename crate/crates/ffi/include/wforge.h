#ifndef WFORGE_H
#define WFORGE_H

/* Generated with cbindgen:0.29.4 */

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * `Ŝ = T⁻¹ S T` (`WFORGE_CONJUGATION_T_INV_S_T`) or `Ŝ = T S T⁻¹`.
 */
#define WFORGE_CONJUGATION_T_INV_S_T 0

#define WFORGE_CONJUGATION_T_S_T_INV 1

/**
 * Result codes of every fallible call.
 */
typedef enum WforgeStatus {
  WFORGE_STATUS_OK = 0,
  /**
   * A required pointer argument was NULL.
   */
  WFORGE_STATUS_NULL_POINTER = 1,
  /**
   * An argument is out of range or a string is not valid UTF-8.
   */
  WFORGE_STATUS_INVALID_ARGUMENT = 2,
  /**
   * Unknown surface name or invalid surface parameters.
   */
  WFORGE_STATUS_BAD_SPEC = 3,
  /**
   * The input fails a numerical precondition (conformality, Willmore,
   * complex structure).
   */
  WFORGE_STATUS_VALIDATION = 4,
  /**
   * A pointwise solve failed: singular matrix, degenerate differential,
   * point at infinity.
   */
  WFORGE_STATUS_SINGULAR = 5,
  /**
   * Parallel transport failed: blow-up, spanning, domain topology.
   */
  WFORGE_STATUS_TRANSPORT = 6,
  /**
   * A Willmore sequence step could not be computed.
   */
  WFORGE_STATUS_SEQUENCE = 7,
  /**
   * Reading or writing files failed.
   */
  WFORGE_STATUS_IO = 8,
  /**
   * Configuration text rejected.
   */
  WFORGE_STATUS_CONFIG = 9,
  /**
   * Any other failure.
   */
  WFORGE_STATUS_OTHER = 10,
  /**
   * A panic was caught at the boundary.
   */
  WFORGE_STATUS_PANIC = 11,
} WforgeStatus;

/**
 * A sampled surface with its conformal Gauss map and Hopf fields.
 */
typedef struct WforgeSurface WforgeSurface;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version, a static NUL-terminated string.
 */
const char *wforge_version(void);

/**
 * Message of the last failed call on this thread, or NULL. The pointer stays
 * valid until the next call into the library on this thread.
 */
const char *wforge_last_error_message(void);

/**
 * Releases a string returned by this library. NULL is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void wforge_string_free(char *s);

/**
 * Samples surface `name` (`clifford`, `clifford_patch`, `mercator`,
 * `revolution`, `catenoid`, `enneper`, `twistor`, `twistor_torus`) on an
 * `nx × ny` grid with eighth-order stencils and analyzes it.
 *
 * # Safety
 * `name` must be a NUL-terminated string; `out` a valid pointer.
 */
enum WforgeStatus wforge_surface_new(const char *name,
                                     size_t nx,
                                     size_t ny,
                                     struct WforgeSurface **out);

/**
 * Releases a surface. NULL is ignored.
 *
 * # Safety
 * `s` must come from [`wforge_surface_new`] and not have been freed.
 */
void wforge_surface_free(struct WforgeSurface *s);

/**
 * Grid size of the surface.
 *
 * # Safety
 * Pointers must be valid.
 */
enum WforgeStatus wforge_surface_grid(const struct WforgeSurface *s, size_t *nx, size_t *ny);

/**
 * Copies the vertices `f = w + xi + yj + zk` as `(w, x, y, z)` quadruples
 * in row-major order (`x` index fastest). `len` is the capacity of `out` in
 * doubles and must be at least `4 nx ny`.
 *
 * # Safety
 * `out` must point to `len` writable doubles.
 */
enum WforgeStatus wforge_surface_vertices(const struct WforgeSurface *s, double *out, size_t len);

/**
 * Willmore energy `2∫⟨A ∧ *A⟩`.
 *
 * # Safety
 * Pointers must be valid.
 */
enum WforgeStatus wforge_willmore_energy(const struct WforgeSurface *s, double *out);

/**
 * Scale-free interior residual of `d*A = 0` (small iff Willmore).
 *
 * # Safety
 * Pointers must be valid.
 */
enum WforgeStatus wforge_harmonicity_residual(const struct WforgeSurface *s, double *out);

/**
 * Analysis report as JSON.
 *
 * # Safety
 * Pointers must be valid; free the result with [`wforge_string_free`].
 */
enum WforgeStatus wforge_analysis_report_json(const struct WforgeSurface *s, char **out);

/**
 * Curvature of `d^λ` for the `n_lambdas` parameters in `lambdas`
 * (interleaved `re, im`), plus the parallel frame (patches) or monodromy
 * (tori) of `d^μ`, as JSON.
 *
 * # Safety
 * `lambdas` must point to `2 n_lambdas` doubles; free the result with
 * [`wforge_string_free`].
 */
enum WforgeStatus wforge_flatness_report_json(const struct WforgeSurface *s,
                                              const double *lambdas,
                                              size_t n_lambdas,
                                              double mu_re,
                                              double mu_im,
                                              char **out);

/**
 * μ-Darboux transform of a patch surface; `conjugation` is
 * [`WFORGE_CONJUGATION_T_INV_S_T`] or [`WFORGE_CONJUGATION_T_S_T_INV`].
 *
 * # Safety
 * Pointers must be valid; free the result with [`wforge_string_free`].
 */
enum WforgeStatus wforge_darboux_report_json(const struct WforgeSurface *s,
                                             double mu_re,
                                             double mu_im,
                                             int conjugation,
                                             char **out);

/**
 * Willmore sequence with up to `n_max` steps each way, as JSON.
 *
 * # Safety
 * Pointers must be valid; free the result with [`wforge_string_free`].
 */
enum WforgeStatus wforge_sequence_report_json(const struct WforgeSurface *s,
                                              size_t n_max,
                                              char **out);

/**
 * Runs the `wforge` pipeline: `command` is `analyze`, `flatness`,
 * `darboux`, `sequence` or `export`; `config` is config-file text. Writes
 * the artifacts into `output.dir`, stores the CLI exit code (0 passed, 2
 * validation failure) in `exit_code` and, if `report_json` is not NULL,
 * the report.
 *
 * # Safety
 * Strings must be NUL-terminated; free the report with
 * [`wforge_string_free`].
 */
enum WforgeStatus wforge_run(const char *command,
                             const char *config,
                             int *exit_code,
                             char **report_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WFORGE_H */
