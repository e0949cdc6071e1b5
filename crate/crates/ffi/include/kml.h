/* Generated by cbindgen from kml-ffi. Do not edit. */

#ifndef KML_H
#define KML_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes. Values 1 and 2 match the CLI exit codes.
 */
typedef enum KmlStatus {
  KML_STATUS_OK = 0,
  KML_STATUS_SOLVER = 1,
  KML_STATUS_HYPOTHESIS = 2,
  KML_STATUS_INPUT = 3,
  KML_STATUS_IO = 4,
  KML_STATUS_NULL_POINTER = 5,
  KML_STATUS_PANIC = 6,
} KmlStatus;

typedef enum KmlWarpKind {
  KML_WARP_KIND_KOTTLER = 0,
  KML_WARP_KIND_LINEAR = 1,
  KML_WARP_KIND_PERTURBED = 2,
} KmlWarpKind;

/**
 * Opaque result of a pipeline run.
 */
typedef struct KmlPipeline KmlPipeline;

typedef struct KmlMass {
  double m_by_static;
  double m_total;
  double m_total_error_estimate;
  double final_series_value;
  double gap;
  double monotonicity_violation;
} KmlMass;

typedef struct KmlGeonReport {
  double h_outer;
  /**
   * NaN when the inner level degenerates (r_h = 1)
   */
  double h_inner_toward_outer;
  double area_outer;
  double m_exact;
  double m_leading;
  double remainder;
  bool mass_negative;
  bool trapping_violated;
  bool homotopy_case;
  bool smooth_closure;
} KmlGeonReport;

typedef struct KmlRadialSummary {
  double inner_slope;
  double penrose_constant;
  double integrand_max;
} KmlRadialSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Length in bytes of the last error message, excluding the terminating NUL;
 * 0 when the last call succeeded.
 */
size_t kml_last_error_length(void);

/**
 * Copy the last error message into `buf` (NUL-terminated, truncated to
 * `len − 1` bytes). Returns the number of bytes written excluding the NUL,
 * or −1 if `buf` is null or `len` is 0.
 *
 * # Safety
 * `buf` must point to at least `len` writable bytes.
 */
ptrdiff_t kml_last_error_message(char *buf, size_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *kml_version(void);

/**
 * Parse a JSON pipeline config and run it. Relative field files resolve
 * against `base_dir` (may be null for the working directory). On success
 * `*out` owns a new handle.
 *
 * # Safety
 * `config_json` and a non-null `base_dir` must be NUL-terminated strings;
 * `out` must be writable.
 */
enum KmlStatus kml_pipeline_run(const char *config_json,
                                const char *base_dir,
                                struct KmlPipeline **out);

/**
 * Release a handle from [`kml_pipeline_run`]. Null is ignored.
 *
 * # Safety
 * `p` must be null or a handle not yet freed.
 */
void kml_pipeline_free(struct KmlPipeline *p);

/**
 * # Safety
 * `p` must be a live handle and `out` writable.
 */
enum KmlStatus kml_pipeline_mass(const struct KmlPipeline *p, struct KmlMass *out);

/**
 * Number of (t, 𝔪(t)) samples; 0 for a null handle.
 *
 * # Safety
 * `p` must be null or a live handle.
 */
size_t kml_pipeline_series_len(const struct KmlPipeline *p);

/**
 * Copy up to `len` samples of the mass series into `t` and `m`.
 *
 * # Safety
 * `t` and `m` must each hold `len` writable doubles.
 */
enum KmlStatus kml_pipeline_series(const struct KmlPipeline *p, double *t, double *m, size_t len);

/**
 * Number of violated run checks (monotonicity, boundary gap, height barriers).
 *
 * # Safety
 * `p` must be null or a live handle.
 */
size_t kml_pipeline_violation_count(const struct KmlPipeline *p);

/**
 * Write the run artifacts (without a manifest) into directory `dir`.
 *
 * # Safety
 * `p` must be a live handle and `dir` a NUL-terminated string.
 */
enum KmlStatus kml_pipeline_write_artifacts(const struct KmlPipeline *p, const char *dir);

/**
 * Closed-form geon shell report.
 *
 * # Safety
 * `out` must be writable.
 */
enum KmlStatus kml_geon_report(double r_h,
                               double r_0,
                               double p_xi,
                               double p_theta,
                               struct KmlGeonReport *out);

/**
 * Radial solution on [s0, s1]. `a` and `b` parametrize the warp: the slope
 * for `Linear`, amplitude and frequency for `Perturbed`; ignored for `Kottler`.
 *
 * # Safety
 * `out` must be writable.
 */
enum KmlStatus kml_radial_solve(enum KmlWarpKind kind,
                                double a,
                                double b,
                                double s0,
                                double s1,
                                double u_inner,
                                double slope_outer,
                                size_t samples,
                                struct KmlRadialSummary *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* KML_H */
