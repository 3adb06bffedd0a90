#ifndef NSSFR_H
#define NSSFR_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum NssfrOrientation {
  NSSFR_ORIENTATION_HORIZONTAL = 0,
  NSSFR_ORIENTATION_VERTICAL = 1,
} NssfrOrientation;

typedef enum NssfrReason {
  NSSFR_REASON_NONE = 0,
  NSSFR_REASON_OVERSHOOT = 1,
  NSSFR_REASON_NOISE_FLOOR = 2,
  NSSFR_REASON_EDGE_INCOHERENT = 3,
  NSSFR_REASON_PHASE_COVERAGE = 4,
} NssfrReason;

typedef enum NssfrStatus {
  NSSFR_STATUS_OK = 0,
  NSSFR_STATUS_NULL_POINTER = 1,
  NSSFR_STATUS_INVALID_ARGUMENT = 2,
  NSSFR_STATUS_INVALID_MASK = 3,
  NSSFR_STATUS_DIMENSIONS = 4,
  NSSFR_STATUS_MEASUREMENT_FAILED = 5,
  NSSFR_STATUS_OUT_OF_RANGE = 6,
  NSSFR_STATUS_BUFFER_TOO_SMALL = 7,
  NSSFR_STATUS_INTERNAL = 99,
} NssfrStatus;

typedef struct NssfrAnalyzer NssfrAnalyzer;

typedef struct NssfrResult NssfrResult;

// Detection, triage and segmentation settings.
typedef struct NssfrParams {
  double contrast_min;
  double contrast_max;
  double st;
  uint32_t esfw;
  double angle_exclusion_deg;
  uint32_t edge_fit_order;
  double overshoot_limit;
  double noise_min_limit;
  uint32_t segments;
  // Exclusion margin in pixels; negative selects `2 * esfw`.
  int32_t margin;
} NssfrParams;

// One measured candidate. Coordinates are in frame pixels.
typedef struct NssfrMeasurement {
  uint32_t roi_index;
  uint32_t x;
  uint32_t y;
  uint32_t w;
  uint32_t h;
  double centroid_x;
  double centroid_y;
  double edge_angle_deg;
  double contrast;
  enum NssfrOrientation orientation;
  // Radial segment, or -1 when the centroid lies beyond the outer radius.
  int32_t segment;
  bool valid;
  enum NssfrReason reason;
  // NaN when no curve could be computed.
  double peak_value;
  // NaN when absent.
  double mtf50;
} NssfrMeasurement;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *nssfr_version(void);

// Message for the most recent failure on this thread, or null. The pointer
// stays valid until the next failing call on the same thread.
const char *nssfr_last_error(void);

struct NssfrParams nssfr_params_default(void);

// Prepares an analyzer for frames of `width` x `height`. `mask_json` may be
// null for a full-frame analysis.
//
// # Safety
// `params` must point to a valid `NssfrParams`, `mask_json` must be null or
// a NUL-terminated string, and `out` must be writable.
enum NssfrStatus nssfr_analyzer_new(const struct NssfrParams *params,
                                    const char *mask_json,
                                    uint32_t width,
                                    uint32_t height,
                                    struct NssfrAnalyzer **out);

// # Safety
// `analyzer` must be null or come from [`nssfr_analyzer_new`], and must not
// be used afterwards.
void nssfr_analyzer_free(struct NssfrAnalyzer *analyzer);

// Outer radius of each radial segment, in pixels.
//
// # Safety
// `analyzer` must be valid; `out` must be null or hold `capacity` doubles;
// `len` must be null or writable.
enum NssfrStatus nssfr_analyzer_boundaries(const struct NssfrAnalyzer *analyzer,
                                           double *out,
                                           size_t capacity,
                                           size_t *len);

// Finds and measures every slanted edge in one frame. `luminance` holds
// `width * height` row-major samples normalized to [0, 1].
//
// # Safety
// `analyzer` must be valid, `luminance` must hold `len` doubles, `frame_id`
// must be null or NUL-terminated, and `out` must be writable.
enum NssfrStatus nssfr_analyzer_measure(const struct NssfrAnalyzer *analyzer,
                                        const double *luminance,
                                        size_t len,
                                        const char *frame_id,
                                        struct NssfrResult **out);

// # Safety
// `result` must be null or come from [`nssfr_analyzer_measure`], and must not
// be used afterwards.
void nssfr_result_free(struct NssfrResult *result);

// Number of candidates in a result; 0 for a null result.
//
// # Safety
// `result` must be null or valid.
size_t nssfr_result_count(const struct NssfrResult *result);

// # Safety
// `result` must be valid and `out` writable.
enum NssfrStatus nssfr_result_get(const struct NssfrResult *result,
                                  size_t index,
                                  struct NssfrMeasurement *out);

// SFR values of one candidate on the uniform grid from 0 to 1 cy/px in
// steps of [`nssfr_grid_step`]. Candidates without a curve give 0 values.
//
// # Safety
// `result` must be valid; `out` must be null or hold `capacity` doubles;
// `len` must be null or writable.
enum NssfrStatus nssfr_result_curve(const struct NssfrResult *result,
                                    size_t index,
                                    double *out,
                                    size_t capacity,
                                    size_t *len);

double nssfr_grid_step(void);

double nssfr_max_frequency(void);

// Per-segment statistics of a result as a JSON array. The string is owned by
// the caller and released with [`nssfr_string_free`].
//
// # Safety
// `result` must be valid and `out` writable.
enum NssfrStatus nssfr_result_summary_json(const struct NssfrResult *result, char **out);

// # Safety
// `s` must be null or a string returned by this library.
void nssfr_string_free(char *s);

// Measures a single pre-cut edge patch. `mtf50` receives NaN when the curve
// never drops to 0.5; `valid` and `reason` receive the triage verdict; the
// curve is copied like [`nssfr_result_curve`]. Any output pointer may be null.
//
// # Safety
// `data` must hold `width * height` doubles, `params` must be valid, and
// every non-null output pointer must be writable (`curve` for `capacity`
// doubles).
enum NssfrStatus nssfr_measure_patch(const double *data,
                                     uint32_t width,
                                     uint32_t height,
                                     enum NssfrOrientation orientation,
                                     const struct NssfrParams *params,
                                     double *mtf50,
                                     bool *valid,
                                     enum NssfrReason *reason_out,
                                     double *curve,
                                     size_t capacity,
                                     size_t *len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NSSFR_H */
