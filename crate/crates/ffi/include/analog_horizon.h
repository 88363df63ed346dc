#ifndef ANALOG_HORIZON_H
#define ANALOG_HORIZON_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum AhBranch {
  AH_BRANCH_ROOT1 = 0,
  AH_BRANCH_ROOT2 = 1,
  AH_BRANCH_ZERO_XI0 = 2,
} AhBranch;

typedef enum AhClassification {
  AH_CLASSIFICATION_BLACK = 0,
  AH_CLASSIFICATION_WHITE = 1,
  AH_CLASSIFICATION_UNDETERMINED = 2,
} AhClassification;

typedef enum AhMethod {
  AH_METHOD_ERGOSPHERE_CHARACTERISTIC = 0,
  AH_METHOD_LIMIT_CYCLE = 1,
} AhMethod;

typedef enum AhStatus {
  AH_STATUS_OK = 0,
  AH_STATUS_NULL_POINTER = 1,
  AH_STATUS_INVALID_UTF8 = 2,
  AH_STATUS_PARSE = 3,
  AH_STATUS_VALIDATION = 4,
  AH_STATUS_IO = 5,
  AH_STATUS_INVALID_ARGUMENT = 6,
  AH_STATUS_OUTSIDE_DOMAIN = 7,
  /*
   A hypothesis of the analysis failed or a search did not converge.
   */
  AH_STATUS_HYPOTHESIS = 8,
  AH_STATUS_INDEX_OUT_OF_RANGE = 9,
  AH_STATUS_BUFFER_TOO_SMALL = 10,
  AH_STATUS_PANIC = 11,
  AH_STATUS_OTHER = 12,
} AhStatus;

typedef struct AhReport AhReport;

/*
 A validated scenario with its built model.
 */
typedef struct AhScenario AhScenario;

/*
 Summary of one detected horizon.
 */
typedef struct AhHole {
  enum AhMethod method;
  enum AhClassification classification;
  double mean_radius;
  double beta_min;
  double beta_max;
  double max_characteristic_residual;
  /*
   Number of (x1, x2) points in the horizon polyline.
   */
  uintptr_t point_count;
} AhHole;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Library version as a static NUL-terminated string.
 */
const char *ah_version(void);

/*
 Message for the last failed call on this thread, or "" after a success.
 Valid until the next library call on the same thread.
 */
const char *ah_last_error_message(void);

/*
 Parses and validates a scenario JSON document.

 # Safety
 `json` must be a NUL-terminated string; `out` must be writable.
 */
enum AhStatus ah_scenario_from_json(const char *json, struct AhScenario **out);

/*
 Loads a built-in scenario by name.

 # Safety
 `name` must be a NUL-terminated string; `out` must be writable.
 */
enum AhStatus ah_scenario_preset(const char *name, struct AhScenario **out);

/*
 # Safety
 `scenario` must come from this library and not be freed twice. Null is ignored.
 */
void ah_scenario_free(struct AhScenario *scenario);

/*
 Spatial dimension of the scenario (2 or 3), or 0 for a null handle.

 # Safety
 `scenario` must be null or a live handle.
 */
uintptr_t ah_scenario_dim(const struct AhScenario *scenario);

/*
 Determinant of the spatial block of the contravariant metric at `x`.

 # Safety
 `x` must point to `n` doubles; `out` must be writable.
 */
enum AhStatus ah_scenario_spatial_delta(const struct AhScenario *scenario,
                                        const double *x,
                                        uintptr_t n,
                                        double *out);

/*
 Runs the full horizon search and classification.

 # Safety
 `scenario` must be a live handle; `out` must be writable.
 */
enum AhStatus ah_run_horizon(const struct AhScenario *scenario, struct AhReport **out);

/*
 Number of horizons in the report, or 0 for a null handle.

 # Safety
 `report` must be null or a live handle.
 */
uintptr_t ah_report_hole_count(const struct AhReport *report);

/*
 Nonzero when the scenario guarantees a horizon and none was found.

 # Safety
 `report` must be null or a live handle.
 */
bool ah_report_missing_expected_horizon(const struct AhReport *report);

/*
 # Safety
 `report` must be a live handle; `out` must be writable.
 */
enum AhStatus ah_report_hole(const struct AhReport *report, uintptr_t index, struct AhHole *out);

/*
 Copies the horizon polyline as interleaved x1, x2 pairs into `buf`,
 which holds `capacity` doubles. `written` receives the number of doubles
 needed; BufferTooSmall is returned (and nothing copied) when it exceeds
 `capacity`.

 # Safety
 `buf` must point to `capacity` writable doubles; `written` must be writable.
 */
enum AhStatus ah_report_hole_points(const struct AhReport *report,
                                    uintptr_t index,
                                    double *buf,
                                    uintptr_t capacity,
                                    uintptr_t *written);

/*
 Serializes the report to JSON. Free the string with [`ah_string_free`].

 # Safety
 `report` must be a live handle; `out` must be writable.
 */
enum AhStatus ah_report_to_json(const struct AhReport *report, char **out);

/*
 # Safety
 `report` must come from this library and not be freed twice. Null is ignored.
 */
void ah_report_free(struct AhReport *report);

/*
 Traces one null ray from `x` with spatial covector `xi` (both of length
 `n`) and returns the samples as CSV.

 # Safety
 `x` and `xi` must point to `n` doubles; `out` must be writable.
 */
enum AhStatus ah_trace_ray_csv(const struct AhScenario *scenario,
                               const double *x,
                               const double *xi,
                               uintptr_t n,
                               enum AhBranch branch,
                               char **out);

/*
 # Safety
 `s` must come from this library and not be freed twice. Null is ignored.
 */
void ah_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ANALOG_HORIZON_H */
