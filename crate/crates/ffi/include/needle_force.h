#ifndef NEEDLE_FORCE_H
#define NEEDLE_FORCE_H

/* Generated by cbindgen from crates/ffi/src; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum NfStatus {
  NF_STATUS_OK = 0,
  NF_STATUS_NULL_POINTER = 1,
  NF_STATUS_INVALID_ARGUMENT = 2,
  NF_STATUS_PARSE_ERROR = 3,
  NF_STATUS_IO_ERROR = 4,
  // The internal force overflowed (exponent of the friction growth too large).
  NF_STATUS_SATURATED = 5,
  NF_STATUS_RANK_DEFICIENT = 6,
  // Planning budget expired without reaching the insertion region.
  NF_STATUS_NO_SOLUTION = 7,
  // A Rust panic was caught at the boundary; this is a bug.
  NF_STATUS_INTERNAL = 8,
} NfStatus;

typedef enum NfCostMode {
  NF_COST_MODE_FORCE = 0,
  NF_COST_MODE_LENGTH = 1,
} NfCostMode;

typedef struct NfForceProfile NfForceProfile;

typedef struct NfPath NfPath;

typedef struct NfPlan NfPlan;

typedef struct NfScenario NfScenario;

// Tissue friction per unit length `c_friction` (N/m), capstan coefficient
// `mu`, and tip piercing force (N).
typedef struct NfTissue {
  double c_friction;
  double mu;
  double piercing_force;
} NfTissue;

// Constant-curvature arc: roll about the tangent (rad), curvature (1/m),
// length (m).
typedef struct NfSegment {
  double roll;
  double curvature;
  double length;
} NfSegment;

typedef struct NfSegmentForce {
  double n_distal;
  double n_proximal;
  double f_t_max;
} NfSegmentForce;

typedef struct NfForceSample {
  double s;
  double n;
  double f_t;
} NfForceSample;

typedef struct NfFit {
  double piercing_force;
  double c_friction;
  double r_squared;
  // NaN with fewer than three points.
  double adjusted_r_squared;
  bool negative_piercing_force;
} NfFit;

// Planner options. `iterations > 0` selects a reproducible iteration
// budget; otherwise `time_s` seconds are used. A negative `epsilon` keeps
// the default.
typedef struct NfPlannerOptions {
  uint64_t iterations;
  double time_s;
  uint64_t seed;
  enum NfCostMode cost_mode;
  double epsilon;
} NfPlannerOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread; empty if none. The
// pointer stays valid until the next failing call on this thread.
const char *nf_last_error_message(void);

// Tissue values measured for a phantom (C = 83.75 N/m, mu = 0.32, F_p = 0.4 N).
//
// # Safety
// `out` must be valid for writes.
enum NfStatus nf_tissue_default(struct NfTissue *out);

// Force state across one segment given the internal force at its distal end.
//
// # Safety
// Pointers must be valid.
enum NfStatus nf_segment_backstep(double n_distal,
                                  const struct NfSegment *seg,
                                  const struct NfTissue *tissue_params,
                                  struct NfSegmentForce *out);

// Path from a base position, base orientation quaternion `(w, x, y, z)` and
// `count` segments ordered base to tip.
//
// # Safety
// `position` must hold 3 doubles, `orientation` 4, `segments` `count`
// entries (may be null when `count == 0`), and `out` must be writable.
enum NfStatus nf_path_new(const double *position,
                          const double *orientation,
                          const struct NfSegment *segments,
                          uintptr_t count,
                          struct NfPath **out);

// Parses the JSON path format (also accepts planner solution files).
//
// # Safety
// `json` must be a NUL-terminated string; `out` writable.
enum NfStatus nf_path_from_json(const char *json, struct NfPath **out);

// # Safety
// `path` must be null or a handle from this library, not yet freed.
void nf_path_free(struct NfPath *path);

// # Safety
// Pointers must be valid.
enum NfStatus nf_path_total_length(const struct NfPath *path, double *out);

// # Safety
// Pointers must be valid.
enum NfStatus nf_path_segment_count(const struct NfPath *path, uintptr_t *out);

// Largest tissue normal force along the path (N/m); `+inf` if the force
// saturates.
//
// # Safety
// Pointers must be valid.
enum NfStatus nf_max_tissue_force(const struct NfPath *path,
                                  const struct NfTissue *tissue_params,
                                  double *out);

// Sampled force profile, base to tip, at spacing `resolution` (m).
//
// # Safety
// Pointers must be valid.
enum NfStatus nf_force_profile(const struct NfPath *path,
                               const struct NfTissue *tissue_params,
                               double resolution,
                               struct NfForceProfile **out);

// # Safety
// Pointers must be valid.
enum NfStatus nf_profile_len(const struct NfForceProfile *profile, uintptr_t *out);

// # Safety
// Pointers must be valid.
enum NfStatus nf_profile_sample(const struct NfForceProfile *profile,
                                uintptr_t index,
                                struct NfForceSample *out);

// Insertion force n(0) (N), maximum tissue force (N/m) and where it occurs (m).
//
// # Safety
// Pointers must be valid.
enum NfStatus nf_profile_summary(const struct NfForceProfile *profile,
                                 double *insertion_force,
                                 double *max_tissue_force,
                                 double *argmax_s);

// # Safety
// `profile` must be null or a live handle from this library.
void nf_profile_free(struct NfForceProfile *profile);

// Least-squares fit of `force = F_p + C * depth`.
//
// # Safety
// `depth` and `force` must hold `count` doubles; `out` writable.
enum NfStatus nf_fit_straight_insertion(const double *depth,
                                        const double *force,
                                        uintptr_t count,
                                        struct NfFit *out);

// Loads a scenario file; a referenced voxel grid resolves relative to it.
//
// # Safety
// `path` must be a NUL-terminated string; `out` writable.
enum NfStatus nf_scenario_load(const char *path, struct NfScenario **out);

// Parses a scenario document. `base_dir` (nullable) resolves a relative
// voxel grid path.
//
// # Safety
// `json` must be a NUL-terminated string, `base_dir` null or one; `out`
// writable.
enum NfStatus nf_scenario_from_json(const char *json,
                                    const char *base_dir,
                                    struct NfScenario **out);

// # Safety
// `scenario` must be null or a live handle from this library.
void nf_scenario_free(struct NfScenario *scenario);

// Runs the anytime planner and returns its best plan. Returns
// `NoSolution` (and leaves `*out` null) when the budget expires first.
//
// # Safety
// Pointers must be valid.
enum NfStatus nf_plan(const struct NfScenario *scenario,
                      const struct NfPlannerOptions *options,
                      struct NfPlan **out);

// Bottleneck (maximum tissue) force of the plan (N/m).
//
// # Safety
// Pointers must be valid.
enum NfStatus nf_plan_bottleneck_cost(const struct NfPlan *plan, double *out);

// # Safety
// Pointers must be valid.
enum NfStatus nf_plan_length(const struct NfPlan *plan, double *out);

// Number of improved solutions the anytime loop reported.
//
// # Safety
// Pointers must be valid.
enum NfStatus nf_plan_improvements(const struct NfPlan *plan, uintptr_t *out);

// Copy of the plan's forward path (insertion site to target).
//
// # Safety
// Pointers must be valid.
enum NfStatus nf_plan_path(const struct NfPlan *plan, struct NfPath **out);

// Solution document (path plus costs) as JSON; free with [`nf_string_free`].
//
// # Safety
// Pointers must be valid.
enum NfStatus nf_plan_to_json(const struct NfPlan *plan, char **out);

// # Safety
// `plan` must be null or a live handle from this library.
void nf_plan_free(struct NfPlan *plan);

// # Safety
// `s` must be null or a string returned by this library, not yet freed.
void nf_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NEEDLE_FORCE_H */
