/* C interface to the mavplan replanning library. Generated by cbindgen; do not edit. */

#ifndef MAVPLAN_H
#define MAVPLAN_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum MpStatus {
  MP_STATUS_OK = 0,
  /**
   * A required pointer argument was NULL.
   */
  MP_STATUS_NULL_POINTER = 1,
  /**
   * An argument violates its documented precondition.
   */
  MP_STATUS_INVALID_PARAMETER = 2,
  /**
   * A query falls outside the region where the object is defined.
   */
  MP_STATUS_OUT_OF_DOMAIN = 3,
  MP_STATUS_MALFORMED_INPUT = 4,
  MP_STATUS_IO = 5,
  /**
   * The replanner has committed its whole reference.
   */
  MP_STATUS_FINISHED = 6,
  /**
   * An internal error was caught at the boundary.
   */
  MP_STATUS_INTERNAL = 7,
} MpStatus;

/**
 * A Euclidean distance field computed from an occupancy map.
 */
typedef struct MpDistanceField MpDistanceField;

/**
 * A robocentric occupancy buffer.
 */
typedef struct MpOccupancyMap MpOccupancyMap;

/**
 * A receding-horizon replanner following a straight reference.
 */
typedef struct MpReplanner MpReplanner;

/**
 * A uniform quintic B-spline.
 */
typedef struct MpSpline MpSpline;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or NULL. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *mp_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *mp_version(void);

/**
 * Creates a spline from `count` control points stored as `3 * count`
 * doubles. Segment `i` covers `[t0 + i dt, t0 + (i + 1) dt]`.
 *
 * # Safety
 * `points` must hold `3 * count` doubles and `out` must be writable.
 */
enum MpStatus mp_spline_new(const double *points_xyz,
                            size_t count,
                            double dt,
                            double t0,
                            struct MpSpline **out);

/**
 * # Safety
 * `spline` must be NULL or a handle from this library not yet freed.
 */
void mp_spline_free(struct MpSpline *spline);

/**
 * # Safety
 * Pointers must be valid; `out_t0` and `out_t_end` must be writable.
 */
enum MpStatus mp_spline_time_range(const struct MpSpline *spline,
                                   double *out_t0,
                                   double *out_t_end);

/**
 * Writes the `deriv_order`-th time derivative at `t` to `out[0..3]`.
 *
 * # Safety
 * `spline` must be a valid handle and `out` must hold three doubles.
 */
enum MpStatus mp_spline_evaluate(const struct MpSpline *spline,
                                 double t,
                                 uint32_t deriv_order,
                                 double *out);

/**
 * Copies up to `capacity` control points to `out` and stores the total
 * number in `out_count`. Pass `capacity = 0` to query the count.
 *
 * # Safety
 * `out` must hold `3 * capacity` doubles; `out_count` must be writable.
 */
enum MpStatus mp_spline_control_points(const struct MpSpline *spline,
                                       double *out,
                                       size_t capacity,
                                       size_t *out_count);

/**
 * Creates a `2^power`-voxel cube with the given voxel size and default
 * log-odds parameters, centred on the origin.
 *
 * # Safety
 * `out` must be writable.
 */
enum MpStatus mp_map_new(uint32_t power, double resolution, struct MpOccupancyMap **out);

/**
 * # Safety
 * `map` must be NULL or a handle from this library not yet freed.
 */
void mp_map_free(struct MpOccupancyMap *map);

/**
 * Re-centres the volume on `center[0..3]`.
 *
 * # Safety
 * `map` must be a valid handle and `center` must hold three doubles.
 */
enum MpStatus mp_map_move_volume(struct MpOccupancyMap *map, const double *center);

/**
 * Inserts `count` world-frame points observed from `origin`.
 *
 * # Safety
 * `points_xyz` must hold `3 * count` doubles and `origin` three.
 */
enum MpStatus mp_map_insert_point_cloud(struct MpOccupancyMap *map,
                                        const double *origin,
                                        const double *points_xyz,
                                        size_t count);

/**
 * Log-odds of the voxel with integer index `index[0..3]`; `OutOfDomain`
 * when it is outside the volume.
 *
 * # Safety
 * `index` must hold three `int64_t` and `out` must be writable.
 */
enum MpStatus mp_map_log_odds(const struct MpOccupancyMap *map, const int64_t *index, float *out);

/**
 * Distance transform of the map. Unknown voxels count as free unless
 * `unknown_is_occupied` is set.
 *
 * # Safety
 * `map` must be a valid handle and `out` writable.
 */
enum MpStatus mp_distance_field_compute(const struct MpOccupancyMap *map,
                                        bool unknown_is_occupied,
                                        struct MpDistanceField **out);

/**
 * # Safety
 * `field` must be NULL or a handle from this library not yet freed.
 */
void mp_distance_field_free(struct MpDistanceField *field);

/**
 * Interpolated obstacle distance at `p[0..3]` and, when `out_gradient` is
 * not NULL, its gradient.
 *
 * # Safety
 * `p` must hold three doubles, `out_gradient` three if not NULL.
 */
enum MpStatus mp_distance_field_query(const struct MpDistanceField *field,
                                      const double *p,
                                      double *out_distance,
                                      double *out_gradient);

/**
 * Replanner with default settings following a constant-speed line from
 * `start` to `goal`, with `num_free` optimized control points. Lines
 * shorter than the planning horizon are padded with a hold at the goal.
 * After `max_ticks` ticks (unlimited when 0) every tick returns `Finished`.
 *
 * # Safety
 * `start` and `goal` must hold three doubles; `out` must be writable.
 */
enum MpStatus mp_replanner_new_straight_line(const double *start,
                                             const double *goal,
                                             double speed,
                                             size_t num_free,
                                             size_t max_ticks,
                                             struct MpReplanner **out);

/**
 * # Safety
 * `replanner` must be NULL or a handle from this library not yet freed.
 */
void mp_replanner_free(struct MpReplanner *replanner);

/**
 * Optimizes against `field` (NULL for free space), commits one control
 * point and writes it to `out_point[0..3]`. Returns `Finished` once the
 * tick limit is exhausted.
 *
 * # Safety
 * `replanner` must be a valid handle, `field` NULL or valid, `out_point`
 * three writable doubles, `out_knot_time` NULL or writable.
 */
enum MpStatus mp_replanner_tick(struct MpReplanner *replanner,
                                const struct MpDistanceField *field,
                                double *out_point,
                                double *out_knot_time);

/**
 * Time up to which the committed trajectory is fixed.
 *
 * # Safety
 * `replanner` must be a valid handle and `out` writable.
 */
enum MpStatus mp_replanner_committed_end_time(const struct MpReplanner *replanner, double *out);

/**
 * Copy of the committed trajectory as a new spline handle.
 *
 * # Safety
 * `replanner` must be a valid handle and `out` writable.
 */
enum MpStatus mp_replanner_committed_trajectory(const struct MpReplanner *replanner,
                                                struct MpSpline **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MAVPLAN_H */
