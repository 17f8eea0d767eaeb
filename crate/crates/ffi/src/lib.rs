//! C ABI for `mavplan`.
//!
//! Objects are opaque heap handles created by `mp_*_new` functions and
//! released with the matching `mp_*_free`. Every fallible function returns an
//! [`MpStatus`]; on failure a message is available from [`mp_last_error`]
//! until the next failing call on the same thread. Points are passed as
//! `x, y, z` triples of `double`. Panics never cross the boundary.
//!
//! Handles are not thread-safe; use each one from a single thread at a time.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use mavplan::cost::FreeSpace;
use mavplan::edt::compute_edt;
use mavplan::{
    DistanceField, DistanceQuery, Error, GlobalTrajectory, Index3, LogOddsParams, OccupancyMap, Point3, Replanner,
    ReplannerConfig, UniformBSpline,
};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MpStatus {
    Ok = 0,
    /// A required pointer argument was NULL.
    NullPointer = 1,
    /// An argument violates its documented precondition.
    InvalidParameter = 2,
    /// A query falls outside the region where the object is defined.
    OutOfDomain = 3,
    MalformedInput = 4,
    Io = 5,
    /// The replanner has committed its whole reference.
    Finished = 6,
    /// An internal error was caught at the boundary.
    Internal = 7,
}

/// A uniform quintic B-spline.
pub struct MpSpline(UniformBSpline);

/// A robocentric occupancy buffer.
pub struct MpOccupancyMap(OccupancyMap);

/// A Euclidean distance field computed from an occupancy map.
pub struct MpDistanceField(DistanceField);

/// A receding-horizon replanner following a straight reference.
pub struct MpReplanner(Replanner);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Fail(MpStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Parameter(_) => MpStatus::InvalidParameter,
            Error::Domain(_) => MpStatus::OutOfDomain,
            Error::Format(_) | Error::Json(_) => MpStatus::MalformedInput,
            Error::Io(_) => MpStatus::Io,
        };
        Fail(status, e.to_string())
    }
}

fn null(name: &str) -> Fail {
    Fail(MpStatus::NullPointer, format!("{name} is NULL"))
}

fn guard(f: impl FnOnce() -> Result<MpStatus, Fail>) -> MpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(s)) => s,
        Ok(Err(Fail(s, msg))) => {
            set_error(msg);
            s
        }
        Err(_) => {
            set_error("internal error".into());
            MpStatus::Internal
        }
    }
}

unsafe fn read3(p: *const f64, name: &str) -> Result<Point3, Fail> {
    if p.is_null() {
        return Err(null(name));
    }
    let s = std::slice::from_raw_parts(p, 3);
    Ok(Point3::new(s[0], s[1], s[2]))
}

unsafe fn write3(out: *mut f64, v: &Point3) {
    std::slice::from_raw_parts_mut(out, 3).copy_from_slice(v.as_slice());
}

unsafe fn points(data: *const f64, count: usize, name: &str) -> Result<Vec<Point3>, Fail> {
    if count == 0 {
        return Ok(Vec::new());
    }
    if data.is_null() {
        return Err(null(name));
    }
    Ok(std::slice::from_raw_parts(data, 3 * count).chunks_exact(3).map(|c| Point3::new(c[0], c[1], c[2])).collect())
}

unsafe fn handle<'a, T>(p: *const T, name: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(name))
}

unsafe fn handle_mut<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(name))
}

unsafe fn emit<T>(out: *mut *mut T, v: T) -> Result<MpStatus, Fail> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(v));
    Ok(MpStatus::Ok)
}

unsafe fn release<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Message of the last failure on this thread, or NULL. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn mp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

// ---------------------------------------------------------------- spline

/// Creates a spline from `count` control points stored as `3 * count`
/// doubles. Segment `i` covers `[t0 + i dt, t0 + (i + 1) dt]`.
///
/// # Safety
/// `points` must hold `3 * count` doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mp_spline_new(
    points_xyz: *const f64,
    count: usize,
    dt: f64,
    t0: f64,
    out: *mut *mut MpSpline,
) -> MpStatus {
    guard(|| {
        let pts = points(points_xyz, count, "points")?;
        emit(out, MpSpline(UniformBSpline::new(pts, dt, t0)?))
    })
}

/// # Safety
/// `spline` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mp_spline_free(spline: *mut MpSpline) {
    release(spline)
}

/// # Safety
/// Pointers must be valid; `out_t0` and `out_t_end` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mp_spline_time_range(
    spline: *const MpSpline,
    out_t0: *mut f64,
    out_t_end: *mut f64,
) -> MpStatus {
    guard(|| {
        let s = &handle(spline, "spline")?.0;
        if out_t0.is_null() || out_t_end.is_null() {
            return Err(null("out"));
        }
        *out_t0 = s.t0();
        *out_t_end = s.t_end();
        Ok(MpStatus::Ok)
    })
}

/// Writes the `deriv_order`-th time derivative at `t` to `out[0..3]`.
///
/// # Safety
/// `spline` must be a valid handle and `out` must hold three doubles.
#[no_mangle]
pub unsafe extern "C" fn mp_spline_evaluate(
    spline: *const MpSpline,
    t: f64,
    deriv_order: u32,
    out: *mut f64,
) -> MpStatus {
    guard(|| {
        let s = &handle(spline, "spline")?.0;
        if out.is_null() {
            return Err(null("out"));
        }
        write3(out, &s.evaluate(t, deriv_order as usize)?);
        Ok(MpStatus::Ok)
    })
}

/// Copies up to `capacity` control points to `out` and stores the total
/// number in `out_count`. Pass `capacity = 0` to query the count.
///
/// # Safety
/// `out` must hold `3 * capacity` doubles; `out_count` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mp_spline_control_points(
    spline: *const MpSpline,
    out: *mut f64,
    capacity: usize,
    out_count: *mut usize,
) -> MpStatus {
    guard(|| {
        let s = &handle(spline, "spline")?.0;
        if out_count.is_null() {
            return Err(null("out_count"));
        }
        let cps = s.control_points();
        *out_count = cps.len();
        if capacity > 0 {
            if out.is_null() {
                return Err(null("out"));
            }
            for (k, p) in cps.iter().take(capacity).enumerate() {
                write3(out.add(3 * k), p);
            }
        }
        Ok(MpStatus::Ok)
    })
}

// ---------------------------------------------------------------- mapping

/// Creates a `2^power`-voxel cube with the given voxel size and default
/// log-odds parameters, centred on the origin.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mp_map_new(power: u32, resolution: f64, out: *mut *mut MpOccupancyMap) -> MpStatus {
    guard(|| emit(out, MpOccupancyMap(OccupancyMap::new(power, resolution, LogOddsParams::default())?)))
}

/// # Safety
/// `map` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mp_map_free(map: *mut MpOccupancyMap) {
    release(map)
}

/// Re-centres the volume on `center[0..3]`.
///
/// # Safety
/// `map` must be a valid handle and `center` must hold three doubles.
#[no_mangle]
pub unsafe extern "C" fn mp_map_move_volume(map: *mut MpOccupancyMap, center: *const f64) -> MpStatus {
    guard(|| {
        let m = &mut handle_mut(map, "map")?.0;
        m.move_volume(&read3(center, "center")?)?;
        Ok(MpStatus::Ok)
    })
}

/// Inserts `count` world-frame points observed from `origin`.
///
/// # Safety
/// `points_xyz` must hold `3 * count` doubles and `origin` three.
#[no_mangle]
pub unsafe extern "C" fn mp_map_insert_point_cloud(
    map: *mut MpOccupancyMap,
    origin: *const f64,
    points_xyz: *const f64,
    count: usize,
) -> MpStatus {
    guard(|| {
        let m = &mut handle_mut(map, "map")?.0;
        let o = read3(origin, "origin")?;
        m.insert_point_cloud(&o, &points(points_xyz, count, "points")?)?;
        Ok(MpStatus::Ok)
    })
}

/// Log-odds of the voxel with integer index `index[0..3]`; `OutOfDomain`
/// when it is outside the volume.
///
/// # Safety
/// `index` must hold three `int64_t` and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mp_map_log_odds(map: *const MpOccupancyMap, index: *const i64, out: *mut f32) -> MpStatus {
    guard(|| {
        let m = &handle(map, "map")?.0;
        if index.is_null() || out.is_null() {
            return Err(null("index or out"));
        }
        let s = std::slice::from_raw_parts(index, 3);
        let x = Index3::new(s[0], s[1], s[2]);
        match m.log_odds(&x) {
            Some(l) => {
                *out = l;
                Ok(MpStatus::Ok)
            }
            None => Err(Fail(MpStatus::OutOfDomain, format!("voxel {s:?} outside the volume"))),
        }
    })
}

/// Distance transform of the map. Unknown voxels count as free unless
/// `unknown_is_occupied` is set.
///
/// # Safety
/// `map` must be a valid handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mp_distance_field_compute(
    map: *const MpOccupancyMap,
    unknown_is_occupied: bool,
    out: *mut *mut MpDistanceField,
) -> MpStatus {
    guard(|| {
        let m = &handle(map, "map")?.0;
        emit(out, MpDistanceField(compute_edt(m, unknown_is_occupied)))
    })
}

/// # Safety
/// `field` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mp_distance_field_free(field: *mut MpDistanceField) {
    release(field)
}

/// Interpolated obstacle distance at `p[0..3]` and, when `out_gradient` is
/// not NULL, its gradient.
///
/// # Safety
/// `p` must hold three doubles, `out_gradient` three if not NULL.
#[no_mangle]
pub unsafe extern "C" fn mp_distance_field_query(
    field: *const MpDistanceField,
    p: *const f64,
    out_distance: *mut f64,
    out_gradient: *mut f64,
) -> MpStatus {
    guard(|| {
        let f = &handle(field, "field")?.0;
        if out_distance.is_null() {
            return Err(null("out_distance"));
        }
        let (d, g) = f.distance_and_gradient(&read3(p, "p")?);
        *out_distance = d;
        if !out_gradient.is_null() {
            write3(out_gradient, &g);
        }
        Ok(MpStatus::Ok)
    })
}

// ---------------------------------------------------------------- replanner

/// Replanner with default settings following a constant-speed line from
/// `start` to `goal`, with `num_free` optimized control points. Lines
/// shorter than the planning horizon are padded with a hold at the goal.
/// After `max_ticks` ticks (unlimited when 0) every tick returns `Finished`.
///
/// # Safety
/// `start` and `goal` must hold three doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mp_replanner_new_straight_line(
    start: *const f64,
    goal: *const f64,
    speed: f64,
    num_free: usize,
    max_ticks: usize,
    out: *mut *mut MpReplanner,
) -> MpStatus {
    guard(|| {
        let config =
            ReplannerConfig { num_free, max_ticks: (max_ticks > 0).then_some(max_ticks), ..Default::default() };
        let mut global = GlobalTrajectory::straight_line(read3(start, "start")?, read3(goal, "goal")?, speed)?;
        let short = GlobalTrajectory::min_duration(&config) - global.duration();
        if short > 0.0 {
            global = global.with_hold(short)?;
        }
        emit(out, MpReplanner(Replanner::new(global, config)?))
    })
}

/// # Safety
/// `replanner` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mp_replanner_free(replanner: *mut MpReplanner) {
    release(replanner)
}

/// Optimizes against `field` (NULL for free space), commits one control
/// point and writes it to `out_point[0..3]`. Returns `Finished` once the
/// tick limit is exhausted.
///
/// # Safety
/// `replanner` must be a valid handle, `field` NULL or valid, `out_point`
/// three writable doubles, `out_knot_time` NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn mp_replanner_tick(
    replanner: *mut MpReplanner,
    field: *const MpDistanceField,
    out_point: *mut f64,
    out_knot_time: *mut f64,
) -> MpStatus {
    guard(|| {
        let r = &mut handle_mut(replanner, "replanner")?.0;
        if out_point.is_null() {
            return Err(null("out_point"));
        }
        let query: &dyn DistanceQuery = match field.as_ref() {
            Some(f) => &f.0,
            None => &FreeSpace,
        };
        match r.tick(query) {
            Some((command, _)) => {
                write3(out_point, &Point3::from(command.point));
                if !out_knot_time.is_null() {
                    *out_knot_time = command.knot_time;
                }
                Ok(MpStatus::Ok)
            }
            None => Ok(MpStatus::Finished),
        }
    })
}

/// Time up to which the committed trajectory is fixed.
///
/// # Safety
/// `replanner` must be a valid handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mp_replanner_committed_end_time(replanner: *const MpReplanner, out: *mut f64) -> MpStatus {
    guard(|| {
        let r = &handle(replanner, "replanner")?.0;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = r.committed_end_time();
        Ok(MpStatus::Ok)
    })
}

/// Copy of the committed trajectory as a new spline handle.
///
/// # Safety
/// `replanner` must be a valid handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mp_replanner_committed_trajectory(
    replanner: *const MpReplanner,
    out: *mut *mut MpSpline,
) -> MpStatus {
    guard(|| {
        let r = &handle(replanner, "replanner")?.0;
        emit(out, MpSpline(r.committed_trajectory()))
    })
}
