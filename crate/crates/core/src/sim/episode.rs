//! One closed-loop flight: sense, map, replan, fly.

use serde::{Deserialize, Serialize};

use super::sensor::{DepthRenderer, Pose, SensorModel};
use super::stats::{timed, TimingStats};
use super::world::World;
use crate::bspline::UniformBSpline;
use crate::edt::{compute_edt, DistanceField};
use crate::error::{param, Result};
use crate::replanner::{Command, GlobalTrajectory, Replanner, ReplannerConfig};
use crate::ringbuffer::{LogOddsParams, OccupancyMap};
use crate::Point3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MapConfig {
    /// The buffer has `2^power` voxels per side.
    pub power: u32,
    pub resolution: f64,
    pub log_odds: LogOddsParams,
    pub unknown_is_occupied: bool,
}

impl Default for MapConfig {
    fn default() -> Self {
        Self { power: 6, resolution: 0.1, log_odds: LogOddsParams::default(), unknown_is_occupied: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EpisodeConfig {
    pub replanner: ReplannerConfig,
    pub sensor: SensorModel,
    pub map: MapConfig,
    /// Speed of the global reference in m/s.
    pub speed: f64,
    /// Radius of the bounding sphere used for ground-truth collisions.
    pub mav_radius: f64,
    /// Success radius around the goal.
    pub goal_tolerance: f64,
    /// Simulated time budget; defaults to twice the reference motion time
    /// plus ten seconds.
    pub timeout: Option<f64>,
    /// Depth frames inserted per replanning tick, spread over the last
    /// flown segment.
    pub frames_per_tick: usize,
    /// Time step for collision checks and path length integration.
    pub check_step: f64,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        Self {
            replanner: ReplannerConfig::default(),
            sensor: SensorModel::default(),
            map: MapConfig::default(),
            speed: 1.0,
            mav_radius: 0.3,
            goal_tolerance: 0.5,
            timeout: None,
            frames_per_tick: 1,
            check_step: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub points: TimingStats,
    pub move_volume: TimingStats,
    pub insertion: TimingStats,
    pub edt: TimingStats,
    pub optimization: TimingStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMetrics {
    pub success: bool,
    pub reached_goal: bool,
    pub collided: bool,
    pub timed_out: bool,
    pub ticks: usize,
    pub aborted_ticks: usize,
    pub sim_time: f64,
    pub path_length: f64,
    /// Straight-line distance between the first and last executed positions.
    pub straight_distance: f64,
    pub normalized_path_length: f64,
    /// Smallest ground-truth obstacle distance of the MAV centre.
    pub min_clearance: f64,
    pub timings: StageTimings,
    pub diagnostics: Option<String>,
}

/// Per-tick record for traces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TickTrace {
    pub tick: usize,
    pub time: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub clearance: f64,
    pub map_distance: f64,
    pub points: usize,
    pub cost_endpoint: f64,
    pub cost_collision: f64,
    pub cost_quadratic: f64,
    pub cost_limit: f64,
    pub cost_total: f64,
    pub initial_cost: f64,
    pub iterations: usize,
    pub converged: bool,
    pub aborted: bool,
    pub points_ms: f64,
    pub move_ms: f64,
    pub insert_ms: f64,
    pub edt_ms: f64,
    pub optimize_ms: f64,
}

/// Executed position at a simulated time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathSample {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub clearance: f64,
}

#[derive(Debug, Clone)]
pub struct EpisodeResult {
    pub metrics: EpisodeMetrics,
    pub ticks: Vec<TickTrace>,
    pub commands: Vec<Command>,
    pub path: Vec<PathSample>,
    pub committed: UniformBSpline,
    pub map: OccupancyMap,
    pub field: Option<DistanceField>,
}

fn heading(v: &Point3, fallback: f64) -> f64 {
    if v.x.hypot(v.y) > 0.1 {
        v.y.atan2(v.x)
    } else {
        fallback
    }
}

/// Flies the global reference through `world` with the full
/// sense → map → replan loop. The MAV follows the committed spline exactly.
/// References shorter than the replanner's horizon are padded with a hold
/// at the goal.
pub fn run_episode(world: &World, global: &GlobalTrajectory, config: &EpisodeConfig) -> Result<EpisodeResult> {
    if !(config.check_step > 0.0) || config.frames_per_tick == 0 {
        return Err(param("check step and frames per tick must be positive"));
    }
    let renderer = DepthRenderer::new(config.sensor)?;
    let mut global = global.clone();
    let short = GlobalTrajectory::min_duration(&config.replanner) - global.duration();
    if short > 0.0 {
        let hold = global.hold() + short;
        global = global.with_hold(hold)?;
    }
    let global = &global;
    let mut replanner = Replanner::new(global.clone(), config.replanner)?;
    let mut map = OccupancyMap::new(config.map.power, config.map.resolution, config.map.log_odds)?;
    let timeout = config.timeout.unwrap_or(2.0 * global.motion_duration() + 10.0);
    let goal = global.goal();
    let start = global.start();

    let mut t = replanner.committed_end_time();
    let mut pos = replanner.committed_trajectory().evaluate(t, 0)?;
    let mut yaw = heading(&(goal - start), 0.0);
    let mut path = vec![PathSample { t, x: pos.x, y: pos.y, z: pos.z, clearance: world.distance(&pos) }];
    let mut path_length = 0.0;
    let mut min_clearance = world.distance(&pos);
    let (mut collided, mut reached) = (false, (pos - goal).norm() <= config.goal_tolerance);
    let mut timed_out = false;
    let mut ticks = Vec::new();
    let mut commands = Vec::new();
    let mut field = None;
    let mut times: [Vec<f64>; 5] = Default::default();
    let mut diagnostics = None;

    while !reached && !collided {
        if t > timeout {
            timed_out = true;
            diagnostics = Some(format!("timed out after {t:.2} s"));
            break;
        }
        let committed = replanner.committed_trajectory();
        let (mut points_ms, mut move_ms, mut insert_ms) = (0.0, 0.0, 0.0);
        let mut n_points = 0;
        for k in (0..config.frames_per_tick).rev() {
            let tf = (t - k as f64 * config.replanner.dt / config.frames_per_tick as f64).max(committed.t0());
            let p = committed.evaluate(tf, 0)?;
            yaw = heading(&committed.evaluate(tf, 1)?, yaw);
            let pose = Pose { position: p, yaw };
            let (cloud, a) = timed(|| renderer.render_world(world, &pose));
            let (moved, b) = timed(|| map.move_volume(&p));
            moved?;
            let (ins, c) = timed(|| map.insert_point_cloud(&p, &cloud));
            ins?;
            n_points += cloud.len();
            points_ms += a;
            move_ms += b;
            insert_ms += c;
        }
        let (f, edt_ms) = timed(|| compute_edt(&map, config.map.unknown_is_occupied));
        let Some((command, report)) = replanner.tick(&f) else {
            diagnostics = Some("replanner finished before the goal".into());
            field = Some(f);
            break;
        };
        let optimize_ms = super::stats::ms(report.elapsed);
        for (v, s) in times.iter_mut().zip([points_ms, move_ms, insert_ms, edt_ms, optimize_ms]) {
            v.push(s);
        }
        ticks.push(TickTrace {
            tick: report.tick,
            time: t,
            x: pos.x,
            y: pos.y,
            z: pos.z,
            clearance: world.distance(&pos),
            map_distance: f.distance_at(&pos),
            points: n_points,
            cost_endpoint: report.cost.endpoint,
            cost_collision: report.cost.collision,
            cost_quadratic: report.cost.quadratic,
            cost_limit: report.cost.limit,
            cost_total: report.cost.total,
            initial_cost: report.optimize.initial_cost,
            iterations: report.optimize.iterations,
            converged: report.optimize.converged,
            aborted: report.aborted,
            points_ms,
            move_ms,
            insert_ms,
            edt_ms,
            optimize_ms,
        });
        commands.push(command);
        field = Some(f);

        // fly the newly committed segment
        let committed = replanner.committed_trajectory();
        let t_next = replanner.committed_end_time();
        let steps = ((t_next - t) / config.check_step).ceil().max(1.0) as usize;
        for k in 1..=steps {
            let tk = if k == steps { t_next } else { t + (t_next - t) * k as f64 / steps as f64 };
            let p = committed.evaluate(tk, 0)?;
            path_length += (p - pos).norm();
            pos = p;
            let clearance = world.distance(&p);
            min_clearance = min_clearance.min(clearance);
            path.push(PathSample { t: tk, x: p.x, y: p.y, z: p.z, clearance });
            if clearance < config.mav_radius {
                collided = true;
                diagnostics = Some(format!("collision at t = {tk:.2} s, {p:?}, clearance {clearance:.3} m"));
                break;
            }
            if (p - goal).norm() <= config.goal_tolerance {
                reached = true;
                break;
            }
        }
        t = t_next;
    }

    let first = path.first().map_or(start, |p| Point3::new(p.x, p.y, p.z));
    let straight = (pos - first).norm();
    let [points, move_volume, insertion, edt, optimization] = times.map(|v| TimingStats::from_ms(&v));
    let metrics = EpisodeMetrics {
        success: reached && !collided,
        reached_goal: reached,
        collided,
        timed_out,
        ticks: ticks.len(),
        aborted_ticks: ticks.iter().filter(|t| t.aborted).count(),
        sim_time: path.last().map_or(t, |s| s.t),
        path_length,
        straight_distance: straight,
        normalized_path_length: if straight > 0.0 { path_length / straight } else { f64::NAN },
        min_clearance,
        timings: StageTimings { points, move_volume, insertion, edt, optimization },
        diagnostics,
    };
    Ok(EpisodeResult { metrics, ticks, commands, path, committed: replanner.committed_trajectory(), map, field })
}
