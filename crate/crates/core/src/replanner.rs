//! Receding-horizon replanning.
//!
//! The replanner keeps a quintic B-spline whose leading control points are
//! frozen (already sent to the controller) followed by `C` free points. Each
//! tick sets the endpoint target from the global trajectory at the spline's
//! end time, optimizes the free points against the supplied distance field,
//! freezes the first free point as the command and appends a new free point
//! sampled from the global trajectory.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::bspline::{UniformBSpline, ORDER};
use crate::cost::{self, CostConfig, DistanceQuery, EndpointTarget, OptimizationProblem, OptimizeReport, StopCriteria};
use crate::error::{param, Result};
use crate::Point3;

/// Constant-speed motion along a polyline, then a hold at the last
/// waypoint.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalTrajectory {
    waypoints: Vec<Point3>,
    speed: f64,
    /// Arc length at each waypoint.
    arc: Vec<f64>,
    hold: f64,
}

impl GlobalTrajectory {
    pub fn straight_line(start: Point3, goal: Point3, speed: f64) -> Result<Self> {
        Self::waypoints(vec![start, goal], speed)
    }

    pub fn waypoints(waypoints: Vec<Point3>, speed: f64) -> Result<Self> {
        if waypoints.is_empty() {
            return Err(param("global trajectory needs at least one waypoint"));
        }
        if !(speed > 0.0 && speed.is_finite()) {
            return Err(param(format!("speed must be positive, got {speed}")));
        }
        if waypoints.iter().any(|w| !w.iter().all(|c| c.is_finite())) {
            return Err(param("waypoints must be finite"));
        }
        let mut arc = vec![0.0];
        for w in waypoints.windows(2) {
            arc.push(arc.last().unwrap() + (w[1] - w[0]).norm());
        }
        Ok(Self { waypoints, speed, arc, hold: 0.0 })
    }

    /// Sets the time spent at the goal after the motion ends.
    pub fn with_hold(mut self, hold: f64) -> Result<Self> {
        if !(hold >= 0.0 && hold.is_finite()) {
            return Err(param(format!("hold time must be non-negative, got {hold}")));
        }
        self.hold = hold;
        Ok(self)
    }

    pub fn hold(&self) -> f64 {
        self.hold
    }

    pub fn start(&self) -> Point3 {
        self.waypoints[0]
    }

    pub fn goal(&self) -> Point3 {
        *self.waypoints.last().unwrap()
    }

    pub fn speed(&self) -> f64 {
        self.speed
    }

    pub fn length(&self) -> f64 {
        *self.arc.last().unwrap()
    }

    pub fn motion_duration(&self) -> f64 {
        self.length() / self.speed
    }

    /// Motion plus hold time.
    pub fn duration(&self) -> f64 {
        self.motion_duration() + self.hold
    }

    /// Shortest duration [`Replanner::new`] accepts for `config`.
    pub fn min_duration(config: &ReplannerConfig) -> f64 {
        (ORDER + config.num_free) as f64 * config.dt
    }

    /// Index of the polyline piece containing arc length `s`.
    fn piece(&self, s: f64) -> usize {
        let k = self.arc.partition_point(|&a| a <= s);
        k.clamp(1, self.waypoints.len() - 1) - 1
    }

    pub fn position(&self, t: f64) -> Point3 {
        if self.waypoints.len() == 1 {
            return self.waypoints[0];
        }
        let s = (t * self.speed).clamp(0.0, self.length());
        let k = self.piece(s);
        let len = self.arc[k + 1] - self.arc[k];
        if len == 0.0 {
            return self.waypoints[k];
        }
        let f = (s - self.arc[k]) / len;
        self.waypoints[k] + f * (self.waypoints[k + 1] - self.waypoints[k])
    }

    pub fn velocity(&self, t: f64) -> Point3 {
        if self.waypoints.len() == 1 || t < 0.0 || t >= self.motion_duration() {
            return Point3::zeros();
        }
        let k = self.piece(t * self.speed);
        let d = self.waypoints[k + 1] - self.waypoints[k];
        let n = d.norm();
        if n == 0.0 {
            Point3::zeros()
        } else {
            d * (self.speed / n)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartPolicy {
    /// The leading frozen points repeat the start position.
    FromRest,
    /// All frozen points sample the global trajectory.
    InFlight,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReplannerConfig {
    /// Knot interval `Δt` in seconds.
    pub dt: f64,
    /// Number of free control points `C`.
    pub num_free: usize,
    pub cost: CostConfig,
    /// Factor applied to the derivative limits before optimizing.
    pub limit_scale: f64,
    pub stop: StopCriteria,
    pub start_policy: StartPolicy,
    /// How many leading frozen points repeat the start under
    /// [`StartPolicy::FromRest`]; the rest sample the global trajectory.
    pub start_repeats: usize,
    /// Stop issuing commands after this many ticks.
    pub max_ticks: Option<usize>,
}

impl Default for ReplannerConfig {
    fn default() -> Self {
        Self {
            dt: 0.5,
            num_free: 7,
            cost: CostConfig::default(),
            limit_scale: 1.2,
            stop: StopCriteria::default(),
            start_policy: StartPolicy::FromRest,
            start_repeats: ORDER,
            max_ticks: None,
        }
    }
}

/// A frozen control point sent to the controller.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Command {
    pub tick: usize,
    /// Time at the centre of the control point's support.
    pub knot_time: f64,
    pub point: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostValues {
    pub endpoint: f64,
    pub collision: f64,
    pub quadratic: f64,
    pub limit: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TickReport {
    pub tick: usize,
    pub t_ep: f64,
    pub optimize: OptimizeReport,
    /// Cost terms after optimization.
    pub cost: CostValues,
    /// The optimizer stopped on a non-finite cost; the best iterate was kept.
    pub aborted: bool,
    #[serde(serialize_with = "serialize_ms")]
    pub elapsed: Duration,
}

fn serialize_ms<S: serde::Serializer>(d: &Duration, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(d.as_secs_f64() * 1e3)
}

#[derive(Debug, Clone)]
pub struct Replanner {
    global: GlobalTrajectory,
    config: ReplannerConfig,
    spline: UniformBSpline,
    num_frozen: usize,
    ticks: usize,
}

impl Replanner {
    pub fn new(global: GlobalTrajectory, config: ReplannerConfig) -> Result<Self> {
        let c = config.num_free;
        if c == 0 {
            return Err(param("need at least one free control point"));
        }
        if !(config.dt > 0.0 && config.dt.is_finite()) {
            return Err(param(format!("knot interval must be positive, got {}", config.dt)));
        }
        if !(config.limit_scale > 0.0) {
            return Err(param(format!("limit scale must be positive, got {}", config.limit_scale)));
        }
        if !(1..=ORDER).contains(&config.start_repeats) {
            return Err(param(format!("start repeats must be in [1, {ORDER}], got {}", config.start_repeats)));
        }
        let needed = GlobalTrajectory::min_duration(&config);
        if global.duration() < needed {
            return Err(param(format!(
                "global trajectory lasts {:.3} s, need at least {needed:.3} s",
                global.duration()
            )));
        }
        let mut spline = UniformBSpline::new(Vec::new(), config.dt, 0.0)?;
        for j in 0..ORDER + c {
            let repeat = config.start_policy == StartPolicy::FromRest && j < config.start_repeats;
            let p = if repeat { global.start() } else { global.position(spline.control_point_time(j)) };
            spline.push_control_point(p);
        }
        Ok(Self { global, config, spline, num_frozen: ORDER, ticks: 0 })
    }

    pub fn config(&self) -> &ReplannerConfig {
        &self.config
    }

    pub fn global(&self) -> &GlobalTrajectory {
        &self.global
    }

    /// The whole spline, frozen prefix and free points.
    pub fn spline(&self) -> &UniformBSpline {
        &self.spline
    }

    pub fn num_frozen(&self) -> usize {
        self.num_frozen
    }

    pub fn num_free(&self) -> usize {
        self.spline.len() - self.num_frozen
    }

    pub fn ticks(&self) -> usize {
        self.ticks
    }

    /// Endpoint time of the next optimization.
    pub fn t_ep(&self) -> f64 {
        self.spline.t_end()
    }

    pub fn is_finished(&self) -> bool {
        self.config.max_ticks.is_some_and(|m| self.ticks >= m)
    }

    /// The spline restricted to frozen control points.
    pub fn committed_trajectory(&self) -> UniformBSpline {
        let mut s = self.spline.clone();
        s.truncate(self.num_frozen);
        s
    }

    /// End of the time range covered by the committed trajectory.
    pub fn committed_end_time(&self) -> f64 {
        self.spline.knot_time(self.num_frozen - ORDER + 1)
    }

    /// One replanning step. Returns `None` once `max_ticks` is exhausted.
    pub fn tick(&mut self, field: &dyn DistanceQuery) -> Option<(Command, TickReport)> {
        if self.is_finished() {
            return None;
        }
        let start = Instant::now();
        let t_ep = self.t_ep();
        let target =
            EndpointTarget { t_ep, position: self.global.position(t_ep), velocity: self.global.velocity(t_ep) };
        let mut cost = self.config.cost;
        cost.limits = cost.limits.scaled(self.config.limit_scale);
        let mut problem = OptimizationProblem::new(self.spline.clone(), self.config.num_free, field, cost, target)
            .expect("replanner state is always a valid problem");
        let optimize = cost::optimize(&mut problem, &self.config.stop);
        let b = problem.breakdown();
        self.spline = problem.into_spline();

        let j = self.num_frozen;
        self.num_frozen += 1;
        let p = self.spline.control_points()[j];
        let command =
            Command { tick: self.ticks, knot_time: self.spline.control_point_time(j), point: [p.x, p.y, p.z] };
        let next = self.spline.len();
        let q = self.global.position(self.spline.control_point_time(next));
        self.spline.push_control_point(q);
        self.ticks += 1;
        let report = TickReport {
            tick: command.tick,
            t_ep,
            aborted: optimize.aborted(),
            optimize,
            cost: CostValues {
                endpoint: b.endpoint.value,
                collision: b.collision.value,
                quadratic: b.quadratic.value,
                limit: b.limit.value,
                total: b.total.value,
            },
            elapsed: start.elapsed(),
        };
        Some((command, report))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::FreeSpace;

    fn line() -> GlobalTrajectory {
        GlobalTrajectory::straight_line(Point3::new(0.0, 0.0, 1.0), Point3::new(20.0, 0.0, 1.0), 1.0).unwrap()
    }

    #[test]
    fn global_line_queries() {
        let g = line();
        assert_eq!(g.duration(), 20.0);
        assert_eq!(g.position(-1.0), g.start());
        assert_eq!(g.position(25.0), g.goal());
        assert!((g.position(3.5) - Point3::new(3.5, 0.0, 1.0)).norm() < 1e-12);
        assert_eq!(g.velocity(3.5), Point3::new(1.0, 0.0, 0.0));
        assert_eq!(g.velocity(20.0), Point3::zeros());
        let h = g.clone().with_hold(3.0).unwrap();
        assert_eq!(h.duration(), 23.0);
        assert_eq!(h.position(22.0), h.goal());
        assert_eq!(h.velocity(21.0), Point3::zeros());

        let w = GlobalTrajectory::waypoints(
            vec![Point3::zeros(), Point3::new(3.0, 0.0, 0.0), Point3::new(3.0, 4.0, 0.0)],
            2.0,
        )
        .unwrap();
        assert_eq!(w.duration(), 3.5);
        assert!((w.position(2.5) - Point3::new(3.0, 2.0, 0.0)).norm() < 1e-12);
        assert_eq!(w.velocity(2.5), Point3::new(0.0, 2.0, 0.0));
    }

    #[test]
    fn init_from_rest() {
        let r = Replanner::new(line(), ReplannerConfig::default()).unwrap();
        assert_eq!(r.num_frozen(), 6);
        assert_eq!(r.num_free(), 7);
        let s = r.spline();
        assert_eq!(s.evaluate(0.0, 0).unwrap(), line().start());
        assert!(s.evaluate(0.0, 1).unwrap().norm() < 1e-12);
        for p in &s.control_points()[6..] {
            assert!(p.y.abs() < 1e-12 && (p.z - 1.0).abs() < 1e-12);
        }
        assert_eq!(r.committed_trajectory().num_segments(), 1);
    }

    #[test]
    fn init_in_flight_lies_on_line() {
        let cfg = ReplannerConfig { start_policy: StartPolicy::InFlight, ..Default::default() };
        let r = Replanner::new(line(), cfg).unwrap();
        let s = r.spline();
        for k in 0..=40 {
            let t = s.t_end() * k as f64 / 40.0;
            let p = s.evaluate(t, 0).unwrap();
            assert!(p.iter().all(|c| c.is_finite()));
            assert!(p.y.abs() < 1e-12);
        }
    }

    #[test]
    fn too_short_global_is_rejected() {
        let g = GlobalTrajectory::straight_line(Point3::zeros(), Point3::new(6.0, 0.0, 0.0), 1.0).unwrap();
        assert!(Replanner::new(g.clone(), ReplannerConfig::default()).is_err());
        assert!(Replanner::new(g.with_hold(0.5).unwrap(), ReplannerConfig::default()).is_ok());
    }

    #[test]
    fn free_space_stays_on_line() {
        let mut r = Replanner::new(line(), ReplannerConfig::default()).unwrap();
        for k in 0..20 {
            let (cmd, rep) = r.tick(&FreeSpace).unwrap();
            assert!(!rep.aborted);
            assert_eq!(r.num_free(), 7);
            if k >= 3 {
                assert!(cmd.point[1].abs() < 1e-3 && (cmd.point[2] - 1.0).abs() < 1e-3, "{cmd:?}");
            }
        }
    }

    #[test]
    fn frozen_points_never_change() {
        let mut r = Replanner::new(line(), ReplannerConfig::default()).unwrap();
        let mut commands = Vec::new();
        let mut prefix: Vec<Point3> = r.spline().control_points()[..6].to_vec();
        for _ in 0..12 {
            let (cmd, _) = r.tick(&FreeSpace).unwrap();
            commands.push(cmd);
            let cps = r.spline().control_points();
            for (a, b) in prefix.iter().zip(cps) {
                assert_eq!(a, b);
            }
            prefix = cps[..r.num_frozen()].to_vec();
        }
        let committed = r.committed_trajectory();
        assert_eq!(committed.len(), 6 + 12);
        for (c, p) in commands.iter().zip(&committed.control_points()[6..]) {
            assert_eq!(Point3::from(c.point), *p);
        }
    }

    #[test]
    fn max_ticks_zero_gives_no_command() {
        let cfg = ReplannerConfig { max_ticks: Some(0), ..Default::default() };
        let mut r = Replanner::new(line(), cfg).unwrap();
        assert!(r.is_finished());
        assert!(r.tick(&FreeSpace).is_none());
        assert_eq!(r.num_frozen(), 6);
    }
}
