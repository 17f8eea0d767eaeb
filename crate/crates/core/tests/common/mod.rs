//! Independent reference implementations shared by the integration tests and
//! the acceptance runner.

#![allow(dead_code)]

use mavplan::bspline::basis_weights;
use mavplan::cost::{CostConfig, CostTerm, DerivativeLimits};
use mavplan::edt::NO_SITE;
use mavplan::ringbuffer::{inside_volume_bitwise, wrap_bitwise};
use mavplan::sim::{Primitive, World};
use mavplan::{
    CostWeights, EndpointTarget, GlobalTrajectory, Index3, LogOddsParams, OccupancyMap, OptimizationProblem, Point3,
    Replanner, ReplannerConfig, UniformBSpline,
};
use nalgebra::DVector;
use num::{BigInt, BigRational};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const DEGREE: usize = 5;

/// Printed quintic basis matrix, integer entries over 120.
pub const M6_TIMES_120: [[i64; 6]; 6] = [
    [1, 26, 66, 26, 1, 0],
    [-5, -50, 0, 50, 5, 0],
    [10, 20, -60, 20, 10, 0],
    [-10, 20, 0, -20, 10, 0],
    [5, -20, 30, -20, 5, 0],
    [-1, 5, -10, 10, -5, 1],
];

/// Printed inner matrix of the acceleration cost as (numerator,
/// denominator); 57.6 and 114.286 are 288/5 and 800/7.
pub const Q_ACCEL_INNER: [[(i64, i64); 6]; 6] = [
    [(0, 1), (0, 1), (0, 1), (0, 1), (0, 1), (0, 1)],
    [(0, 1), (0, 1), (0, 1), (0, 1), (0, 1), (0, 1)],
    [(0, 1), (0, 1), (8, 1), (12, 1), (16, 1), (20, 1)],
    [(0, 1), (0, 1), (12, 1), (24, 1), (36, 1), (48, 1)],
    [(0, 1), (0, 1), (16, 1), (36, 1), (288, 5), (80, 1)],
    [(0, 1), (0, 1), (20, 1), (48, 1), (80, 1), (800, 7)],
];

/// Printed decimal rendering of the acceleration matrix, checked against
/// the exact entries by rounding.
pub const Q_ACCEL_PRINTED: [[&str; 4]; 4] =
    [["8", "12", "16", "20"], ["12", "24", "36", "48"], ["16", "36", "57.6", "80"], ["20", "48", "80", "114.286"]];

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

// ---------------------------------------------------------------- splines

/// De Boor evaluation of a degree-`p` spline with explicit knots, for
/// `knots[p] <= t <= knots[n]`.
pub fn de_boor(cp: &[Point3], p: usize, knots: &[f64], t: f64) -> Point3 {
    let n = cp.len();
    assert_eq!(knots.len(), n + p + 1);
    let mut k = p;
    while k + 1 < n && knots[k + 1] <= t {
        k += 1;
    }
    let mut d: Vec<Point3> = (0..=p).map(|j| cp[j + k - p]).collect();
    for r in 1..=p {
        for j in (r..=p).rev() {
            let lo = knots[j + k - p];
            let hi = knots[j + 1 + k - r];
            let a = (t - lo) / (hi - lo);
            d[j] = d[j - 1] * (1.0 - a) + d[j] * a;
        }
    }
    d[p]
}

/// `d`-th time derivative by differentiating the control polygon.
pub fn de_boor_derivative(cp: &[Point3], p: usize, knots: &[f64], t: f64, d: usize) -> Point3 {
    if d == 0 {
        return de_boor(cp, p, knots, t);
    }
    if p == 0 {
        return Point3::zeros();
    }
    let q: Vec<Point3> =
        (0..cp.len() - 1).map(|j| (cp[j + 1] - cp[j]) * (p as f64 / (knots[j + p + 1] - knots[j + 1]))).collect();
    de_boor_derivative(&q, p - 1, &knots[1..knots.len() - 1], t, d - 1)
}

/// Uniform knots of a quintic spline whose first full segment starts at
/// `t0`.
pub fn uniform_knots(n: usize, dt: f64, t0: f64) -> Vec<f64> {
    (0..n + DEGREE + 1).map(|k| t0 + (k as f64 - DEGREE as f64) * dt).collect()
}

pub fn random_point(rng: &mut ChaCha8Rng, scale: f64) -> Point3 {
    Point3::new(rng.random_range(-scale..scale), rng.random_range(-scale..scale), rng.random_range(-scale..scale))
}

pub fn random_spline(rng: &mut ChaCha8Rng, n: usize) -> UniformBSpline {
    let pts = (0..n).map(|_| random_point(rng, 5.0)).collect();
    let dt = rng.random_range(0.1..2.0);
    let t0 = rng.random_range(-10.0..10.0);
    UniformBSpline::new(pts, dt, t0).unwrap()
}

/// Largest deviation between the spline and the De Boor reference over
/// `samples` random times, derivative orders 0 to 2, relative to the scale
/// of the reference value.
pub fn spline_oracle_error(rng: &mut ChaCha8Rng, splines: usize, samples: usize) -> f64 {
    let mut worst = 0.0f64;
    for _ in 0..splines {
        let n = rng.random_range(6..16);
        let s = random_spline(rng, n);
        let knots = uniform_knots(n, s.dt(), s.t0());
        for k in 0..samples {
            let t = if k == 0 { s.t_end() } else { rng.random_range(s.t0()..s.t_end()) };
            for d in 0..=2 {
                let a = s.evaluate(t, d).unwrap();
                let b = de_boor_derivative(s.control_points(), DEGREE, &knots, t, d);
                worst = worst.max((a - b).norm() / b.norm().max(1.0));
            }
        }
    }
    worst
}

/// Largest mismatch of derivatives 0 to 4 across interior knots of random
/// splines, relative to the derivative scale.
pub fn knot_continuity_error(rng: &mut ChaCha8Rng, splines: usize) -> f64 {
    let mut worst = 0.0f64;
    for _ in 0..splines {
        let n = rng.random_range(7..16);
        let s = random_spline(rng, n);
        for i in 1..s.num_segments() {
            for d in 0..=4 {
                let l = s.evaluate_segment(i - 1, 1.0, d);
                let r = s.evaluate_segment(i, 0.0, d);
                worst = worst.max((l - r).norm() / l.norm().max(1.0));
            }
        }
    }
    worst
}

/// Basis weight sums: 1 for positions, 0 for every derivative.
pub fn partition_of_unity_error(u: f64) -> f64 {
    (0..=5)
        .map(|d| {
            let s: f64 = basis_weights(u, d).iter().sum();
            let want = if d == 0 { 1.0 } else { 0.0 };
            let scale = if d == 0 { 1.0 } else { 10f64.powi(d as i32) };
            (s - want).abs() / scale
        })
        .fold(0.0, f64::max)
}

/// Gauss–Legendre quadrature of `∫ ‖p^(i)(t)‖² dt` over one segment.
pub fn gauss_segment_cost(s: &UniformBSpline, seg: usize, i: usize) -> f64 {
    // 8-point rule, exact for the degree-≤ 15 integrands here
    const X: [f64; 4] = [0.1834346424956498, 0.5255324099163290, 0.7966664774136267, 0.9602898564975363];
    const W: [f64; 4] = [0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763];
    let mut acc = 0.0;
    for (x, w) in X.iter().zip(W) {
        for sgn in [-1.0, 1.0] {
            let u = 0.5 + 0.5 * sgn * x;
            acc += 0.5 * w * s.evaluate_segment(seg, u, i).norm_squared();
        }
    }
    acc * s.dt()
}

// ---------------------------------------------------------------- EDT

/// Exhaustive nearest-site search, pruned only by planes whose squared
/// x distance already exceeds the best candidate.
pub fn brute_force_edt(occupied: &[bool], n: usize) -> Vec<i64> {
    let mut planes: Vec<Vec<(i64, i64)>> = vec![Vec::new(); n];
    for (i, &o) in occupied.iter().enumerate() {
        if o {
            planes[i % n].push((((i / n) % n) as i64, (i / (n * n)) as i64));
        }
    }
    let mut out = vec![NO_SITE; n * n * n];
    for (i, o) in out.iter_mut().enumerate() {
        let (x, y, z) = ((i % n) as i64, ((i / n) % n) as i64, (i / (n * n)) as i64);
        let mut best = NO_SITE;
        for dx in 0..n as i64 {
            if dx * dx >= best {
                break;
            }
            for px in [x - dx, x + dx] {
                if px < 0 || px >= n as i64 || (dx == 0 && px != x) {
                    continue;
                }
                for &(sy, sz) in &planes[px as usize] {
                    let d = dx * dx + (sy - y).pow(2) + (sz - z).pow(2);
                    best = best.min(d);
                }
                if dx == 0 {
                    break;
                }
            }
        }
        *o = best;
    }
    out
}

/// Random occupancy grid with a log-uniform fill fraction.
pub fn random_grid(rng: &mut ChaCha8Rng, n: usize) -> Vec<bool> {
    let fill = 10f64.powf(rng.random_range(-4.0..-0.5));
    (0..n * n * n).map(|_| rng.random_bool(fill)).collect()
}

// ---------------------------------------------------------------- addressing

pub fn inside_reference(x: &Index3, o: &Index3, power: u32) -> bool {
    let n = 1i64 << power;
    (0..3).all(|k| x[k] - o[k] >= 0 && x[k] - o[k] < n)
}

pub fn address_reference(x: &Index3, power: u32) -> usize {
    let n = 1i64 << power;
    let w = x.map(|c| c.rem_euclid(n));
    (w.x + n * (w.y + n * w.z)) as usize
}

/// Number of disagreements between the bitwise and arithmetic inside test
/// and slot computation over `pairs` random index/offset pairs.
pub fn addressing_mismatches(rng: &mut ChaCha8Rng, pairs: usize) -> usize {
    let mut bad = 0;
    for _ in 0..pairs {
        let power = rng.random_range(1..=10u32);
        let n = 1i64 << power;
        let o = Index3::new(
            rng.random_range(-1_000_000..1_000_000),
            rng.random_range(-1_000_000..1_000_000),
            rng.random_range(-1_000_000..1_000_000),
        );
        // half the indices near the volume so both outcomes are common
        let x = if rng.random_bool(0.5) {
            o + Index3::new(rng.random_range(-2 * n..3 * n), rng.random_range(-n..2 * n), rng.random_range(-n..2 * n))
        } else {
            Index3::new(
                rng.random_range(-2_000_000..2_000_000),
                rng.random_range(-2_000_000..2_000_000),
                rng.random_range(-2_000_000..2_000_000),
            )
        };
        if inside_volume_bitwise(&x, &o, power) != inside_reference(&x, &o, power) {
            bad += 1;
        }
        let w = x.map(|c| wrap_bitwise(c, power));
        let slot = (w.x | (w.y << power) | (w.z << (2 * power))) as usize;
        if slot != address_reference(&x, power) {
            bad += 1;
        }
    }
    bad
}

// ---------------------------------------------------------------- costs

/// Random sphere world around the spline with some obstacles close to it.
pub fn sphere_world(rng: &mut ChaCha8Rng, spline: &UniformBSpline) -> World {
    let mut w = World::empty([-20.0; 3], [20.0; 3]);
    let cps = spline.control_points();
    for _ in 0..rng.random_range(1..6) {
        let anchor = cps[rng.random_range(0..cps.len())];
        let c = anchor + random_point(rng, 1.0);
        w.obstacles.push(Primitive::Sphere { center: [c.x, c.y, c.z], radius: rng.random_range(0.1..0.8) });
    }
    w
}

pub struct RandomProblem {
    pub spline: UniformBSpline,
    pub num_free: usize,
    pub world: World,
    pub config: CostConfig,
    pub target: EndpointTarget,
}

impl RandomProblem {
    pub fn generate(rng: &mut ChaCha8Rng) -> Self {
        let n = rng.random_range(8..18);
        let dt = rng.random_range(0.2..1.0);
        let mut p = Point3::zeros();
        let step = rng.random_range(0.05..0.8);
        let pts: Vec<Point3> = (0..n)
            .map(|_| {
                p += random_point(rng, step);
                p
            })
            .collect();
        let spline = UniformBSpline::new(pts, dt, rng.random_range(-3.0..3.0)).unwrap();
        let num_free = rng.random_range(1..=(n - 6).min(9));
        let world = sphere_world(rng, &spline);
        // limits around the actual derivative sizes so some are violated
        let peak = |d: usize| {
            (0..spline.num_segments())
                .flat_map(|i| [0.0, 0.5, 1.0].map(|u| spline.evaluate_segment(i, u, d).norm()))
                .fold(1e-3, f64::max)
        };
        let limits =
            DerivativeLimits { max: [1, 2, 3, 4].map(|d| peak(d) * rng.random_range(0.7..1.5)), enabled: [true; 4] };
        let weights = CostWeights {
            lambda_p: rng.random_range(0.1..10.0),
            lambda_v: rng.random_range(0.1..10.0),
            lambda_c: rng.random_range(0.1..10.0),
            lambda_q: [0; 3].map(|_| rng.random_range(0.01..1.0)),
            lambda_l: rng.random_range(0.01..1.0),
        };
        let config = CostConfig {
            weights,
            limits,
            tau: rng.random_range(0.3..1.5),
            samples_per_segment: rng.random_range(4..16),
        };
        let t_ep = if rng.random_bool(0.5) { spline.t_end() } else { rng.random_range(spline.t0()..spline.t_end()) };
        let target = EndpointTarget { t_ep, position: random_point(rng, 5.0), velocity: random_point(rng, 1.0) };
        Self { spline, num_free, world, config, target }
    }

    pub fn problem(&self) -> OptimizationProblem<'_> {
        OptimizationProblem::new(self.spline.clone(), self.num_free, &self.world, self.config, self.target).unwrap()
    }
}

pub const TERM_NAMES: [&str; 5] = ["endpoint", "collision", "quadratic", "limit", "total"];

pub fn term(p: &OptimizationProblem<'_>, k: usize) -> CostTerm {
    match k {
        0 => p.endpoint_cost(),
        1 => p.collision_cost(),
        2 => p.quadratic_cost(),
        3 => p.limit_cost(),
        _ => p.total_cost(),
    }
}

/// Relative error `‖g − g_fd‖ / ‖g_fd‖` of one term's analytic gradient
/// against central differences.
///
/// Each component tries steps from `1e-2` down to `1e-7` (relative) and
/// keeps the Richardson extrapolation of the most self-consistent pair of
/// successive steps, which avoids both roundoff on large values and steps
/// that straddle the non-smooth limit boundary.
pub fn gradient_error(p: &mut OptimizationProblem<'_>, k: usize) -> f64 {
    let x0 = p.free_vector();
    let analytic = term(p, k).gradient_vector();
    let mut central = |i: usize, h: f64| {
        let mut x = x0.clone();
        x[i] = x0[i] + h;
        p.set_free_vector(&x);
        let fp = term(p, k).value;
        x[i] = x0[i] - h;
        p.set_free_vector(&x);
        let fm = term(p, k).value;
        (fp - fm) / (2.0 * h)
    };
    let mut fd = DVector::zeros(x0.len());
    for i in 0..x0.len() {
        let scale = x0[i].abs().max(1.0);
        let d: Vec<f64> = (0..12).map(|e| central(i, scale * 1e-2 / 2f64.powf(e as f64 * 1.5))).collect();
        let (_, best) = d
            .windows(2)
            .map(|w| ((w[1] - w[0]).abs(), w[1] + (w[1] - w[0]) / 7.0))
            .fold((f64::INFINITY, 0.0), |a, b| if b.0 < a.0 { b } else { a });
        fd[i] = best;
    }
    p.set_free_vector(&x0);
    if fd.norm().max(analytic.norm()) < 1e-9 {
        return 0.0;
    }
    (analytic - &fd).norm() / fd.norm().max(1e-9)
}

// ---------------------------------------------------------------- mapping

/// Random point batches around a moving sensor; returns whether every
/// voxel stayed within the clamping bounds after each batch.
pub fn log_odds_stay_clamped(rng: &mut ChaCha8Rng, batches: usize) -> bool {
    let params = LogOddsParams::default();
    let mut map = OccupancyMap::new(4, 0.2, params).unwrap();
    for _ in 0..batches {
        let origin = random_point(rng, 0.5);
        map.move_volume(&origin).unwrap();
        let pts: Vec<Point3> = (0..rng.random_range(0..200)).map(|_| origin + random_point(rng, 3.0)).collect();
        map.insert_point_cloud(&origin, &pts).unwrap();
        if !map.grid().cells().iter().all(|&l| l >= params.min && l <= params.max) {
            return false;
        }
        if map.flags().iter().any(|&f| f != 0) {
            return false;
        }
    }
    true
}

// ---------------------------------------------------------------- replanner

/// Flies `ticks` replanning steps along a line through random spheres and
/// checks that frozen control points never change bit-wise and that the
/// committed trajectory is C⁴ at every interior knot.
pub fn check_commitment(seed: u64, num_free: usize, ticks: usize) -> Result<(), String> {
    use rand::SeedableRng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let goal = Point3::new(rng.random_range(6.0..12.0), rng.random_range(-1.0..1.0), 1.5);
    let config = ReplannerConfig { num_free, ..Default::default() };
    let global = GlobalTrajectory::straight_line(Point3::new(0.0, 0.0, 1.5), goal, 1.0)
        .and_then(|g| g.with_hold(GlobalTrajectory::min_duration(&config)))
        .map_err(|e| e.to_string())?;
    let mut world = World::empty([-5.0; 3], [20.0; 3]);
    for _ in 0..rng.random_range(0..4) {
        let s = rng.random_range(0.2..0.9);
        let c = Point3::new(0.0, 0.0, 1.5) + (goal - Point3::new(0.0, 0.0, 1.5)) * s + random_point(&mut rng, 0.4);
        world.obstacles.push(Primitive::Sphere { center: [c.x, c.y, c.z], radius: rng.random_range(0.1..0.5) });
    }
    let mut r = Replanner::new(global, config).map_err(|e| e.to_string())?;
    let bits = |s: &UniformBSpline, n: usize| -> Vec<[u64; 3]> {
        s.control_points()[..n].iter().map(|p| [p.x.to_bits(), p.y.to_bits(), p.z.to_bits()]).collect()
    };
    for _ in 0..ticks {
        let before = bits(r.spline(), r.num_frozen());
        let Some((command, _)) = r.tick(&world) else { break };
        let after = bits(r.spline(), before.len());
        if before != after {
            return Err(format!("frozen control points changed at tick {}", command.tick));
        }
        let p = r.spline().control_points()[r.num_frozen() - 1];
        if [p.x, p.y, p.z] != command.point {
            return Err(format!("command of tick {} is not the newly frozen point", command.tick));
        }
        let committed = r.committed_trajectory();
        for i in 1..committed.num_segments() {
            for d in 0..=4 {
                let a = committed.evaluate_segment(i - 1, 1.0, d);
                let b = committed.evaluate_segment(i, 0.0, d);
                if (a - b).norm() > 1e-9 * a.norm().max(1.0) {
                    return Err(format!("derivative {d} jumps at knot {i}: {a:?} vs {b:?}"));
                }
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------- episodes

pub struct AvoidanceOutcome {
    pub result: mavplan::sim::EpisodeResult,
    /// Largest distance from the reference line over samples more than
    /// `far` meters from the obstacle surface.
    pub far_deviation: f64,
    pub far_samples: usize,
}

/// Flies the default single-obstacle scene with the default configuration.
pub fn single_obstacle_run(far: f64) -> AvoidanceOutcome {
    let scenario = mavplan::sim::Scenario::default();
    let config = mavplan::sim::EpisodeConfig::default();
    let (world, global) = scenario.build(config.speed).unwrap();
    let result = mavplan::sim::run_episode(&world, &global, &config).unwrap();
    let (a, b) = (global.start(), global.goal());
    let dir = (b - a).normalize();
    let off_line = |p: Point3| {
        let v = p - a;
        (v - dir * v.dot(&dir)).norm()
    };
    let far_points: Vec<f64> =
        result.path.iter().filter(|s| s.clearance > far).map(|s| off_line(Point3::new(s.x, s.y, s.z))).collect();
    AvoidanceOutcome {
        far_deviation: far_points.iter().copied().fold(0.0, f64::max),
        far_samples: far_points.len(),
        result,
    }
}
