//! The replanning objective over the free trailing control points of a
//! quintic B-spline:
//!
//! `E = E_endpoint + E_collision + E_quadratic + E_limit`
//!
//! Every term returns its value and the gradient with respect to the free
//! control points. Frozen control points enter the value but receive no
//! gradient. The collision and limit integrals use the midpoint rectangle rule
//! with a fixed number of samples per segment; the quadratic term is exact.

pub mod bfgs;

use nalgebra::{DVector, Matrix6, RowVector6};
use serde::{Deserialize, Serialize};

pub use bfgs::{StopCriteria, Termination};

use crate::bspline::{basis_weights, QuadraticCostMatrix, UniformBSpline, ORDER};
use crate::edt::DistanceField;
use crate::error::{domain, param, Result};
use crate::Point3;

/// Anything that can report the distance to the nearest obstacle and its
/// spatial gradient.
pub trait DistanceQuery {
    fn distance_and_gradient(&self, p: &Point3) -> (f64, Point3);
}

impl DistanceQuery for DistanceField {
    fn distance_and_gradient(&self, p: &Point3) -> (f64, Point3) {
        DistanceField::distance_and_gradient(self, p)
    }
}

/// An empty world.
#[derive(Debug, Clone, Copy, Default)]
pub struct FreeSpace;

impl DistanceQuery for FreeSpace {
    fn distance_and_gradient(&self, _: &Point3) -> (f64, Point3) {
        (f64::INFINITY, Point3::zeros())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CostWeights {
    pub lambda_p: f64,
    pub lambda_v: f64,
    pub lambda_c: f64,
    /// Acceleration, jerk and snap.
    pub lambda_q: [f64; 3],
    pub lambda_l: f64,
}

impl Default for CostWeights {
    fn default() -> Self {
        Self { lambda_p: 10.0, lambda_v: 10.0, lambda_c: 100.0, lambda_q: [0.1; 3], lambda_l: 1.0 }
    }
}

impl CostWeights {
    pub fn zero() -> Self {
        Self { lambda_p: 0.0, lambda_v: 0.0, lambda_c: 0.0, lambda_q: [0.0; 3], lambda_l: 0.0 }
    }

    fn validate(&self) -> Result<()> {
        let all = [self.lambda_p, self.lambda_v, self.lambda_c, self.lambda_l].into_iter().chain(self.lambda_q);
        for w in all {
            if !(w >= 0.0 && w.is_finite()) {
                return Err(param(format!("cost weights must be finite and non-negative: {self:?}")));
            }
        }
        Ok(())
    }
}

/// Bounds on the norms of velocity, acceleration, jerk and snap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DerivativeLimits {
    pub max: [f64; 4],
    pub enabled: [bool; 4],
}

impl Default for DerivativeLimits {
    fn default() -> Self {
        Self { max: [2.0, 5.0, 20.0, 100.0], enabled: [true; 4] }
    }
}

impl DerivativeLimits {
    pub fn scaled(&self, factor: f64) -> Self {
        Self { max: self.max.map(|m| m * factor), enabled: self.enabled }
    }

    fn validate(&self) -> Result<()> {
        if self.max.iter().any(|m| !(*m > 0.0)) {
            return Err(param(format!("derivative limits must be positive: {:?}", self.max)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EndpointTarget {
    pub t_ep: f64,
    pub position: Point3,
    pub velocity: Point3,
}

/// Everything about the objective except the spline and the target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CostConfig {
    pub weights: CostWeights,
    pub limits: DerivativeLimits,
    /// Collision distance threshold `τ` in meters.
    pub tau: f64,
    pub samples_per_segment: usize,
}

impl Default for CostConfig {
    fn default() -> Self {
        Self { weights: CostWeights::default(), limits: DerivativeLimits::default(), tau: 0.5, samples_per_segment: 10 }
    }
}

/// Exponent at which the soft-limit penalty switches to its linear
/// continuation.
pub const LIMIT_EXPONENT_CAP: f64 = 20.0;

/// Soft-limit penalty `exp(x² - max²) - 1` above the limit and its derivative
/// in `x`.
pub fn limit_penalty(x: f64, max: f64) -> (f64, f64) {
    if x <= max {
        return (0.0, 0.0);
    }
    let e = x * x - max * max;
    if e <= LIMIT_EXPONENT_CAP {
        let ex = e.exp();
        (ex - 1.0, ex * 2.0 * x)
    } else {
        let ec = LIMIT_EXPONENT_CAP.exp();
        (ec * (1.0 + e - LIMIT_EXPONENT_CAP) - 1.0, ec * 2.0 * x)
    }
}

/// Per-point collision cost `(d - τ)² / 2τ` inside the threshold and its
/// derivative in `d`.
pub fn collision_point_cost(d: f64, tau: f64) -> (f64, f64) {
    if d > tau {
        (0.0, 0.0)
    } else {
        ((d - tau).powi(2) / (2.0 * tau), (d - tau) / tau)
    }
}

/// Value and gradient over the free control points.
#[derive(Debug, Clone, PartialEq)]
pub struct CostTerm {
    pub value: f64,
    pub gradient: Vec<Point3>,
}

impl CostTerm {
    fn zero(n: usize) -> Self {
        Self { value: 0.0, gradient: vec![Point3::zeros(); n] }
    }

    fn add(&mut self, other: &CostTerm) {
        self.value += other.value;
        for (g, o) in self.gradient.iter_mut().zip(&other.gradient) {
            *g += o;
        }
    }

    pub fn gradient_vector(&self) -> DVector<f64> {
        DVector::from_iterator(self.gradient.len() * 3, self.gradient.iter().flat_map(|g| g.iter().copied()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostBreakdown {
    pub endpoint: CostTerm,
    pub collision: CostTerm,
    pub quadratic: CostTerm,
    pub limit: CostTerm,
    pub total: CostTerm,
}

/// Basis weights for one sample position inside a segment, derivative
/// orders 0 to 4, not yet divided by `Δt^d`.
#[derive(Debug, Clone)]
struct SampleWeights {
    u: f64,
    w: [RowVector6<f64>; 5],
}

pub struct OptimizationProblem<'a> {
    spline: UniformBSpline,
    num_free: usize,
    field: &'a dyn DistanceQuery,
    config: CostConfig,
    target: EndpointTarget,
    first_segment: usize,
    hessians: [Matrix6<f64>; 3],
    samples: Vec<SampleWeights>,
}

impl<'a> OptimizationProblem<'a> {
    /// The last `num_free` control points of `spline` are optimized. The
    /// integration window covers every segment influenced by a free point.
    pub fn new(
        spline: UniformBSpline,
        num_free: usize,
        field: &'a dyn DistanceQuery,
        config: CostConfig,
        target: EndpointTarget,
    ) -> Result<Self> {
        if num_free == 0 || num_free > spline.len() {
            return Err(param(format!("free control points must be in [1, {}], got {num_free}", spline.len())));
        }
        if spline.num_segments() == 0 {
            return Err(domain("spline has no full segment"));
        }
        if !(config.tau > 0.0) {
            return Err(param(format!("collision threshold must be positive, got {}", config.tau)));
        }
        if config.samples_per_segment == 0 {
            return Err(param("need at least one sample per segment"));
        }
        config.weights.validate()?;
        config.limits.validate()?;
        spline.segment_index(target.t_ep)?;
        let first_free = spline.len() - num_free;
        let first_segment = first_free.saturating_sub(ORDER - 1);
        let hessians = [2, 3, 4]
            .map(|i| QuadraticCostMatrix::new(i, spline.dt()).expect("orders 2..4 are valid").control_hessian());
        let m = config.samples_per_segment;
        let samples = (0..m)
            .map(|k| {
                let u = (k as f64 + 0.5) / m as f64;
                SampleWeights { u, w: [0, 1, 2, 3, 4].map(|d| basis_weights(u, d)) }
            })
            .collect();
        Ok(Self { spline, num_free, field, config, target, first_segment, hessians, samples })
    }

    pub fn spline(&self) -> &UniformBSpline {
        &self.spline
    }

    pub fn into_spline(self) -> UniformBSpline {
        self.spline
    }

    pub fn num_free(&self) -> usize {
        self.num_free
    }

    pub fn first_free(&self) -> usize {
        self.spline.len() - self.num_free
    }

    pub fn config(&self) -> &CostConfig {
        &self.config
    }

    pub fn target(&self) -> &EndpointTarget {
        &self.target
    }

    /// Integration window `[t_min, t_max]`.
    pub fn window(&self) -> (f64, f64) {
        (self.spline.knot_time(self.first_segment), self.spline.t_end())
    }

    pub fn segments(&self) -> std::ops::Range<usize> {
        self.first_segment..self.spline.num_segments()
    }

    /// Sample times of the rectangle rule and the step `δt`.
    pub fn sample_times(&self) -> (Vec<f64>, f64) {
        let dt = self.spline.dt();
        let times = self
            .segments()
            .flat_map(|i| self.samples.iter().map(move |s| self.spline.knot_time(i) + s.u * dt))
            .collect();
        (times, dt / self.samples.len() as f64)
    }

    pub fn free_vector(&self) -> DVector<f64> {
        let pts = &self.spline.control_points()[self.first_free()..];
        DVector::from_iterator(3 * pts.len(), pts.iter().flat_map(|p| p.iter().copied()))
    }

    pub fn set_free_vector(&mut self, x: &DVector<f64>) {
        assert_eq!(x.len(), 3 * self.num_free);
        let f = self.first_free();
        for k in 0..self.num_free {
            self.spline.set_control_point(f + k, Point3::new(x[3 * k], x[3 * k + 1], x[3 * k + 2]));
        }
    }

    #[inline]
    fn accumulate(&self, grad: &mut [Point3], segment: usize, weights: &RowVector6<f64>, v: &Point3) {
        let f = self.first_free();
        for (m, w) in weights.iter().enumerate() {
            let j = segment + m;
            if j >= f {
                grad[j - f] += *w * v;
            }
        }
    }

    fn eval(s: &UniformBSpline, segment: usize, w: &RowVector6<f64>, scale: f64) -> Point3 {
        let mut p = Point3::zeros();
        for (wk, c) in w.iter().zip(s.support(segment)) {
            p += *wk * c;
        }
        p * scale
    }

    pub fn endpoint_cost(&self) -> CostTerm {
        self.endpoint_cost_of(&self.spline)
    }

    pub fn collision_cost(&self) -> CostTerm {
        self.collision_cost_of(&self.spline)
    }

    pub fn quadratic_cost(&self) -> CostTerm {
        self.quadratic_cost_of(&self.spline)
    }

    pub fn limit_cost(&self) -> CostTerm {
        self.limit_cost_of(&self.spline)
    }

    pub fn total_cost(&self) -> CostTerm {
        self.total_cost_of(&self.spline)
    }

    fn endpoint_cost_of(&self, s: &UniformBSpline) -> CostTerm {
        let mut term = CostTerm::zero(self.num_free);
        let CostWeights { lambda_p, lambda_v, .. } = self.config.weights;
        let (i, u) = s.segment_index(self.target.t_ep).expect("checked in new");
        let dt = s.dt();
        let w0 = basis_weights(u, 0);
        let w1 = basis_weights(u, 1) / dt;
        let ep = Self::eval(s, i, &w0, 1.0) - self.target.position;
        let ev = Self::eval(s, i, &w1, 1.0) - self.target.velocity;
        term.value = lambda_p * ep.norm_squared() + lambda_v * ev.norm_squared();
        self.accumulate(&mut term.gradient, i, &w0, &(2.0 * lambda_p * ep));
        self.accumulate(&mut term.gradient, i, &w1, &(2.0 * lambda_v * ev));
        term
    }

    fn collision_cost_of(&self, s: &UniformBSpline) -> CostTerm {
        let mut term = CostTerm::zero(self.num_free);
        let lambda = self.config.weights.lambda_c;
        if lambda == 0.0 {
            return term;
        }
        let tau = self.config.tau;
        let dt = s.dt();
        let step = dt / self.samples.len() as f64;
        for i in self.segments() {
            for sw in &self.samples {
                let p = Self::eval(s, i, &sw.w[0], 1.0);
                let (d, grad_d) = self.field.distance_and_gradient(&p);
                let (c, dc) = collision_point_cost(d, tau);
                if c == 0.0 && dc == 0.0 {
                    continue;
                }
                let v = Self::eval(s, i, &sw.w[1], 1.0 / dt);
                let speed = v.norm();
                term.value += c * speed * step;
                self.accumulate(&mut term.gradient, i, &sw.w[0], &(lambda * step * speed * dc * grad_d));
                if speed > 0.0 {
                    let dir = v / speed;
                    self.accumulate(&mut term.gradient, i, &sw.w[1], &(lambda * step * c / dt * dir));
                }
            }
        }
        term.value *= lambda;
        term
    }

    fn quadratic_cost_of(&self, s: &UniformBSpline) -> CostTerm {
        let mut term = CostTerm::zero(self.num_free);
        let f = self.first_free();
        for (h, &lambda) in self.hessians.iter().zip(&self.config.weights.lambda_q) {
            if lambda == 0.0 {
                continue;
            }
            for i in self.segments() {
                let (c, g) = s.segment_quadratic_cost_with(i, h).expect("window segments are supported");
                term.value += lambda * c;
                for (m, gm) in g.iter().enumerate() {
                    if i + m >= f {
                        term.gradient[i + m - f] += lambda * gm;
                    }
                }
            }
        }
        term
    }

    fn limit_cost_of(&self, s: &UniformBSpline) -> CostTerm {
        let mut term = CostTerm::zero(self.num_free);
        let lambda = self.config.weights.lambda_l;
        if lambda == 0.0 {
            return term;
        }
        let limits = self.config.limits;
        let dt = s.dt();
        let step = dt / self.samples.len() as f64;
        for i in self.segments() {
            for sw in &self.samples {
                for k in 1..=4 {
                    if !limits.enabled[k - 1] {
                        continue;
                    }
                    let scale = dt.powi(-(k as i32));
                    let x = Self::eval(s, i, &sw.w[k], scale);
                    let n = x.norm();
                    let (l, dl) = limit_penalty(n, limits.max[k - 1]);
                    if l == 0.0 && dl == 0.0 {
                        continue;
                    }
                    term.value += l * step;
                    self.accumulate(&mut term.gradient, i, &sw.w[k], &(lambda * step * dl * scale / n * x));
                }
            }
        }
        term.value *= lambda;
        term
    }

    fn total_cost_of(&self, s: &UniformBSpline) -> CostTerm {
        let mut total = self.endpoint_cost_of(s);
        total.add(&self.collision_cost_of(s));
        total.add(&self.quadratic_cost_of(s));
        total.add(&self.limit_cost_of(s));
        total
    }

    pub fn breakdown(&self) -> CostBreakdown {
        let endpoint = self.endpoint_cost();
        let collision = self.collision_cost();
        let quadratic = self.quadratic_cost();
        let limit = self.limit_cost();
        let mut total = CostTerm::zero(self.num_free);
        for t in [&endpoint, &collision, &quadratic, &limit] {
            total.add(t);
        }
        CostBreakdown { endpoint, collision, quadratic, limit, total }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizeReport {
    pub iterations: usize,
    pub evaluations: usize,
    pub initial_cost: f64,
    pub final_cost: f64,
    pub converged: bool,
    pub termination: Termination,
}

impl OptimizeReport {
    pub fn aborted(&self) -> bool {
        matches!(self.termination, Termination::NonFinite(_))
    }
}

/// Minimizes the total cost over the free control points with BFGS and
/// writes the best iterate back into the problem's spline.
pub fn optimize(problem: &mut OptimizationProblem<'_>, stop: &StopCriteria) -> OptimizeReport {
    let x0 = problem.free_vector();
    let first_free = problem.first_free();
    let mut scratch = problem.spline.clone();
    let result = bfgs::minimize(
        x0,
        |x| {
            for k in 0..problem.num_free {
                scratch.set_control_point(first_free + k, Point3::new(x[3 * k], x[3 * k + 1], x[3 * k + 2]));
            }
            let c = problem.total_cost_of(&scratch);
            (c.value, c.gradient_vector())
        },
        stop,
    );
    problem.set_free_vector(&result.x);
    OptimizeReport {
        iterations: result.iterations,
        evaluations: result.evaluations,
        initial_cost: result.initial_value,
        final_cost: result.value,
        converged: result.termination.converged(),
        termination: result.termination,
    }
}
