//! Uniform quintic B-spline trajectories.
//!
//! Control points are stored 0-based. Segment `i` covers
//! `[t0 + i·Δt, t0 + (i+1)·Δt)` and is supported by the storage window
//! `i..=i+5`, which corresponds to `p_{i-2} … p_{i+3}` when knots are numbered
//! from the start of the segment. A control point `j` therefore sits at the
//! knot time `t0 + (j - 2)·Δt`, the centre of its support.

mod basis;
pub mod io;

use nalgebra::Vector6;

pub use basis::{
    basis_matrix, basis_weights, quadratic_cost_matrix, BasisMatrix, QuadraticCostMatrix, M6, MAX_ORDER, MIN_ORDER,
};

use crate::error::{domain, param, Result};
use crate::Point3;

pub const DEGREE: usize = 5;
pub const ORDER: usize = DEGREE + 1;

#[derive(Debug, Clone, PartialEq)]
pub struct UniformBSpline {
    control_points: Vec<Point3>,
    dt: f64,
    t0: f64,
}

impl UniformBSpline {
    pub fn new(control_points: Vec<Point3>, dt: f64, t0: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(param(format!("knot spacing must be positive, got {dt}")));
        }
        if !t0.is_finite() {
            return Err(param("start time must be finite"));
        }
        Ok(Self { control_points, dt, t0 })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn degree(&self) -> usize {
        DEGREE
    }

    pub fn control_points(&self) -> &[Point3] {
        &self.control_points
    }

    pub fn len(&self) -> usize {
        self.control_points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.control_points.is_empty()
    }

    pub fn set_control_point(&mut self, j: usize, p: Point3) {
        self.control_points[j] = p;
    }

    /// Appends a control point; the evaluable range grows by one `Δt` and
    /// existing segments are untouched.
    pub fn push_control_point(&mut self, p: Point3) {
        self.control_points.push(p);
    }

    /// Drops every control point from index `len` on.
    pub fn truncate(&mut self, len: usize) {
        self.control_points.truncate(len);
    }

    pub fn num_segments(&self) -> usize {
        self.control_points.len().saturating_sub(DEGREE)
    }

    pub fn t_end(&self) -> f64 {
        self.t0 + self.num_segments() as f64 * self.dt
    }

    /// Time of the `i`-th knot (start of segment `i`).
    pub fn knot_time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt
    }

    /// Time associated with control point `j`.
    pub fn control_point_time(&self, j: usize) -> f64 {
        self.t0 + (j as f64 - 2.0) * self.dt
    }

    /// Segment containing `t` and the local time `u` within it.
    ///
    /// `t == t_end()` maps to the last segment with `u = 1`, the limit from
    /// the left.
    pub fn segment_index(&self, t: f64) -> Result<(usize, f64)> {
        let segments = self.num_segments();
        if segments == 0 {
            return Err(domain(format!("spline with {} control points has no full segment", self.len())));
        }
        if !(t >= self.t0 && t <= self.t_end()) {
            return Err(domain(format!("t = {t} outside [{}, {}]", self.t0, self.t_end())));
        }
        let s = (t - self.t0) / self.dt;
        let i = (s.floor() as usize).min(segments - 1);
        Ok((i, s - i as f64))
    }

    /// The six control points supporting segment `i`.
    pub fn support(&self, i: usize) -> &[Point3] {
        &self.control_points[i..i + ORDER]
    }

    /// `d`-th time derivative at local time `u` of segment `i`.
    pub fn evaluate_segment(&self, i: usize, u: f64, deriv_order: usize) -> Point3 {
        if deriv_order > DEGREE {
            return Point3::zeros();
        }
        let w = basis_weights(u, deriv_order);
        let mut p = Point3::zeros();
        for (wk, c) in w.iter().zip(self.support(i)) {
            p += *wk * c;
        }
        p * self.dt.powi(-(deriv_order as i32))
    }

    pub fn evaluate(&self, t: f64, deriv_order: usize) -> Result<Point3> {
        let (i, u) = self.segment_index(t)?;
        Ok(self.evaluate_segment(i, u, deriv_order))
    }

    /// Closed-form `∫ |p⁽ᵒʳᵈᵉʳ⁾(t)|² dt` over segment `i` and its gradient
    /// with respect to the six support control points.
    pub fn segment_quadratic_cost(&self, i: usize, deriv_order: usize) -> Result<(f64, [Point3; ORDER])> {
        let q = QuadraticCostMatrix::new(deriv_order, self.dt)?;
        self.segment_quadratic_cost_with(i, &q.control_hessian())
    }

    /// Same as [`segment_quadratic_cost`](Self::segment_quadratic_cost) with a
    /// precomputed `M₆ᵀ Q M₆`.
    pub fn segment_quadratic_cost_with(
        &self,
        i: usize,
        hessian: &nalgebra::Matrix6<f64>,
    ) -> Result<(f64, [Point3; ORDER])> {
        if i >= self.num_segments() {
            return Err(domain(format!("segment {i} not supported ({} segments)", self.num_segments())));
        }
        let support = self.support(i);
        let mut cost = 0.0;
        let mut grad = [Point3::zeros(); ORDER];
        for axis in 0..3 {
            let c = Vector6::from_fn(|r, _| support[r][axis]);
            let hc = hessian * c;
            cost += 0.5 * c.dot(&hc);
            for (g, v) in grad.iter_mut().zip(hc.iter()) {
                g[axis] = *v;
            }
        }
        Ok((cost, grad))
    }
}
