//! Dense BFGS with a backtracking Armijo line search.
//!
//! Iterates are only accepted when they decrease the objective, so the
//! returned point is always the best one seen.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StopCriteria {
    pub max_iterations: usize,
    /// Stop when the gradient 2-norm falls below this.
    pub gradient_tolerance: f64,
    /// Stop when an accepted step decreases the cost by less than this
    /// fraction of its magnitude.
    pub relative_decrease: f64,
}

impl Default for StopCriteria {
    fn default() -> Self {
        Self { max_iterations: 60, gradient_tolerance: 1e-6, relative_decrease: 1e-7 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Termination {
    GradientTolerance,
    RelativeDecrease,
    MaxIterations,
    LineSearchFailed,
    NonFinite(String),
}

impl Termination {
    pub fn converged(&self) -> bool {
        matches!(self, Self::GradientTolerance | Self::RelativeDecrease)
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: DVector<f64>,
    pub value: f64,
    pub initial_value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub termination: Termination,
}

const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 50;

fn finite(f: f64, g: &DVector<f64>) -> bool {
    f.is_finite() && g.iter().all(|v| v.is_finite())
}

pub fn minimize(
    x0: DVector<f64>,
    mut objective: impl FnMut(&DVector<f64>) -> (f64, DVector<f64>),
    stop: &StopCriteria,
) -> Minimum {
    let n = x0.len();
    let mut x = x0;
    let (mut fx, mut g) = objective(&x);
    let mut evaluations = 1;
    let initial_value = fx;
    if !finite(fx, &g) {
        return Minimum {
            x,
            value: fx,
            initial_value,
            iterations: 0,
            evaluations,
            termination: Termination::NonFinite(format!("initial cost {fx}")),
        };
    }
    let mut h = DMatrix::<f64>::identity(n, n);
    let mut scaled = false;
    let mut iterations = 0;
    let mut termination = Termination::MaxIterations;

    while iterations < stop.max_iterations {
        if g.norm() <= stop.gradient_tolerance {
            termination = Termination::GradientTolerance;
            break;
        }
        iterations += 1;
        let mut d = -(&h * &g);
        let mut slope = g.dot(&d);
        if slope >= 0.0 {
            h.fill_with_identity();
            scaled = false;
            d = -g.clone();
            slope = g.dot(&d);
        }
        let mut alpha = if scaled { 1.0 } else { (1.0 / g.norm()).min(1.0) };
        let mut accepted = None;
        let mut saw_non_finite = false;
        for _ in 0..MAX_BACKTRACKS {
            let xn = &x + alpha * &d;
            let (fn_, gn) = objective(&xn);
            evaluations += 1;
            if !finite(fn_, &gn) {
                saw_non_finite = true;
            } else if fn_ <= fx + ARMIJO * alpha * slope {
                accepted = Some((xn, fn_, gn));
                break;
            }
            alpha *= 0.5;
        }
        let Some((xn, fn_, gn)) = accepted else {
            termination = if saw_non_finite {
                Termination::NonFinite("no finite descent step".into())
            } else {
                Termination::LineSearchFailed
            };
            break;
        };
        let s = &xn - &x;
        let y = &gn - &g;
        let decrease = fx - fn_;
        x = xn;
        g = gn;
        let previous = fx;
        fx = fn_;
        if decrease <= stop.relative_decrease * previous.abs().max(f64::MIN_POSITIVE) {
            termination = Termination::RelativeDecrease;
            break;
        }
        let sy = s.dot(&y);
        if sy > 1e-12 * s.norm() * y.norm() {
            if !scaled {
                h = DMatrix::identity(n, n) * (sy / y.dot(&y));
                scaled = true;
            }
            let rho = 1.0 / sy;
            let hy = &h * &y;
            let yhy = y.dot(&hy);
            // H+ = H - ρ(H y sᵀ + s yᵀ H) + (ρ² yᵀHy + ρ) s sᵀ
            h -= rho * (&hy * s.transpose() + &s * hy.transpose());
            h += (rho * rho * yhy + rho) * (&s * s.transpose());
        }
    }
    if termination == Termination::MaxIterations && g.norm() <= stop.gradient_tolerance {
        termination = Termination::GradientTolerance;
    }
    Minimum { x, value: fx, initial_value, iterations, evaluations, termination }
}
