//! Exact-rational basis matrices for uniform B-splines.
//!
//! `M_k` maps the six (in general `k`) control points of a segment onto the
//! coefficients of the power basis `[1, u, u², …]`. It is derived here from the
//! De Boor–Cox recursion instead of being written down, and then converted to
//! `f64` once for evaluation.

use std::fmt;
use std::sync::LazyLock;

use nalgebra::{Matrix6, RowVector6};
use num::{BigInt, BigRational, One, ToPrimitive, Zero};

use crate::error::{param, Result};

pub const MIN_ORDER: usize = 2;
pub const MAX_ORDER: usize = 12;

/// Polynomial in the local segment time `u`, lowest power first.
type Poly = Vec<BigRational>;

fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// Pieces of the cardinal B-spline of the given order with integer knots
/// `0, 1, …, order`. Piece `q` covers `[q, q + 1)` and is expressed in
/// `u = s - q`.
fn cardinal_pieces(order: usize) -> Vec<Poly> {
    let mut pieces: Vec<Poly> = vec![vec![BigRational::one()]];
    for m in 2..=order {
        let denom = rat(m as i64 - 1);
        let mut next = vec![vec![BigRational::zero(); m]; m];
        for (q, out) in next.iter_mut().enumerate() {
            // B_m(s) = s/(m-1) B_{m-1}(s) + (m-s)/(m-1) B_{m-1}(s-1), s = q + u
            if q < m - 1 {
                let lin = [rat(q as i64) / &denom, BigRational::one() / &denom];
                mul_acc(out, &pieces[q], &lin);
            }
            if q >= 1 {
                let lin = [rat((m - q) as i64) / &denom, -BigRational::one() / &denom];
                mul_acc(out, &pieces[q - 1], &lin);
            }
        }
        pieces = next;
    }
    pieces
}

/// `out += poly * (lin[0] + lin[1] u)`.
fn mul_acc(out: &mut Poly, poly: &Poly, lin: &[BigRational; 2]) {
    for (j, c) in poly.iter().enumerate() {
        out[j] += c * &lin[0];
        out[j + 1] += c * &lin[1];
    }
}

/// Matrix form of the uniform B-spline basis of order `k` (degree `k - 1`).
///
/// Row `j` holds the coefficients of `u^j`; column `w` belongs to the `w`-th
/// control point of the segment's support window.
#[derive(Clone, PartialEq, Eq)]
pub struct BasisMatrix {
    order: usize,
    entries: Vec<Vec<BigRational>>,
}

impl BasisMatrix {
    pub fn new(order: usize) -> Result<Self> {
        if !(MIN_ORDER..=MAX_ORDER).contains(&order) {
            return Err(param(format!("basis order {order} outside [{MIN_ORDER}, {MAX_ORDER}]")));
        }
        let pieces = cardinal_pieces(order);
        let entries = (0..order).map(|j| (0..order).map(|w| pieces[order - 1 - w][j].clone()).collect()).collect();
        Ok(Self { order, entries })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn entry(&self, row: usize, col: usize) -> &BigRational {
        &self.entries[row][col]
    }

    pub fn rows(&self) -> &[Vec<BigRational>] {
        &self.entries
    }

    pub fn to_f64(&self) -> Vec<Vec<f64>> {
        self.entries.iter().map(|row| row.iter().map(to_f64).collect()).collect()
    }
}

impl fmt::Debug for BasisMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BasisMatrix")
            .field("order", &self.order)
            .field(
                "entries",
                &self.entries.iter().map(|r| r.iter().map(|c| c.to_string()).collect::<Vec<_>>()).collect::<Vec<_>>(),
            )
            .finish()
    }
}

/// Generic `M_k` through the De Boor–Cox recursion.
pub fn basis_matrix(order: usize) -> Result<BasisMatrix> {
    BasisMatrix::new(order)
}

fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().expect("rational basis entries are finite")
}

/// `d!/(d-order)!` style falling factorial `n (n-1) … (n-k+1)`.
pub(crate) fn falling(n: usize, k: usize) -> u64 {
    (0..k).map(|i| (n - i) as u64).product()
}

/// Closed-form quadratic form of a squared time derivative over one segment
/// of a quintic uniform B-spline.
///
/// The stored matrix is the Hessian form `2 ∫₀¹ b(u) b(u)ᵀ du / Δt^(2i-1)`,
/// where `b` is the `i`-th derivative of the power basis. With it the segment
/// integral of `|p⁽ⁱ⁾|²` is `½ cᵀ M₆ᵀ Q M₆ c` and its gradient is `M₆ᵀ Q M₆ c`.
#[derive(Clone, PartialEq)]
pub struct QuadraticCostMatrix {
    derivative_order: usize,
    dt: f64,
    inner: Vec<Vec<BigRational>>,
}

impl QuadraticCostMatrix {
    pub fn new(derivative_order: usize, dt: f64) -> Result<Self> {
        if !(1..=5).contains(&derivative_order) {
            return Err(param(format!("derivative order {derivative_order} outside [1, 5]")));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(param(format!("knot spacing must be positive, got {dt}")));
        }
        let i = derivative_order;
        let mut inner = vec![vec![BigRational::zero(); 6]; 6];
        for a in i..6 {
            for b in i..6 {
                let ca = falling(a, i) as i64;
                let cb = falling(b, i) as i64;
                let power = (a - i + b - i + 1) as i64;
                inner[a][b] = rat(2 * ca * cb) / rat(power);
            }
        }
        Ok(Self { derivative_order, dt, inner })
    }

    pub fn derivative_order(&self) -> usize {
        self.derivative_order
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// The exact matrix before the `1/Δt^(2i-1)` scaling.
    pub fn inner(&self) -> &[Vec<BigRational>] {
        &self.inner
    }

    pub fn scale(&self) -> f64 {
        self.dt.powi(-(2 * self.derivative_order as i32 - 1))
    }

    pub fn matrix(&self) -> Matrix6<f64> {
        let s = self.scale();
        Matrix6::from_fn(|r, c| to_f64(&self.inner[r][c]) * s)
    }

    /// `M₆ᵀ Q M₆`, the Hessian of the segment cost in the control points.
    pub fn control_hessian(&self) -> Matrix6<f64> {
        let m = *M6;
        m.transpose() * self.matrix() * m
    }
}

impl fmt::Debug for QuadraticCostMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("QuadraticCostMatrix")
            .field("derivative_order", &self.derivative_order)
            .field("dt", &self.dt)
            .field("matrix", &self.matrix())
            .finish()
    }
}

pub fn quadratic_cost_matrix(derivative_order: usize, dt: f64) -> Result<QuadraticCostMatrix> {
    QuadraticCostMatrix::new(derivative_order, dt)
}

/// `M₆` in floating point.
pub static M6: LazyLock<Matrix6<f64>> = LazyLock::new(|| {
    let m = BasisMatrix::new(6).expect("order 6 is in range").to_f64();
    Matrix6::from_fn(|r, c| m[r][c])
});

/// Weights of the six support control points for the `d`-th derivative with
/// respect to `u` at local time `u`.
///
/// The caller applies `1/Δt^d`. The weights are also the Jacobian of the
/// evaluated value with respect to each support control point.
pub fn basis_weights(u: f64, deriv_order: usize) -> RowVector6<f64> {
    if deriv_order > 5 {
        return RowVector6::zeros();
    }
    let mut row = RowVector6::zeros();
    let mut pow = 1.0;
    for j in deriv_order..6 {
        row[j] = falling(j, deriv_order) as f64 * pow;
        pow *= u;
    }
    row * *M6
}
