//! Real-time local trajectory replanning for micro aerial vehicles.
//!
//! The crate is organised bottom-up:
//!
//! - [`bspline`]: uniform quintic B-splines in matrix form, time derivatives,
//!   closed-form integrals of squared derivatives and control-point Jacobians.
//! - [`ringbuffer`]: a robocentric 3D circular buffer holding occupancy
//!   log-odds, with bitwise addressing and raycast-based point cloud insertion.
//! - [`edt`]: separable Euclidean distance transform of the occupancy buffer
//!   and trilinear distance / gradient queries.
//! - [`cost`]: the endpoint, collision, quadratic-derivative and soft-limit
//!   cost terms with analytic gradients, and a BFGS minimizer.
//! - [`replanner`]: the receding-horizon loop that commits one control point
//!   per tick.
//! - [`sim`]: a desk-scale simulation harness (random forests, a simulated
//!   depth camera, episodes and benchmarks) driven by the `mavplan` binary.

pub mod bspline;
pub mod cost;
pub mod edt;
mod error;
pub mod replanner;
pub mod ringbuffer;
pub mod sim;

pub use bspline::{BasisMatrix, QuadraticCostMatrix, UniformBSpline};
pub use cost::{
    CostWeights, DerivativeLimits, DistanceQuery, EndpointTarget, OptimizationProblem, OptimizeReport, StopCriteria,
};
pub use edt::DistanceField;
pub use error::{Error, Result};
pub use replanner::{GlobalTrajectory, Replanner, ReplannerConfig};
pub use ringbuffer::{Index3, LogOddsParams, OccupancyMap, RingBuffer3D};

pub type Point3 = nalgebra::Vector3<f64>;
