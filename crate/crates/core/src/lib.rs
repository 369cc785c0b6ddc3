//! Solvers for the cubic regularization subproblem
//!
//! ```text
//! min_x  1/2 x'Ax + b'x + rho/3 |x|^3
//! ```
//!
//! through a lifted convex reformulation: exact projections onto the
//! lifted feasible set, Lanczos minimum-eigenvalue estimation, projected
//! first-order methods (accelerated projected gradient and projected
//! Barzilai-Borwein), recovery of a subproblem solution from the lifted
//! one, an adaptive cubic regularization outer loop, and a synthetic
//! benchmark generator.

pub mod error;
pub mod linalg;
pub mod operators;
pub mod eigmin;
pub mod projections;
pub mod model;
pub mod solvers;
pub mod arc;
pub mod bench;

#[cfg(test)]
mod proptests;

pub use error::{CrsError, Result};
pub use operators::{LinearOperator, SymmetricOperator};
pub use projections::LiftedPoint;
pub use model::{CrsProblem, SurrogateSpec, Variant};
