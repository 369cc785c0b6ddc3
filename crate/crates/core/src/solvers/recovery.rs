//! From a lifted solution back to a subproblem solution.
//!
//! A feasible `(x, y)` with `y > |x|^2` is moved onto the boundary along the
//! eigenvector estimate `v`: `x + t v` with `|x + t v|^2 = y`. The two roots
//! have opposite signs, and for either of them
//!
//! ```text
//! f1(x + t v) - F_s(x, y) = t c + t^2/2 (theta + s),   c = v'Ax + b'v + s x'v
//! ```
//!
//! so picking the root with `t c <= 0` keeps the cubic objective within
//! `t^2/2 (theta + s)` of the lifted one.

use crate::error::{check_dim, CrsError, Result};
use crate::linalg::{axpy, dot, norm_sq};
use crate::model::{CrsProblem, SurrogateSpec, Variant};
use crate::operators::LinearOperator;
use crate::projections::LiftedPoint;

/// Eigenvector estimate together with its product `A v`, so recovering many
/// candidates costs no further products.
#[derive(Debug, Clone)]
pub struct Recovery {
    pub v: Vec<f64>,
    pub av: Vec<f64>,
}

impl Recovery {
    /// One product with `A`.
    pub fn new(prob: &CrsProblem, v: &[f64]) -> Result<Self> {
        check_dim(prob.dim(), v.len())?;
        let av = prob.a.apply(v)?;
        Ok(Self { v: v.to_vec(), av })
    }

    /// The multiple `t` of `v` to add to `p.x`; zero when `p` is already on
    /// the boundary or the problem is convex.
    pub fn step(&self, prob: &CrsProblem, spec: &SurrogateSpec, p: &LiftedPoint) -> Result<f64> {
        check_dim(prob.dim(), p.dim())?;
        let xs = norm_sq(&p.x);
        if xs >= p.y - 1e-10 * p.y.abs().max(1.0) || spec.variant == Variant::Convex {
            return Ok(0.0);
        }
        // t^2 + 2 (x'v) t + (|x|^2 - y) = 0
        let xv = dot(&p.x, &self.v);
        let c0 = xs - p.y;
        let disc = xv * xv - c0;
        if !(disc >= 0.0) {
            return Err(CrsError::Internal(format!(
                "negative discriminant {disc}: lifted point is infeasible"
            )));
        }
        let q = -(xv + xv.signum() * disc.sqrt());
        let (r1, r2) = if q == 0.0 { (0.0, 0.0) } else { (q, c0 / q) };
        let (neg, pos) = if r1 < r2 { (r1, r2) } else { (r2, r1) };
        let c = dot(&self.av, &p.x) + dot(&prob.b, &self.v) + spec.shift * xv;
        Ok(if c > 0.0 { neg } else { pos })
    }

    /// Recovered point.
    pub fn recover(&self, prob: &CrsProblem, spec: &SurrogateSpec, p: &LiftedPoint) -> Result<Vec<f64>> {
        let t = self.step(prob, spec, p)?;
        let mut x = p.x.clone();
        axpy(t, &self.v, &mut x);
        Ok(x)
    }
}

/// Moves a feasible lifted point onto the boundary along the unit vector
/// `v`; one product with `A`.
pub fn recover_solution(
    prob: &CrsProblem,
    spec: &SurrogateSpec,
    p: &LiftedPoint,
    v: &[f64],
) -> Result<Vec<f64>> {
    Recovery::new(prob, v)?.recover(prob, spec, p)
}
