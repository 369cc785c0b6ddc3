//! Euclidean projections onto the lifted feasible sets
//!
//! ```text
//! S     = { (x, y) : |x|^2 <= y }
//! B(l)  = { (x, y) : |x|^2 <= y, y >= l }
//! ```
//!
//! Projecting an infeasible `(x0, y0)` onto `S` reduces to the scalar
//! multiplier `mu > 0` solving `|x0|^2 / (1 + mu)^2 = y0 + mu / 2`, i.e. the
//! root of the cubic
//!
//! ```text
//! h(mu) = mu^3 / 2 + (y0 + 1) mu^2 + (2 y0 + 1/2) mu - |x0|^2 + y0
//! ```
//!
//! on `[max(0, -2 y0), inf)`, where `h' >= 1/2` so the root is unique. The
//! projection is then `(x0 / (1 + mu), y0 + mu / 2)`, an O(n) operation.

use crate::error::{CrsError, Result};
use crate::linalg::norm_sq;

/// A point `(x, y)` of the lifted space `R^n x R`.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedPoint {
    pub x: Vec<f64>,
    pub y: f64,
}

impl LiftedPoint {
    pub fn new(x: Vec<f64>, y: f64) -> Self {
        Self { x, y }
    }

    /// `(x, |x|^2)`, the point of the boundary of `S` above `x`.
    pub fn on_boundary(x: Vec<f64>) -> Self {
        let y = norm_sq(&x);
        Self { x, y }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    /// `y - |x|^2`; non-negative exactly when the point lies in `S`.
    pub fn slack(&self) -> f64 {
        self.y - norm_sq(&self.x)
    }

    /// Euclidean distance in `R^{n+1}`.
    pub fn distance(&self, other: &LiftedPoint) -> f64 {
        let dx: f64 = self
            .x
            .iter()
            .zip(&other.x)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        (dx + (self.y - other.y).powi(2)).sqrt()
    }
}

/// Root of the cubic written as `mu = lo + nu` with `lo = max(0, -2 y0)`:
///
/// ```text
/// g(nu) = (c + nu/2)(a + nu)^2 - |x0|^2,   c = max(y0, 0),  a = 1 + lo
/// ```
///
/// For `y0 < 0` this removes the cancellation in `y0 + mu/2`, so `nu` (and
/// the projected height `c + nu/2`) keeps full relative accuracy even when
/// `mu` is large. Returns `(lo, nu)`.
fn cubic_offset_root(x0_norm_sq: f64, y0: f64) -> Result<(f64, f64)> {
    if !(x0_norm_sq.is_finite() && y0.is_finite()) {
        return Err(CrsError::InvalidArgument(format!(
            "non-finite input ({x0_norm_sq}, {y0})"
        )));
    }
    if x0_norm_sq <= y0 {
        return Err(CrsError::Precondition(format!(
            "point is already feasible: |x0|^2 = {x0_norm_sq} <= y0 = {y0}"
        )));
    }
    let lo_mu = (-2.0 * y0).max(0.0);
    let c = y0.max(0.0);
    let a = 1.0 + lo_mu;
    let g = |nu: f64| {
        let s = a + nu;
        (c + 0.5 * nu) * s * s - x0_norm_sq
    };
    let dg = |nu: f64| {
        let s = a + nu;
        s * (0.5 * s + 2.0 * c + nu)
    };

    let mut lo = 0.0;
    let g_lo = g(lo);
    if g_lo >= 0.0 {
        // Only when |x0| = 0 and y0 < 0: the root is the left end.
        return Ok((lo_mu, 0.0));
    }
    let mut hi = 1.0;
    while g(hi) <= 0.0 {
        hi *= 2.0;
    }

    // Safeguarded Newton: a Newton step is taken when it stays inside the
    // bracket and shrinks |g|, otherwise the bracket is bisected. Runs until
    // the bracket or the residual can shrink no further.
    let mut nu = lo;
    let mut r = g_lo;
    for _ in 0..500 {
        if r == 0.0 {
            break;
        }
        let newton = nu - r / dg(nu);
        let mut next = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        let mut r_next = g(next);
        if r_next.abs() >= r.abs() && next == newton {
            next = 0.5 * (lo + hi);
            r_next = g(next);
        }
        if next == nu || next <= lo || next >= hi {
            break;
        }
        if r_next < 0.0 {
            lo = next;
        } else {
            hi = next;
        }
        nu = next;
        r = r_next;
    }
    // The bracket ends may carry a smaller residual than the last iterate.
    let best = [lo, hi]
        .into_iter()
        .map(|v| (v, g(v).abs()))
        .fold((nu, r.abs()), |acc, c| if c.1 < acc.1 { c } else { acc });
    Ok((lo_mu, best.0))
}

/// Root of the projection cubic on `[max(0, -2 y0), inf)`.
/// Requires `x0_norm_sq > y0`.
pub fn cubic_mu_root(x0_norm_sq: f64, y0: f64) -> Result<f64> {
    let (lo, nu) = cubic_offset_root(x0_norm_sq, y0)?;
    Ok(lo + nu)
}

/// Projection onto `S`. Points with `|x0|^2 <= y0` are returned unchanged.
pub fn project_s(p: &LiftedPoint) -> LiftedPoint {
    let x0_sq = norm_sq(&p.x);
    if x0_sq <= p.y {
        return p.clone();
    }
    if !(x0_sq.is_finite() && p.y.is_finite()) {
        // Propagate NaN/inf so callers can flag a degenerate run.
        return LiftedPoint {
            x: vec![f64::NAN; p.x.len()],
            y: f64::NAN,
        };
    }
    let (lo, nu) = cubic_offset_root(x0_sq, p.y).expect("infeasible finite input has a root");
    let shrink = 1.0 / ((1.0 + lo) + nu);
    LiftedPoint {
        x: p.x.iter().map(|v| v * shrink).collect(),
        y: p.y.max(0.0) + 0.5 * nu,
    }
}

/// Projection onto `B(l) = S ∩ {y >= l}`.
pub fn project_bhat(p: &LiftedPoint, l: f64) -> Result<LiftedPoint> {
    if !(l >= 0.0) {
        return Err(CrsError::InvalidArgument(format!(
            "lower bound must be non-negative, got {l}"
        )));
    }
    let first = project_s(p);
    if first.y >= l {
        return Ok(first);
    }
    let x0_norm = norm_sq(&p.x).sqrt();
    let root_l = l.sqrt();
    if x0_norm < root_l {
        Ok(LiftedPoint {
            x: p.x.clone(),
            y: l,
        })
    } else {
        let s = root_l / x0_norm;
        Ok(LiftedPoint {
            x: p.x.iter().map(|v| v * s).collect(),
            y: l,
        })
    }
}
