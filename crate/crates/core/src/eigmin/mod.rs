//! Minimum-eigenvalue estimation by the Lanczos method.
//!
//! The estimator runs Lanczos on `U I - A`, where `U` is the operator's
//! cheap norm bound, and turns the top Ritz pair of that shifted matrix into
//! an approximate bottom eigenpair of `A`. The iteration budget is the
//! randomized worst-case bound
//!
//! ```text
//! min { n, ceil( log(n / delta^2) / (2 sqrt 2) * sqrt(U / epsilon) ) }
//! ```
//!
//! which, for a start vector drawn uniformly from the unit sphere, yields
//! `theta <= lambda_min + epsilon` with probability at least `1 - delta`.
//! The loop exits earlier once the Ritz residual drops below
//! `epsilon * max(1, |theta|)`.

pub mod tridiag;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{CrsError, Result};
use crate::linalg::{axpy, dot, norm, scale};
use crate::operators::LinearOperator;

/// Approximate bottom eigenpair.
#[derive(Debug, Clone)]
pub struct EigEstimate {
    /// Rayleigh quotient `v' A v` of the returned vector.
    pub theta: f64,
    /// Unit vector.
    pub v: Vec<f64>,
    /// Lanczos steps taken (one product each).
    pub iterations: usize,
    /// Requested accuracy.
    pub epsilon: f64,
    /// Ritz residual estimate at exit.
    pub residual: f64,
    /// Whether the residual test fired before the iteration cap.
    pub converged: bool,
}

/// Worst-case iteration count for accuracy `epsilon` with failure
/// probability `delta` on an `n`-dimensional operator with norm bound
/// `norm_bound`.
pub fn lanczos_iteration_cap(n: usize, norm_bound: f64, epsilon: f64, delta: f64) -> usize {
    if n == 0 {
        return 0;
    }
    let raw = ((n as f64) / (delta * delta)).ln() / (2.0 * std::f64::consts::SQRT_2)
        * (norm_bound / epsilon).sqrt();
    let raw = raw.ceil();
    let cap = if raw.is_finite() && raw < n as f64 {
        raw as usize
    } else {
        n
    };
    cap.clamp(1, n)
}

/// Estimates the minimum eigenvalue of `op` and a unit vector achieving it.
///
/// Deterministic in `(op, epsilon, delta, seed)`.
pub fn lanczos_min_eig<O>(op: &O, epsilon: f64, delta: f64, seed: u64) -> Result<EigEstimate>
where
    O: LinearOperator + ?Sized,
{
    let cap = lanczos_iteration_cap(op.dim(), op.norm_upper_bound(), epsilon, delta);
    lanczos_min_eig_capped(op, epsilon, delta, seed, cap)
}

/// As [`lanczos_min_eig`] with an explicit iteration cap (clamped to `n`).
pub fn lanczos_min_eig_capped<O>(
    op: &O,
    epsilon: f64,
    delta: f64,
    seed: u64,
    max_iter: usize,
) -> Result<EigEstimate>
where
    O: LinearOperator + ?Sized,
{
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(CrsError::InvalidArgument(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(CrsError::InvalidArgument(format!(
            "delta must lie in (0, 1), got {delta}"
        )));
    }
    let n = op.dim();
    if n == 0 {
        return Err(CrsError::InvalidArgument("operator has dimension 0".into()));
    }
    let cap = max_iter.clamp(1, n);
    let u = op.norm_upper_bound();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut q: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    let q_norm = norm(&q);
    scale(1.0 / q_norm, &mut q);

    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(cap);
    let mut alpha: Vec<f64> = Vec::with_capacity(cap);
    let mut beta: Vec<f64> = Vec::with_capacity(cap);
    let mut w = vec![0.0; n];
    let breakdown = 1e-14 * u.max(1.0);

    let mut ritz = (0.0, vec![1.0]);
    let mut residual = f64::INFINITY;
    let mut converged = false;

    for j in 0..cap {
        // w = (U I - A) q_j
        op.apply_into(&q, &mut w)?;
        for (wi, qi) in w.iter_mut().zip(&q) {
            *wi = u * qi - *wi;
        }
        let a_j = dot(&w, &q);
        axpy(-a_j, &q, &mut w);
        if j > 0 {
            axpy(-beta[j - 1], &basis[j - 1], &mut w);
        }
        basis.push(std::mem::take(&mut q));
        // Two Gram-Schmidt sweeps against the whole basis.
        for _ in 0..2 {
            for b in &basis {
                let c = dot(&w, b);
                axpy(-c, b, &mut w);
            }
        }
        alpha.push(a_j);
        let b_j = norm(&w);
        beta.push(b_j);

        let mu = tridiag::largest_eigenvalue(&alpha, &beta);
        let y = tridiag::eigenvector(&alpha, &beta, mu);
        residual = b_j * y[j].abs();
        let theta_est = u - mu;
        ritz = (mu, y);

        if residual <= epsilon * theta_est.abs().max(1.0) || b_j <= breakdown {
            converged = true;
            break;
        }
        if j + 1 < cap {
            q = w.iter().map(|x| x / b_j).collect();
        }
    }

    let iterations = alpha.len();
    let y = ritz.1;
    let mut v = vec![0.0; n];
    for (coef, b) in y.iter().zip(&basis) {
        axpy(*coef, b, &mut v);
    }
    let v_norm = norm(&v);
    scale(1.0 / v_norm, &mut v);
    let av = op.apply(&v)?;
    let theta = dot(&v, &av);

    Ok(EigEstimate {
        theta,
        v,
        iterations,
        epsilon,
        residual,
        converged,
    })
}
