//! Dense reference solver for small instances.
//!
//! A global minimizer satisfies `(A + lambda I) x = -b`, `A + lambda I` PSD,
//! `lambda = rho |x|`. In the eigenbasis of `A` the secular function
//! `|x(lambda)| - lambda / rho` is decreasing on `(max(0, -lambda_1), inf)`
//! and is bisected there; the hard case (no weight of `b` on the bottom
//! eigenspace and a short reduced solution) is completed along `q_1`.

use nalgebra::DMatrix;

use crate::error::{CrsError, Result};
use crate::linalg::norm;
use crate::model::CrsProblem;

pub const ORACLE_MAX_DIM: usize = 500;

#[derive(Debug, Clone)]
pub struct OracleSolution {
    pub x: Vec<f64>,
    pub fval: f64,
    /// Multiplier `rho |x|`.
    pub lambda: f64,
    pub lambda_min: f64,
    /// Unit eigenvector for `lambda_min`.
    pub v_min: Vec<f64>,
    pub hard_case: bool,
}

pub fn dense_oracle_solve(prob: &CrsProblem) -> Result<OracleSolution> {
    let n = prob.dim();
    if n == 0 || n > ORACLE_MAX_DIM {
        return Err(CrsError::InvalidArgument(format!(
            "dense oracle handles 1..={ORACLE_MAX_DIM} unknowns, got {n}"
        )));
    }
    let rho = prob.rho;
    let eig = DMatrix::from_row_slice(n, n, &prob.a.to_dense()).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let lam: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let q: Vec<Vec<f64>> = order
        .iter()
        .map(|&i| eig.eigenvectors.column(i).iter().copied().collect())
        .collect();
    let bt: Vec<f64> = q
        .iter()
        .map(|qi| qi.iter().zip(&prob.b).map(|(a, b)| a * b).sum())
        .collect();

    let l1 = lam[0];
    let floor = (-l1).max(0.0);
    // lambda_i + floor, taken as an eigenvalue difference when l1 < 0.
    let gaps: Vec<f64> = lam
        .iter()
        .map(|&li| if l1 < 0.0 { li - l1 } else { li })
        .collect();
    let scale = lam.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    let b_norm = norm(&prob.b);

    let assemble = |xt: &[f64]| -> Vec<f64> {
        let mut x = vec![0.0; n];
        for (c, qi) in xt.iter().zip(&q) {
            for (xj, qj) in x.iter_mut().zip(qi) {
                *xj += c * qj;
            }
        }
        x
    };
    let done = |xt: Vec<f64>, lambda: f64, hard: bool| -> Result<OracleSolution> {
        let x = assemble(&xt);
        let fval = prob.f1_value(&x)?;
        Ok(OracleSolution {
            x,
            fval,
            lambda,
            lambda_min: l1,
            v_min: q[0].clone(),
            hard_case: hard,
        })
    };

    if b_norm == 0.0 && l1 >= 0.0 {
        return done(vec![0.0; n], 0.0, false);
    }

    if l1 < 0.0 {
        let bottom: Vec<bool> = gaps.iter().map(|&g| g <= 1e-10 * scale).collect();
        let orthogonal = bt
            .iter()
            .zip(&bottom)
            .all(|(b, &e)| !e || b.abs() <= 1e-12 * b_norm.max(f64::MIN_POSITIVE));
        if orthogonal {
            let xt: Vec<f64> = bt
                .iter()
                .zip(&gaps)
                .zip(&bottom)
                .map(|((b, g), &e)| if e { 0.0 } else { -b / g })
                .collect();
            let r = norm(&xt);
            let target = floor / rho;
            if r <= target {
                let mut xt = xt;
                xt[0] = (target * target - r * r).sqrt();
                return done(xt, floor, true);
            }
        }
    }

    let psi = |d: f64| -> f64 {
        let s: f64 = bt.iter().zip(&gaps).map(|(b, g)| (b / (g + d)).powi(2)).sum();
        s.sqrt() - (floor + d) / rho
    };
    let mut lo = 0.0_f64;
    let mut hi = 1.0_f64;
    while psi(hi) > 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if psi(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let d = 0.5 * (lo + hi);
    let xt: Vec<f64> = bt.iter().zip(&gaps).map(|(b, g)| -b / (g + d)).collect();
    done(xt, floor + d, false)
}
