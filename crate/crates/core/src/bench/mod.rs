//! Synthetic instances with a known global minimizer and optimal value `-1`.
//!
//! The spectrum is fixed first (`lambda_1 = -1`, largest eigenvalue `1`),
//! a minimizer and its multiplier are chosen in the eigenbasis, `b` is
//! solved for from the optimality conditions, and everything is rotated by
//! a random block-diagonal orthogonal matrix with `n / K` blocks of size
//! `K`, so that a fraction `K / n` of the entries of `A` are nonzero.
//!
//! Easy case: the multiplier `lambda*` is set from the condition number
//! `kappa = (lambda_n + lambda*) / (lambda_1 + lambda*)`. Hard case:
//! `lambda* = -lambda_1`, `b` has no weight on the bottom eigenvector, and
//! the minimizer carries a component along it.
//!
//! The optimal value is normalized to `-1` by scaling `(b, rho)` to
//! `(beta b, rho / beta)`, which multiplies the objective by `beta^2`
//! while leaving `A` (hence `kappa` and the gap) untouched.
//!
//! Randomness comes from ChaCha8 seeded with `seed_from_u64`, so a spec and
//! seed determine the instance bit for bit.

mod experiment;

pub use experiment::{
    run_experiment, write_csv, ExperimentConfig, ExperimentRow, MethodSpec, CSV_HEADER,
};

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{CrsError, Result};
use crate::linalg::{dot, norm};
use crate::model::CrsProblem;
use crate::operators::{LinearOperator, SymmetricOperator};

/// Weight of the reduced solution in the hard case: `|x*|` splits as
/// `c` off the bottom eigenvector and `sqrt(1 - c^2)` along it.
pub const HARD_CASE_MASS: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Case {
    Easy,
    Hard,
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Case::Easy => "easy",
            Case::Hard => "hard",
        })
    }
}

impl FromStr for Case {
    type Err = CrsError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "easy" => Ok(Case::Easy),
            "hard" => Ok(Case::Hard),
            _ => Err(CrsError::InvalidArgument(format!("unknown case '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceSpec {
    pub n: usize,
    /// Block size `K`; must divide `n`.
    pub block: usize,
    pub case: Case,
    /// Condition number (easy case).
    pub kappa: f64,
    /// `lambda_2 - lambda_1` (hard case).
    pub gap: f64,
    /// Regularization weight before normalization.
    pub rho: f64,
    pub seed: u64,
}

impl InstanceSpec {
    pub fn easy(n: usize, block: usize, kappa: f64, seed: u64) -> Self {
        Self { n, block, case: Case::Easy, kappa, gap: 0.0, rho: 1.0, seed }
    }

    pub fn hard(n: usize, block: usize, gap: f64, seed: u64) -> Self {
        Self { n, block, case: Case::Hard, kappa: 0.0, gap, rho: 1.0, seed }
    }

    /// `kappa` or `gap`, whichever the case uses.
    pub fn param(&self) -> f64 {
        match self.case {
            Case::Easy => self.kappa,
            Case::Hard => self.gap,
        }
    }

    /// Lanczos accuracy used by the experiments: `5 / kappa` in the easy
    /// case, `1e-6` in the hard case.
    pub fn eig_tolerance(&self) -> f64 {
        match self.case {
            Case::Easy => 5.0 / self.kappa,
            Case::Hard => 1e-6,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(CrsError::InvalidArgument(m));
        if self.n < 2 {
            return bad(format!("n must be at least 2, got {}", self.n));
        }
        if self.block == 0 || self.n % self.block != 0 {
            return bad(format!("block size {} must divide n = {}", self.block, self.n));
        }
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return bad(format!("rho must be positive, got {}", self.rho));
        }
        match self.case {
            Case::Easy if !(self.kappa > 1.0 && self.kappa.is_finite()) => {
                bad(format!("kappa must exceed 1, got {}", self.kappa))
            }
            Case::Hard if !(self.gap > 0.0 && self.gap < 2.0) => {
                bad(format!("gap must lie in (0, 2), got {}", self.gap))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct GeneratedInstance {
    pub spec: InstanceSpec,
    pub problem: CrsProblem,
    pub x_star: Vec<f64>,
    pub lambda_star: f64,
    pub f_star: f64,
    /// Eigenvalues of `A`, ascending.
    pub spectrum: Vec<f64>,
}

impl GeneratedInstance {
    pub fn lambda_min(&self) -> f64 {
        self.spectrum[0]
    }
}

fn spectrum(spec: &InstanceSpec, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = spec.n;
    let mut lam = Vec::with_capacity(n);
    lam.push(-1.0);
    match spec.case {
        Case::Easy => {
            for _ in 1..n - 1 {
                let mut v = -1.0;
                while v == -1.0 {
                    v = rng.random_range(-1.0..1.0);
                }
                lam.push(v);
            }
            lam.push(1.0);
        }
        Case::Hard => {
            let l2 = -1.0 + spec.gap;
            lam.push(l2);
            for _ in 2..n {
                let u = 1.0 - rng.random::<f64>();
                lam.push(l2 + (1.0 - l2) * u);
            }
        }
    }
    lam.sort_by(f64::total_cmp);
    lam
}

fn unit_vector(len: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut u: Vec<f64> = (0..len).map(|_| StandardNormal.sample(rng)).collect();
    let nrm = norm(&u);
    u.iter_mut().for_each(|v| *v /= nrm);
    u
}

/// Orthogonal factor of a Gaussian `k x k` matrix, columns signed so that
/// `R` has a positive diagonal. Row-major. A `1 x 1` block is always `[1]`
/// and draws nothing from `rng`.
fn random_orthogonal(k: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    if k == 1 {
        return vec![1.0];
    }
    let g = DMatrix::from_fn(k, k, |_, _| StandardNormal.sample(rng));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..k {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    let mut out = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..k {
            out[i * k + j] = q[(i, j)];
        }
    }
    out
}

pub fn generate(spec: &InstanceSpec) -> Result<GeneratedInstance> {
    spec.validate()?;
    let n = spec.n;
    let k = spec.block;
    let rho = spec.rho;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let lam = spectrum(spec, &mut rng);

    // Minimizer and right-hand side in the eigenbasis.
    let (lambda_star, xbar) = match spec.case {
        Case::Easy => {
            let ls = (lam[n - 1] - spec.kappa * lam[0]) / (spec.kappa - 1.0);
            if !(ls > -lam[0]) {
                return Err(CrsError::InvalidArgument(format!(
                    "kappa = {} gives multiplier {ls} <= -lambda_1",
                    spec.kappa
                )));
            }
            let u = unit_vector(n, &mut rng);
            (ls, u.iter().map(|v| ls / rho * v).collect::<Vec<f64>>())
        }
        Case::Hard => {
            let ls = -lam[0];
            let w = unit_vector(n - 1, &mut rng);
            let r = ls / rho;
            let mut x = Vec::with_capacity(n);
            x.push(r * (1.0 - HARD_CASE_MASS * HARD_CASE_MASS).sqrt());
            x.extend(w.iter().map(|v| HARD_CASE_MASS * r * v));
            (ls, x)
        }
    };
    let mut bbar: Vec<f64> = lam
        .iter()
        .zip(&xbar)
        .map(|(l, x)| -(l + lambda_star) * x)
        .collect();
    if spec.case == Case::Hard {
        bbar[0] = 0.0;
    }
    let fbar = 0.5 * lam.iter().zip(&xbar).map(|(l, x)| l * x * x).sum::<f64>()
        + dot(&bbar, &xbar)
        + rho / 3.0 * norm(&xbar).powi(3);
    if !(fbar < 0.0) {
        return Err(CrsError::Internal(format!("constructed optimum {fbar} is not negative")));
    }
    let beta = 1.0 / (-fbar).sqrt();

    // Rotate block by block: A = Q' diag(lam) Q, b = Q' bbar, x* = Q' xbar.
    let mut triplets = Vec::with_capacity(n * k);
    let mut b = vec![0.0; n];
    let mut x_star = vec![0.0; n];
    for start in (0..n).step_by(k) {
        let q = random_orthogonal(k, &mut rng);
        let d = &lam[start..start + k];
        for i in 0..k {
            for j in i..k {
                let v: f64 = (0..k).map(|m| q[m * k + i] * d[m] * q[m * k + j]).sum();
                if v != 0.0 {
                    triplets.push((start + i, start + j, v));
                    if i != j {
                        triplets.push((start + j, start + i, v));
                    }
                }
            }
            b[start + i] = beta * (0..k).map(|m| q[m * k + i] * bbar[start + m]).sum::<f64>();
            x_star[start + i] = beta * (0..k).map(|m| q[m * k + i] * xbar[start + m]).sum::<f64>();
        }
    }
    let a = SymmetricOperator::from_triplets(n, &triplets)?;
    let problem = CrsProblem::new(a, b, rho / beta)?;
    let inst = GeneratedInstance {
        spec: spec.clone(),
        problem,
        x_star,
        lambda_star,
        f_star: -1.0,
        spectrum: lam,
    };
    check_instance(&inst)?;
    inst.problem.a.reset_matvec_count();
    Ok(inst)
}

/// Optimality residual, multiplier consistency and optimal value of a
/// generated instance.
pub fn check_instance(inst: &GeneratedInstance) -> Result<()> {
    let p = &inst.problem;
    let ax = p.a.apply(&inst.x_star)?;
    let r: Vec<f64> = ax
        .iter()
        .zip(&p.b)
        .zip(&inst.x_star)
        .map(|((a, b), x)| a + b + inst.lambda_star * x)
        .collect();
    let fail = |m: String| Err(CrsError::Internal(format!("generated instance: {m}")));
    let res = norm(&r);
    if res > 1e-8 * norm(&p.b).max(f64::MIN_POSITIVE) {
        return fail(format!("optimality residual {res:e}"));
    }
    let lam = p.rho * norm(&inst.x_star);
    if (lam - inst.lambda_star).abs() > 1e-10 * inst.lambda_star.max(1.0) {
        return fail(format!("multiplier {} vs rho |x*| = {lam}", inst.lambda_star));
    }
    if inst.lambda_star < -inst.lambda_min() - 1e-12 {
        return fail(format!("multiplier {} below -lambda_1", inst.lambda_star));
    }
    let f = p.f1_with_ax(&inst.x_star, &ax);
    if (f - inst.f_star).abs() > 1e-10 {
        return fail(format!("f1(x*) = {f}"));
    }
    Ok(())
}
