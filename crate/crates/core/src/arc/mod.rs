//! Adaptive cubic regularization with a reformulation-based subproblem
//! switch.
//!
//! Each outer iteration builds the model
//!
//! ```text
//! m(s) = 1/2 s'Bs + g's + sigma/3 |s|^3
//! ```
//!
//! at the current point and starts from its Cauchy point. When the gradient
//! is small relative to the function value and `B` has clearly negative
//! curvature, the model is handed to the lifted (AP) solver; otherwise it is
//! minimized directly by a Barzilai-Borwein iteration. The better of the
//! trial step and the Cauchy point is then tested against the actual
//! reduction, and `sigma` is adapted.

mod functions;

pub use functions::{ChainedRosenbrock, Humps, SmoothObjective, Sphere};

use std::fmt;
use std::io::Write;
use std::time::{Duration, Instant};

use crate::eigmin::{lanczos_min_eig, EigEstimate};
use crate::error::{check_dim, CrsError, Result};
use crate::linalg::{axpy, dot, norm, norm_sq};
use crate::model::{CrsProblem, SurrogateSpec};
use crate::operators::{LinearOperator, SymmetricOperator};
use crate::projections::LiftedPoint;
use crate::solvers::{
    apg_solve_with, bbm_solve_with, cauchy_point, reset_height, IterState, Method, Recovery,
    SolverConfig,
};

#[derive(Debug, Clone, PartialEq)]
pub struct ArcConfig {
    pub gamma1: f64,
    pub gamma2: f64,
    pub eta1: f64,
    pub eta2: f64,
    pub sigma0: f64,
    /// Floor of `sigma` on very successful iterations.
    pub sigma_min: f64,
    /// Gradient threshold (relative to `max(F, 1)`) of the switch.
    pub eps1: f64,
    /// Curvature threshold of the switch.
    pub eps2: f64,
    pub grad_tol: f64,
    pub eig_tol_outer: f64,
    pub max_outer: usize,
    pub inner_max_iter: usize,
    pub seed: u64,
}

impl Default for ArcConfig {
    fn default() -> Self {
        Self {
            gamma1: 2.0,
            gamma2: 3.0,
            eta1: 0.1,
            eta2: 0.9,
            sigma0: 1.0,
            sigma_min: 1e-12,
            eps1: 1e-2,
            eps2: 1e-4,
            grad_tol: 1e-5,
            eig_tol_outer: 1e-3,
            max_outer: 5000,
            inner_max_iter: 150,
            seed: 0,
        }
    }
}

impl ArcConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.gamma2 >= self.gamma1
            && self.gamma1 > 1.0
            && 1.0 > self.eta2
            && self.eta2 >= self.eta1
            && self.eta1 > 0.0
            && self.sigma0 > 0.0
            && self.sigma_min > 0.0
            && self.eps1 > 0.0
            && self.eps2 > 0.0
            && self.grad_tol > 0.0
            && self.eig_tol_outer > 0.0
            && self.max_outer > 0
            && self.inner_max_iter > 0;
        if ok {
            Ok(())
        } else {
            Err(CrsError::InvalidArgument(format!("inconsistent ARC parameters: {self:?}")))
        }
    }

    /// Lanczos accuracy for the curvature estimates.
    pub fn eig_tol(&self) -> f64 {
        (self.eps2 / 10.0).min(1e-5)
    }
}

/// Which subproblem solver produced the trial step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    /// Direct Barzilai-Borwein minimization of the model.
    Model,
    /// Lifted (AP) solver.
    Reformulation,
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Branch::Model => "model",
            Branch::Reformulation => "reformulation",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ArcStatus {
    Converged,
    MaxOuter,
    /// Non-finite value, gradient or model.
    Aborted,
}

impl fmt::Display for ArcStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ArcStatus::Converged => "converged",
            ArcStatus::MaxOuter => "max_outer",
            ArcStatus::Aborted => "aborted",
        })
    }
}

/// Running totals in the layout of the usual ARC result tables.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ArcCounters {
    /// Outer iterations.
    pub n_i: usize,
    /// Hessian-vector products, eigenvalue estimation included.
    pub n_prod: u64,
    pub n_f: usize,
    pub n_g: usize,
    /// Minimum-eigenvalue estimations.
    pub n_eig: usize,
    pub time: Duration,
    pub time_eig: Duration,
}

impl ArcCounters {
    pub fn time_loop(&self) -> Duration {
        self.time.saturating_sub(self.time_eig)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArcRecord {
    pub k: usize,
    /// Objective and gradient norm at the start of the iteration.
    pub f: f64,
    pub grad_norm: f64,
    pub sigma: f64,
    pub rho: f64,
    pub branch: Branch,
    pub accepted: bool,
    /// Whether the Cauchy point replaced the solver's step.
    pub used_cauchy: bool,
    pub inner_iterations: usize,
    /// `|grad m(s)|` at the solver's step.
    pub inner_grad_norm: f64,
    pub inner_step_norm: f64,
    /// The solver stopped by `|grad m(s)| <= min(1, |s|) |g|`.
    pub inner_rule_met: bool,
    pub model_cauchy: f64,
    pub model_step: f64,
    pub f_trial: f64,
    pub counters: ArcCounters,
}

#[derive(Debug, Clone)]
pub struct ArcResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub grad_norm: f64,
    /// Last curvature estimate at `x`, when one was computed.
    pub lambda_min: Option<f64>,
    pub status: ArcStatus,
    pub counters: ArcCounters,
    pub history: Vec<ArcRecord>,
}

struct InnerOutcome {
    s: Vec<f64>,
    iterations: usize,
    grad_norm: f64,
    rule_met: bool,
}

fn model_grad_with_bs(model: &CrsProblem, s: &[f64], bs: &[f64]) -> Vec<f64> {
    let r = model.rho * norm(s);
    bs.iter()
        .zip(&model.b)
        .zip(s)
        .map(|((a, b), si)| a + b + r * si)
        .collect()
}

fn inner_rule(grad_m: f64, s: &[f64], g_norm: f64) -> bool {
    grad_m <= norm(s).min(1.0) * g_norm
}

/// Monotone Barzilai-Borwein on the unconstrained model.
fn minimize_model_bb(model: &CrsProblem, s0: &[f64], g_norm: f64, max_iter: usize) -> Result<InnerOutcome> {
    let mut s = s0.to_vec();
    let mut bs = model.a.apply(&s)?;
    let mut m = model.f1_with_ax(&s, &bs);
    let mut grad = model_grad_with_bs(model, &s, &bs);
    let mut gn = norm(&grad);
    let mut step = 1.0 / (model.a.norm_upper_bound() + model.rho * norm(&s)).max(1e-12);
    let mut iterations = 0;
    while !inner_rule(gn, &s, g_norm) && iterations < max_iter {
        let mut a = step;
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = s.iter().zip(&grad).map(|(x, g)| x - a * g).collect();
            let bt = model.a.apply(&trial)?;
            let mt = model.f1_with_ax(&trial, &bt);
            if mt <= m - 1e-4 * a * gn * gn {
                accepted = Some((trial, bt, mt));
                break;
            }
            a *= 0.5;
        }
        let Some((trial, bt, mt)) = accepted else {
            break;
        };
        iterations += 1;
        let gt = model_grad_with_bs(model, &trial, &bt);
        let ds: Vec<f64> = trial.iter().zip(&s).map(|(a, b)| a - b).collect();
        let dg: Vec<f64> = gt.iter().zip(&grad).map(|(a, b)| a - b).collect();
        let sy = dot(&ds, &dg);
        if sy > 0.0 {
            let bb = if iterations % 2 == 1 { sy / norm_sq(&dg) } else { norm_sq(&ds) / sy };
            if bb.is_finite() {
                step = bb.clamp(1e-10, 1e10);
            }
        }
        s = trial;
        bs = bt;
        m = mt;
        grad = gt;
        gn = norm(&grad);
    }
    let _ = (bs, m);
    Ok(InnerOutcome { rule_met: inner_rule(gn, &s, g_norm), s, iterations, grad_norm: gn })
}

/// Lifted (AP) solve of the model from `(s_c, |s_c|^2)`, stopping on the
/// inner rule evaluated at the recovered step.
fn minimize_model_lifted(
    model: &CrsProblem,
    eig: &EigEstimate,
    s_c: &[f64],
    g_norm: f64,
    method: Method,
    cfg: &ArcConfig,
) -> Result<InnerOutcome> {
    let spec = SurrogateSpec::ap(eig.theta, model.rho)?;
    let recovery = Recovery::new(model, &eig.v)?;
    let candidate = |p: &LiftedPoint, ax: &[f64]| -> Result<(Vec<f64>, f64)> {
        let mut q = p.clone();
        reset_height(&spec, model.rho, &mut q);
        let t = recovery.step(model, &spec, &q)?;
        let mut s = q.x;
        let mut bs = ax.to_vec();
        axpy(t, &recovery.v, &mut s);
        axpy(t, &recovery.av, &mut bs);
        let gn = norm(&model_grad_with_bs(model, &s, &bs));
        Ok((s, gn))
    };
    let solver_cfg = SolverConfig {
        max_iter: cfg.inner_max_iter,
        tol: f64::MIN_POSITIVE,
        seed: cfg.seed,
        ..SolverConfig::default()
    };
    let start = LiftedPoint::new(s_c.to_vec(), norm_sq(s_c).max(spec.lower_bound));
    let mut monitor = |st: &IterState<'_>| {
        candidate(st.point, st.ax)
            .map(|(s, gn)| inner_rule(gn, &s, g_norm))
            .unwrap_or(false)
    };
    let sol = match method {
        Method::Apg => apg_solve_with(model, &spec, &start, &solver_cfg, Some(&mut monitor))?,
        Method::Bbm => bbm_solve_with(model, &spec, &start, &solver_cfg, Some(&mut monitor))?,
    };
    let (s, gn) = candidate(&sol.point, &sol.ax)?;
    Ok(InnerOutcome { rule_met: inner_rule(gn, &s, g_norm), s, iterations: sol.iterations, grad_norm: gn })
}

/// Curvature estimate of the Hessian at the current point, computed at most
/// once per point.
struct EigCache {
    estimate: Option<EigEstimate>,
}

impl EigCache {
    fn get(&mut self, h: &SymmetricOperator, cfg: &ArcConfig, counters: &mut ArcCounters) -> Result<&EigEstimate> {
        if self.estimate.is_none() {
            let t = Instant::now();
            let est = lanczos_min_eig(h, cfg.eig_tol(), 0.01, cfg.seed.wrapping_add(counters.n_eig as u64))?;
            counters.time_eig += t.elapsed();
            counters.n_eig += 1;
            self.estimate = Some(est);
        }
        Ok(self.estimate.as_ref().expect("filled above"))
    }
}

/// Minimizes `obj` from `x0`; `subsolver` handles the lifted branch.
pub fn arc_minimize(
    obj: &dyn SmoothObjective,
    x0: &[f64],
    cfg: &ArcConfig,
    subsolver: Method,
) -> Result<ArcResult> {
    cfg.validate()?;
    check_dim(obj.dim(), x0.len())?;
    let start = Instant::now();
    let mut counters = ArcCounters::default();
    let mut history = Vec::new();
    let mut x = x0.to_vec();
    let mut f = obj.value(&x);
    let mut g = obj.gradient(&x);
    counters.n_f += 1;
    counters.n_g += 1;
    let mut model = CrsProblem { a: obj.hessian(&x), b: g.clone(), rho: cfg.sigma0 };
    // Products spent on Hessians already replaced.
    let mut prod_base = 0u64;
    let mut eig = EigCache { estimate: None };
    let mut sigma = cfg.sigma0;
    let mut status = ArcStatus::MaxOuter;

    let finite = |f: f64, g: &[f64]| f.is_finite() && g.iter().all(|v| v.is_finite());

    for k in 0..cfg.max_outer {
        if !finite(f, &g) {
            status = ArcStatus::Aborted;
            break;
        }
        let g_norm = norm(&g);
        if g_norm <= cfg.grad_tol {
            let theta = eig.get(&model.a, cfg, &mut counters)?.theta;
            if theta >= -cfg.eig_tol_outer {
                status = ArcStatus::Converged;
                break;
            }
        }

        model.b.clone_from(&g);
        model.rho = sigma;
        let s_c = if g_norm > 0.0 { cauchy_point(&model.a, &g, sigma)? } else { vec![0.0; x.len()] };
        let switch = g_norm <= f.max(1.0) * cfg.eps1
            && eig.get(&model.a, cfg, &mut counters)?.theta < -cfg.eps2;
        let (branch, inner) = if switch {
            let est = eig.get(&model.a, cfg, &mut counters)?.clone();
            (Branch::Reformulation, minimize_model_lifted(&model, &est, &s_c, g_norm, subsolver, cfg)?)
        } else {
            (Branch::Model, minimize_model_bb(&model, &s_c, g_norm, cfg.inner_max_iter)?)
        };

        let m_c = model.f1_value(&s_c)?;
        let m_t = model.f1_value(&inner.s)?;
        let used_cauchy = !(m_t <= m_c);
        let s = if used_cauchy { s_c.clone() } else { inner.s.clone() };
        let m_s = m_t.min(m_c);
        if !m_s.is_finite() {
            status = ArcStatus::Aborted;
            break;
        }

        let x_trial: Vec<f64> = x.iter().zip(&s).map(|(a, b)| a + b).collect();
        let f_trial = obj.value(&x_trial);
        counters.n_f += 1;
        let actual = f - f_trial;
        let predicted = -m_s;
        let rho = if predicted > 0.0 {
            actual / predicted
        } else if actual > 0.0 {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        };
        let accepted = rho >= cfg.eta1 && f_trial.is_finite();

        counters.n_prod = prod_base + model.a.matvec_count();
        counters.n_i = k + 1;
        counters.time = start.elapsed();
        history.push(ArcRecord {
            k,
            f,
            grad_norm: g_norm,
            sigma,
            rho,
            branch,
            accepted,
            used_cauchy,
            inner_iterations: inner.iterations,
            inner_grad_norm: inner.grad_norm,
            inner_step_norm: norm(&inner.s),
            inner_rule_met: inner.rule_met,
            model_cauchy: m_c,
            model_step: m_s,
            f_trial,
            counters,
        });

        sigma = if rho > cfg.eta2 {
            (0.5 * sigma).max(cfg.sigma_min)
        } else if rho >= cfg.eta1 {
            sigma
        } else {
            cfg.gamma1 * sigma
        };

        if accepted {
            x = x_trial;
            f = f_trial;
            g = obj.gradient(&x);
            counters.n_g += 1;
            prod_base += model.a.matvec_count();
            model.a = obj.hessian(&x);
            eig.estimate = None;
        }
    }

    counters.n_prod = prod_base + model.a.matvec_count();
    counters.time = start.elapsed();
    let lambda_min = eig.estimate.as_ref().map(|e| e.theta);
    Ok(ArcResult { grad_norm: norm(&g), x, f, lambda_min, status, counters, history })
}

pub const HISTORY_HEADER: [&str; 14] = [
    "k", "f", "grad_norm", "sigma", "rho", "branch", "accepted", "inner_iter", "n_prod", "n_f",
    "n_g", "n_eig", "time", "time_eig",
];

pub const SUMMARY_HEADER: [&str; 12] = [
    "problem", "n", "subsolver", "n_i", "n_prod", "n_f", "n_g", "n_eig", "f*", "time", "time_eig",
    "time_loop",
];

fn csv_err(e: csv::Error) -> CrsError {
    CrsError::Internal(format!("csv: {e}"))
}

/// Per-iteration history, timing columns last.
pub fn write_history_csv<W: Write>(history: &[ArcRecord], sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(HISTORY_HEADER).map_err(csv_err)?;
    for r in history {
        w.write_record([
            r.k.to_string(),
            format!("{:.16e}", r.f),
            format!("{:.6e}", r.grad_norm),
            format!("{:.6e}", r.sigma),
            format!("{:.6e}", r.rho),
            r.branch.to_string(),
            r.accepted.to_string(),
            r.inner_iterations.to_string(),
            r.counters.n_prod.to_string(),
            r.counters.n_f.to_string(),
            r.counters.n_g.to_string(),
            r.counters.n_eig.to_string(),
            format!("{:.6}", r.counters.time.as_secs_f64()),
            format!("{:.6}", r.counters.time_eig.as_secs_f64()),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| CrsError::Internal(format!("csv: {e}")))
}

/// One summary row per run.
pub fn write_summary_csv<W: Write>(runs: &[(String, Method, &ArcResult)], sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(SUMMARY_HEADER).map_err(csv_err)?;
    for (name, method, r) in runs {
        let c = &r.counters;
        w.write_record([
            name.clone(),
            r.x.len().to_string(),
            method.to_string(),
            c.n_i.to_string(),
            c.n_prod.to_string(),
            c.n_f.to_string(),
            c.n_g.to_string(),
            c.n_eig.to_string(),
            format!("{:.10e}", r.f),
            format!("{:.6}", c.time.as_secs_f64()),
            format!("{:.6}", c.time_eig.as_secs_f64()),
            format!("{:.6}", c.time_loop().as_secs_f64()),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| CrsError::Internal(format!("csv: {e}")))
}
