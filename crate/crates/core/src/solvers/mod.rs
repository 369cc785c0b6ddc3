//! First-order solvers on the lifted feasible region, recovery of a
//! subproblem solution from a lifted one, and the end-to-end pipeline.
//!
//! Both inner solvers work on `B(l) = {|x|^2 <= y, y >= l}` (or on `S` when
//! `l = 0`), reuse the product `A x` computed for the objective to form the
//! gradient, and finish with the height reset: when the returned point sits
//! strictly inside `S` with `sqrt(y) > s / rho`, `y` is lowered to
//! `max(|x|^2, s^2/rho^2)`, which can only decrease the lifted objective.

mod apg;
mod bbm;
mod cauchy;
mod oracle;
mod recovery;

pub use apg::{apg_solve, apg_solve_with};
pub use bbm::{bbm_solve, bbm_solve_with};
pub use cauchy::cauchy_point;
pub use oracle::{dense_oracle_solve, OracleSolution, ORACLE_MAX_DIM};
pub use recovery::{recover_solution, Recovery};

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use crate::eigmin::{lanczos_iteration_cap, lanczos_min_eig_capped};
use crate::error::{check_dim, CrsError, Result};
use crate::linalg::{axpy, norm_sq};
use crate::model::{lifted_with_ax, CrsProblem, LiftedEval, SurrogateSpec, Variant};
use crate::operators::LinearOperator;
use crate::projections::{project_bhat, LiftedPoint};

/// Parameters shared by the inner solvers.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub max_iter: usize,
    /// Projected-gradient residual tolerance, relative to `max(1, |grad|)`.
    pub tol: f64,
    /// Backtracking growth factor (APG).
    pub xi: f64,
    /// Initial Lipschitz guess; BBM starts from the step `1 / l0`.
    pub l0: f64,
    /// Function-value restart of the APG momentum.
    pub restart: bool,
    /// Seed of the Lanczos start vector in [`solve_crs`].
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iter: 10_000,
            tol: 1e-8,
            xi: 2.0,
            l0: 1.0,
            restart: true,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iter == 0 {
            return Err(CrsError::InvalidArgument("max_iter must be at least 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(CrsError::InvalidArgument(format!("tol must be positive, got {}", self.tol)));
        }
        if !(self.xi > 1.0) {
            return Err(CrsError::InvalidArgument(format!("xi must exceed 1, got {}", self.xi)));
        }
        if !(self.l0 > 0.0 && self.l0.is_finite()) {
            return Err(CrsError::InvalidArgument(format!("l0 must be positive, got {}", self.l0)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    Converged,
    MaxIter,
    /// A monitor callback asked to stop.
    Stopped,
    /// The line search could not make progress (floating-point floor).
    Stalled,
    /// NaN or infinity in the objective.
    Degenerate,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Converged => "converged",
            Status::MaxIter => "max_iter",
            Status::Stopped => "stopped",
            Status::Stalled => "stalled",
            Status::Degenerate => "degenerate",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Apg,
    Bbm,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Apg => "APG",
            Method::Bbm => "BBM",
        })
    }
}

impl FromStr for Method {
    type Err = CrsError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "apg" => Ok(Method::Apg),
            "bbm" => Ok(Method::Bbm),
            _ => Err(CrsError::InvalidArgument(format!("unknown method '{s}'"))),
        }
    }
}

/// What an inner solver exposes to a monitor after each accepted step.
#[derive(Debug)]
pub struct IterState<'a> {
    pub iteration: usize,
    pub point: &'a LiftedPoint,
    /// `A x` at `point`.
    pub ax: &'a [f64],
    pub value: f64,
    pub residual: f64,
}

/// Per-iteration callback; returning `true` stops the solver.
pub type Monitor<'m> = &'m mut dyn FnMut(&IterState<'_>) -> bool;

/// Lifted objective before and after the final height reset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResetRecord {
    pub before: f64,
    pub after: f64,
    pub applied: bool,
}

/// Output of [`apg_solve`] / [`bbm_solve`].
#[derive(Debug, Clone)]
pub struct InnerSolution {
    /// Final point, after the height reset.
    pub point: LiftedPoint,
    /// `A x` at the final point.
    pub ax: Vec<f64>,
    /// Lifted objective at `point`.
    pub value: f64,
    pub iterations: usize,
    pub status: Status,
    /// Projected-gradient residual at the last iterate (before the reset).
    pub residual: f64,
    pub reset: ResetRecord,
    /// Objective of every iterate, starting point included.
    pub trace: Vec<f64>,
}

/// Lowers `y` to `max(|x|^2, s^2/rho^2)` when `y > |x|^2` and
/// `sqrt(y) > s / rho`. Returns whether the point changed.
pub fn reset_height(spec: &SurrogateSpec, rho: f64, p: &mut LiftedPoint) -> bool {
    let xs = norm_sq(&p.x);
    let floor = spec.shift / rho;
    if p.y > xs && p.y.sqrt() > floor {
        let y = xs.max(floor * floor);
        if y < p.y {
            p.y = y;
            return true;
        }
    }
    false
}

/// `|p - P(p - grad)|` in `R^{n+1}`.
pub(crate) fn projected_residual(p: &LiftedPoint, e: &LiftedEval, l: f64) -> Result<f64> {
    let step = LiftedPoint::new(
        p.x.iter().zip(&e.grad_x).map(|(a, g)| a - g).collect(),
        p.y - e.grad_y,
    );
    Ok(project_bhat(&step, l)?.distance(p))
}

/// Shared set-up: validated config, projected start, first evaluation.
pub(crate) struct Start {
    pub point: LiftedPoint,
    pub ax: Vec<f64>,
    pub eval: LiftedEval,
}

pub(crate) fn prepare(
    prob: &CrsProblem,
    spec: &SurrogateSpec,
    start: &LiftedPoint,
    cfg: &SolverConfig,
) -> Result<Start> {
    cfg.validate()?;
    check_dim(prob.dim(), start.dim())?;
    let point = project_bhat(start, spec.lower_bound)?;
    let ax = prob.a.apply(&point.x)?;
    let eval = lifted_with_ax(prob, spec, &point.x, point.y, &ax);
    Ok(Start { point, ax, eval })
}

/// Applies the height reset to the final iterate and packages the result.
pub(crate) fn finish(
    prob: &CrsProblem,
    spec: &SurrogateSpec,
    mut point: LiftedPoint,
    ax: Vec<f64>,
    value: f64,
    iterations: usize,
    status: Status,
    residual: f64,
    trace: Vec<f64>,
) -> InnerSolution {
    let before = value;
    let old_y = point.y;
    let applied = reset_height(spec, prob.rho, &mut point);
    // Only the y-part of the objective moves.
    let after = if applied {
        before - spec.y_part(prob.rho, old_y) + spec.y_part(prob.rho, point.y)
    } else {
        before
    };
    InnerSolution {
        point,
        ax,
        value: after,
        iterations,
        status,
        residual,
        reset: ResetRecord {
            before,
            after,
            applied,
        },
        trace,
    }
}

/// Options of the end-to-end pipeline.
#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub method: Method,
    /// SP or AP; the exact variant is reached through [`solve_with_spec`].
    pub variant: Variant,
    /// Lanczos accuracy.
    pub eig_tol: f64,
    /// Margin added to the shift in the surrogate variant.
    pub sp_epsilon: f64,
    /// Lanczos failure probability.
    pub delta: f64,
    /// Overrides the Lanczos iteration cap.
    pub eig_max_iter: Option<usize>,
    pub solver: SolverConfig,
    /// Starting `x`; defaults to the origin.
    pub start: Option<Vec<f64>>,
    /// Stop as soon as the recovered iterate reaches this objective value.
    pub target: Option<f64>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            method: Method::Apg,
            variant: Variant::Sp,
            eig_tol: 1e-6,
            sp_epsilon: 1e-6,
            delta: 0.01,
            eig_max_iter: None,
            solver: SolverConfig::default(),
            start: None,
            target: None,
        }
    }
}

/// Result of [`solve_crs`].
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub method: Method,
    /// Variant actually solved (the convex branch when `theta >= 0`).
    pub variant: Variant,
    pub x: Vec<f64>,
    pub fval: f64,
    /// Inner-solver iterations.
    pub iterations: usize,
    /// Products with `A` over the whole pipeline.
    pub matvecs: u64,
    pub eig_iterations: usize,
    pub theta: f64,
    pub spec: SurrogateSpec,
    pub status: Status,
    pub reset: ResetRecord,
    pub eig_time: Duration,
    pub loop_time: Duration,
}

impl SolveReport {
    pub const CSV_HEADER: [&'static str; 8] =
        ["method", "variant", "n", "fval", "iter", "matvecs", "time", "time_eig"];

    pub fn total_time(&self) -> Duration {
        self.eig_time + self.loop_time
    }

    pub fn csv_record(&self) -> [String; 8] {
        [
            self.method.to_string(),
            self.variant.to_string(),
            self.x.len().to_string(),
            format!("{:.16e}", self.fval),
            self.iterations.to_string(),
            self.matvecs.to_string(),
            format!("{:.6}", self.total_time().as_secs_f64()),
            format!("{:.6}", self.eig_time.as_secs_f64()),
        ]
    }
}

fn run_inner(
    prob: &CrsProblem,
    spec: &SurrogateSpec,
    method: Method,
    start: &LiftedPoint,
    cfg: &SolverConfig,
    monitor: Option<Monitor<'_>>,
) -> Result<InnerSolution> {
    match method {
        Method::Apg => apg_solve_with(prob, spec, start, cfg, monitor),
        Method::Bbm => bbm_solve_with(prob, spec, start, cfg, monitor),
    }
}

/// Eigenvalue estimate, surrogate construction, inner solve and recovery.
pub fn solve_crs(prob: &CrsProblem, opts: &SolveOptions) -> Result<SolveReport> {
    let counter0 = prob.a.matvec_count();
    let t0 = Instant::now();
    let cap = opts.eig_max_iter.unwrap_or_else(|| {
        lanczos_iteration_cap(prob.dim(), prob.a.norm_upper_bound(), opts.eig_tol, opts.delta)
    });
    let eig = lanczos_min_eig_capped(&prob.a, opts.eig_tol, opts.delta, opts.solver.seed, cap)?;
    let spec = match opts.variant {
        Variant::Sp | Variant::Ap | Variant::Convex => {
            SurrogateSpec::select(opts.variant, eig.theta, opts.sp_epsilon, prob.rho)?
        }
        Variant::Exact => {
            return Err(CrsError::InvalidArgument(
                "the exact variant needs the true minimum eigenvalue; use solve_with_spec".into(),
            ))
        }
    };
    let eig_time = t0.elapsed();
    let mut report = solve_with_spec(prob, &spec, &eig.v, opts)?;
    report.eig_time = eig_time;
    report.eig_iterations = eig.iterations;
    report.theta = eig.theta;
    report.matvecs = prob.a.matvec_count() - counter0;
    Ok(report)
}

/// Inner solve and recovery for a given surrogate and unit vector `v`
/// (the eigenvector estimate used by the recovery step).
pub fn solve_with_spec(
    prob: &CrsProblem,
    spec: &SurrogateSpec,
    v: &[f64],
    opts: &SolveOptions,
) -> Result<SolveReport> {
    let n = prob.dim();
    check_dim(n, v.len())?;
    let counter0 = prob.a.matvec_count();
    let t0 = Instant::now();
    let x0 = match &opts.start {
        Some(x) => {
            check_dim(n, x.len())?;
            x.clone()
        }
        None => vec![0.0; n],
    };
    let y0 = norm_sq(&x0).max(spec.lower_bound);
    let start = LiftedPoint::new(x0, y0);
    let recovery = Recovery::new(prob, v)?;

    let candidate = |p: &LiftedPoint, ax: &[f64]| -> Result<(Vec<f64>, f64)> {
        let mut q = p.clone();
        reset_height(spec, prob.rho, &mut q);
        let t = recovery.step(prob, spec, &q)?;
        let mut x = q.x;
        let mut axt = ax.to_vec();
        axpy(t, &recovery.v, &mut x);
        axpy(t, &recovery.av, &mut axt);
        let f = prob.f1_with_ax(&x, &axt);
        Ok((x, f))
    };

    let inner = match opts.target {
        Some(target) => {
            let mut stop = |s: &IterState<'_>| {
                candidate(s.point, s.ax)
                    .map(|(_, f)| f <= target)
                    .unwrap_or(false)
            };
            run_inner(prob, spec, opts.method, &start, &opts.solver, Some(&mut stop))?
        }
        None => run_inner(prob, spec, opts.method, &start, &opts.solver, None)?,
    };
    let (x, fval) = candidate(&inner.point, &inner.ax)?;
    let status = match inner.status {
        Status::Stopped => Status::Converged,
        s => s,
    };
    Ok(SolveReport {
        method: opts.method,
        variant: spec.variant,
        x,
        fval,
        iterations: inner.iterations,
        matvecs: prob.a.matvec_count() - counter0,
        eig_iterations: 0,
        theta: spec.theta,
        spec: *spec,
        status,
        reset: inner.reset,
        eig_time: Duration::ZERO,
        loop_time: t0.elapsed(),
    })
}
