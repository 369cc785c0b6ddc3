//! Projected Barzilai-Borwein method with an Armijo safeguard.

use super::{finish, prepare, projected_residual, InnerSolution, IterState, Monitor, SolverConfig, Status};
use crate::error::Result;
use crate::linalg::dot;
use crate::model::{lifted_with_ax, CrsProblem, SurrogateSpec};
use crate::operators::LinearOperator;
use crate::projections::{project_bhat, LiftedPoint};

const ARMIJO_C: f64 = 1e-4;
const STEP_MIN: f64 = 1e-10;
const STEP_MAX: f64 = 1e10;
const MAX_HALVINGS: usize = 60;

pub fn bbm_solve(
    prob: &CrsProblem,
    spec: &SurrogateSpec,
    start: &LiftedPoint,
    cfg: &SolverConfig,
) -> Result<InnerSolution> {
    bbm_solve_with(prob, spec, start, cfg, None)
}

/// [`bbm_solve`] with a per-iteration monitor.
///
/// Alternates the two spectral steps `<dp,dg>/<dg,dg>` (odd iterations) and
/// `<dp,dp>/<dp,dg>` (even iterations), keeping the previous step when the
/// curvature `<dp,dg>` is not positive. Each trial along the projection arc
/// `P(p - a g)` halves `a` until the Armijo condition holds, so the
/// objective never increases.
pub fn bbm_solve_with(
    prob: &CrsProblem,
    spec: &SurrogateSpec,
    start: &LiftedPoint,
    cfg: &SolverConfig,
    mut monitor: Option<Monitor<'_>>,
) -> Result<InnerSolution> {
    let l = spec.lower_bound;
    let s0 = prepare(prob, spec, start, cfg)?;
    let mut p = s0.point;
    let mut ap = s0.ax;
    let mut e = s0.eval;
    let mut trace = vec![e.value];

    if !e.value.is_finite() {
        return Ok(finish(prob, spec, p, ap, e.value, 0, Status::Degenerate, f64::NAN, trace));
    }
    let mut residual = projected_residual(&p, &e, l)?;
    if residual <= cfg.tol * e.grad_norm().max(1.0) {
        let v = e.value;
        return Ok(finish(prob, spec, p, ap, v, 0, Status::Converged, residual, trace));
    }

    let mut step = (1.0 / cfg.l0).clamp(STEP_MIN, STEP_MAX);
    let mut status = Status::MaxIter;
    let mut iterations = 0;

    for k in 1..=cfg.max_iter {
        let mut a = step;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let trial = LiftedPoint::new(
                p.x.iter().zip(&e.grad_x).map(|(x, g)| x - a * g).collect(),
                p.y - a * e.grad_y,
            );
            let cand = project_bhat(&trial, l)?;
            let a_cand = prob.a.apply(&cand.x)?;
            let e_cand = lifted_with_ax(prob, spec, &cand.x, cand.y, &a_cand);
            if e_cand.value.is_finite() {
                let dx: Vec<f64> = cand.x.iter().zip(&p.x).map(|(c, x)| c - x).collect();
                let decrease = dot(&e.grad_x, &dx) + e.grad_y * (cand.y - p.y);
                if e_cand.value <= e.value + ARMIJO_C * decrease {
                    accepted = Some((cand, a_cand, e_cand));
                    break;
                }
            }
            a *= 0.5;
        }
        let Some((cand, a_cand, e_cand)) = accepted else {
            status = Status::Stalled;
            break;
        };
        iterations = k;

        let dpx: Vec<f64> = cand.x.iter().zip(&p.x).map(|(c, x)| c - x).collect();
        let dpy = cand.y - p.y;
        let dgx: Vec<f64> = e_cand.grad_x.iter().zip(&e.grad_x).map(|(c, g)| c - g).collect();
        let dgy = e_cand.grad_y - e.grad_y;
        let sy = dot(&dpx, &dgx) + dpy * dgy;
        if sy > 0.0 {
            let bb = if k % 2 == 1 {
                sy / (dot(&dgx, &dgx) + dgy * dgy)
            } else {
                (dot(&dpx, &dpx) + dpy * dpy) / sy
            };
            if bb.is_finite() {
                step = bb.clamp(STEP_MIN, STEP_MAX);
            }
        }

        p = cand;
        ap = a_cand;
        e = e_cand;
        trace.push(e.value);

        residual = projected_residual(&p, &e, l)?;
        if let Some(m) = monitor.as_mut() {
            let state = IterState {
                iteration: k,
                point: &p,
                ax: &ap,
                value: e.value,
                residual,
            };
            if m(&state) {
                status = Status::Stopped;
                break;
            }
        }
        if residual <= cfg.tol * e.grad_norm().max(1.0) {
            status = Status::Converged;
            break;
        }
    }

    let value = e.value;
    Ok(finish(prob, spec, p, ap, value, iterations, status, residual, trace))
}
