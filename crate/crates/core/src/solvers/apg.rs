//! Accelerated projected gradient with backtracking and function-value
//! restart.

use super::{finish, prepare, projected_residual, InnerSolution, IterState, Monitor, SolverConfig, Status};
use crate::error::Result;
use crate::linalg::dot;
use crate::model::{lifted_with_ax, CrsProblem, SurrogateSpec};
use crate::operators::LinearOperator;
use crate::projections::{project_bhat, LiftedPoint};

const MAX_BACKTRACKS: usize = 100;

pub fn apg_solve(
    prob: &CrsProblem,
    spec: &SurrogateSpec,
    start: &LiftedPoint,
    cfg: &SolverConfig,
) -> Result<InnerSolution> {
    apg_solve_with(prob, spec, start, cfg, None)
}

/// [`apg_solve`] with a per-iteration monitor.
///
/// One product with `A` per backtracking trial: the extrapolated point's
/// product is formed by linearity from the two most recent iterates.
pub fn apg_solve_with(
    prob: &CrsProblem,
    spec: &SurrogateSpec,
    start: &LiftedPoint,
    cfg: &SolverConfig,
    mut monitor: Option<Monitor<'_>>,
) -> Result<InnerSolution> {
    let l = spec.lower_bound;
    let s0 = prepare(prob, spec, start, cfg)?;
    let mut alpha = s0.point;
    let mut a_alpha = s0.ax;
    let mut e_alpha = s0.eval;
    let mut trace = vec![e_alpha.value];

    if !e_alpha.value.is_finite() {
        return Ok(finish(prob, spec, alpha, a_alpha, e_alpha.value, 0, Status::Degenerate, f64::NAN, trace));
    }
    let mut residual = projected_residual(&alpha, &e_alpha, l)?;
    if residual <= cfg.tol * e_alpha.grad_norm().max(1.0) {
        let v = e_alpha.value;
        return Ok(finish(prob, spec, alpha, a_alpha, v, 0, Status::Converged, residual, trace));
    }

    let mut beta = alpha.clone();
    let mut e_beta = e_alpha.clone();
    let mut t = 1.0_f64;
    let mut lip = cfg.l0;
    let mut status = Status::MaxIter;
    let mut iterations = 0;

    for k in 1..=cfg.max_iter {
        let mut accepted = None;
        let mut non_finite = false;
        for _ in 0..MAX_BACKTRACKS {
            let step = LiftedPoint::new(
                beta.x.iter().zip(&e_beta.grad_x).map(|(b, g)| b - g / lip).collect(),
                beta.y - e_beta.grad_y / lip,
            );
            let cand = project_bhat(&step, l)?;
            let a_cand = prob.a.apply(&cand.x)?;
            let e_cand = lifted_with_ax(prob, spec, &cand.x, cand.y, &a_cand);
            if !e_cand.value.is_finite() {
                non_finite = true;
                break;
            }
            let dx: Vec<f64> = cand.x.iter().zip(&beta.x).map(|(a, b)| a - b).collect();
            let dy = cand.y - beta.y;
            let lin = dot(&e_beta.grad_x, &dx) + e_beta.grad_y * dy;
            let quad = 0.5 * lip * (dot(&dx, &dx) + dy * dy);
            let slack = 1e-13 * e_beta.value.abs().max(1.0);
            if e_cand.value <= e_beta.value + lin + quad + slack {
                accepted = Some((cand, a_cand, e_cand));
                break;
            }
            lip *= cfg.xi;
        }
        let Some((cand, a_cand, e_cand)) = accepted else {
            status = if non_finite { Status::Degenerate } else { Status::Stalled };
            break;
        };
        iterations = k;
        let f_prev = e_alpha.value;
        let alpha_prev = std::mem::replace(&mut alpha, cand);
        let a_prev = std::mem::replace(&mut a_alpha, a_cand);
        e_alpha = e_cand;
        trace.push(e_alpha.value);

        residual = projected_residual(&alpha, &e_alpha, l)?;
        if let Some(m) = monitor.as_mut() {
            let state = IterState {
                iteration: k,
                point: &alpha,
                ax: &a_alpha,
                value: e_alpha.value,
                residual,
            };
            if m(&state) {
                status = Status::Stopped;
                break;
            }
        }
        if residual <= cfg.tol * e_alpha.grad_norm().max(1.0) {
            status = Status::Converged;
            break;
        }

        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let mut c = (t - 1.0) / t_next;
        if cfg.restart && e_alpha.value > f_prev {
            c = 0.0;
        }
        let y_beta = alpha.y + c * (alpha.y - alpha_prev.y);
        if c == 0.0 || y_beta < 0.0 {
            // Restart, or extrapolation left the domain of y^{3/2}.
            t = 1.0;
            beta = alpha.clone();
            e_beta = e_alpha.clone();
        } else {
            t = t_next;
            beta = LiftedPoint::new(
                alpha.x.iter().zip(&alpha_prev.x).map(|(a, p)| a + c * (a - p)).collect(),
                y_beta,
            );
            let a_beta: Vec<f64> = a_alpha.iter().zip(&a_prev).map(|(a, p)| a + c * (a - p)).collect();
            e_beta = lifted_with_ax(prob, spec, &beta.x, beta.y, &a_beta);
        }
    }

    let value = e_alpha.value;
    Ok(finish(prob, spec, alpha, a_alpha, value, iterations, status, residual, trace))
}
