//! Property tests for invariants that cut across modules.

use proptest::prelude::*;

use crate::bench::{check_instance, generate, InstanceSpec};
use crate::linalg::{dot, norm_sq};
use crate::model::lifted_value_grad;
use crate::projections::{project_bhat, project_s};
use crate::solvers::{cauchy_point, dense_oracle_solve, reset_height, Recovery};
use crate::{CrsProblem, LiftedPoint, SurrogateSpec, SymmetricOperator};

const TOL: f64 = 1e-12;

fn lifted(n: usize) -> impl Strategy<Value = LiftedPoint> {
    (prop::collection::vec(-5.0..5.0f64, n), -10.0..10.0f64).prop_map(|(x, y)| LiftedPoint::new(x, y))
}

fn pair() -> impl Strategy<Value = (LiftedPoint, LiftedPoint, f64)> {
    (1usize..6).prop_flat_map(|n| (lifted(n), lifted(n), 0.0..6.0f64))
}

/// Symmetric `n x n` matrix with entries in [-2, 2], together with `b` and
/// `rho`.
fn problem_of(n: usize) -> impl Strategy<Value = CrsProblem> {
    (
        prop::collection::vec(-2.0..2.0f64, n * n),
        prop::collection::vec(-2.0..2.0f64, n),
        0.1..3.0f64,
    )
        .prop_map(move |(m, b, rho)| {
            let mut data = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    data[i * n + j] = 0.5 * (m[i * n + j] + m[j * n + i]);
                }
            }
            CrsProblem::new(SymmetricOperator::dense(n, data).unwrap(), b, rho).unwrap()
        })
}

fn problem() -> impl Strategy<Value = CrsProblem> {
    (1usize..6).prop_flat_map(problem_of)
}

fn scale(p: &LiftedPoint) -> f64 {
    1.0 + norm_sq(&p.x).sqrt() + p.y.abs()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn projections_are_feasible_and_idempotent((p, _q, l) in pair()) {
        let s = project_s(&p);
        prop_assert!(norm_sq(&s.x) <= s.y + TOL * scale(&s));
        prop_assert!(project_s(&s).distance(&s) <= TOL * scale(&s));
        let b = project_bhat(&p, l).unwrap();
        prop_assert!(norm_sq(&b.x) <= b.y + TOL * scale(&b));
        prop_assert!(b.y >= l);
        prop_assert!(project_bhat(&b, l).unwrap().distance(&b) <= TOL * scale(&b));
    }

    #[test]
    fn projections_are_non_expansive((p, q, l) in pair()) {
        let slack = TOL * (scale(&p) + scale(&q));
        prop_assert!(project_s(&p).distance(&project_s(&q)) <= p.distance(&q) + slack);
        let (bp, bq) = (project_bhat(&p, l).unwrap(), project_bhat(&q, l).unwrap());
        prop_assert!(bp.distance(&bq) <= p.distance(&q) + slack);
    }

    /// `<p - P(p), z - P(p)> <= 0` for every feasible `z`.
    #[test]
    fn projection_obtuse_angle((p, q, l) in pair()) {
        let b = project_bhat(&p, l).unwrap();
        let z = project_bhat(&q, l).unwrap();
        let inner: f64 = p.x.iter().zip(&b.x).zip(&z.x).map(|((p, b), z)| (p - b) * (z - b)).sum::<f64>()
            + (p.y - b.y) * (z.y - b.y);
        prop_assert!(inner <= 1e-9 * scale(&p) * scale(&q));
    }

    #[test]
    fn reset_never_increases_the_lifted_objective(prob in problem(), t in 0.0..3.0f64, eps in 1e-4..1e-1f64) {
        let n = prob.dim();
        let x: Vec<f64> = (0..n).map(|i| ((i as f64) * 0.7 + t).sin()).collect();
        let theta = -1.0 - t;
        let spec = SurrogateSpec::sp(theta, eps, prob.rho).unwrap();
        let mut p = project_bhat(&LiftedPoint::new(x, norm_sq(&[t]) + 2.0 * t), spec.lower_bound).unwrap();
        let before = lifted_value_grad(&prob, &spec, &p).unwrap().value;
        reset_height(&spec, prob.rho, &mut p);
        let after = lifted_value_grad(&prob, &spec, &p).unwrap().value;
        prop_assert!(after <= before + TOL * before.abs().max(1.0));
        prop_assert!(norm_sq(&p.x) <= p.y + TOL * scale(&p));
        prop_assert!(p.y >= spec.lower_bound - TOL);
    }

    /// With the exact shift the recovered point never costs more than the
    /// lifted objective at the (reset) lifted point.
    #[test]
    fn recovery_does_not_increase_the_objective(prob in problem(), seed in 0u64..1000) {
        let oracle = dense_oracle_solve(&prob).unwrap();
        prop_assume!(oracle.lambda_min < -1e-3);
        let spec = SurrogateSpec::exact(oracle.lambda_min, prob.rho).unwrap();
        let n = prob.dim();
        let x: Vec<f64> = (0..n).map(|i| ((seed as f64) + 1.3 * i as f64).cos()).collect();
        let mut p = project_bhat(&LiftedPoint::new(x, (seed % 7) as f64), spec.lower_bound).unwrap();
        reset_height(&spec, prob.rho, &mut p);
        let f3 = lifted_value_grad(&prob, &spec, &p).unwrap().value;
        let rec = Recovery::new(&prob, &oracle.v_min).unwrap();
        let x = rec.recover(&prob, &spec, &p).unwrap();
        prop_assert!((norm_sq(&x) - p.y).abs() <= 1e-9 * p.y.max(1.0));
        let f1 = prob.f1_value(&x).unwrap();
        prop_assert!(f1 <= f3 + 1e-9 * f3.abs().max(1.0), "{f1} > {f3}");
        prop_assert!(f1 >= oracle.fval - 1e-9 * oracle.fval.abs().max(1.0));
    }

    #[test]
    fn cauchy_point_minimizes_along_the_gradient(prob in problem(), ts in prop::collection::vec(0.0..10.0f64, 8)) {
        prop_assume!(norm_sq(&prob.b) > 1e-6);
        let s = cauchy_point(&prob.a, &prob.b, prob.rho).unwrap();
        let m = |v: &[f64]| prob.f1_value(v).unwrap();
        let ms = m(&s);
        prop_assert!(ms <= 0.0);
        prop_assert!(dot(&s, &prob.b) <= 0.0);
        for t in ts {
            let v: Vec<f64> = prob.b.iter().map(|g| -t * g).collect();
            prop_assert!(ms <= m(&v) + 1e-10 * ms.abs().max(1.0));
        }
    }

    #[test]
    fn oracle_is_a_global_minimizer(prob in problem(), pts in prop::collection::vec(-3.0..3.0f64, 40)) {
        let o = dense_oracle_solve(&prob).unwrap();
        let n = prob.dim();
        for chunk in pts.chunks(n) {
            if chunk.len() == n {
                prop_assert!(o.fval <= prob.f1_value(chunk).unwrap() + 1e-10);
            }
        }
        // Stationarity and the multiplier condition.
        let g = prob.f1_grad(&o.x).unwrap();
        prop_assert!(norm_sq(&g).sqrt() <= 1e-7 * (1.0 + norm_sq(&prob.b).sqrt()));
        prop_assert!(o.lambda >= -o.lambda_min - 1e-8);
    }

    /// Midpoint convexity of the exact lifted objective on the feasible set.
    #[test]
    fn exact_lifted_objective_is_convex(
        (prob, p, q) in (1usize..6).prop_flat_map(|n| (problem_of(n), lifted(n), lifted(n)))
    ) {
        let oracle = dense_oracle_solve(&prob).unwrap();
        prop_assume!(oracle.lambda_min < 0.0);
        let spec = SurrogateSpec::exact(oracle.lambda_min, prob.rho).unwrap();
        let p = project_bhat(&p, spec.lower_bound).unwrap();
        let q = project_bhat(&q, spec.lower_bound).unwrap();
        let mid = LiftedPoint::new(
            p.x.iter().zip(&q.x).map(|(a, b)| 0.5 * (a + b)).collect(),
            0.5 * (p.y + q.y),
        );
        let f = |z: &LiftedPoint| lifted_value_grad(&prob, &spec, z).unwrap().value;
        let (fp, fq, fm) = (f(&p), f(&q), f(&mid));
        prop_assert!(fm <= 0.5 * (fp + fq) + 1e-9 * (fp.abs() + fq.abs()).max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn generated_instances_satisfy_their_certificate(
        blocks in 1usize..5,
        k in 1usize..6,
        hard in any::<bool>(),
        log_param in -3.0..3.0f64,
        seed in any::<u64>(),
    ) {
        let n = blocks * k;
        prop_assume!(n >= 2);
        let spec = if hard {
            InstanceSpec::hard(n, k, 10f64.powf(log_param.min(-0.5)), seed)
        } else {
            InstanceSpec::easy(n, k, 1.0 + 10f64.powf(log_param), seed)
        };
        let inst = generate(&spec).unwrap();
        prop_assert!(check_instance(&inst).is_ok());
        prop_assert!((inst.problem.f1_value(&inst.x_star).unwrap() + 1.0).abs() <= 1e-10);
        let o = dense_oracle_solve(&inst.problem).unwrap();
        prop_assert!((o.fval + 1.0).abs() <= 1e-8, "oracle {}", o.fval);
        prop_assert_eq!(inst.problem.a.nnz(), n * k);
        let again = generate(&spec).unwrap();
        prop_assert_eq!(again.problem.b, inst.problem.b);
    }
}
