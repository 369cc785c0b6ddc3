//! Smooth test functions with exact Hessians.

use crate::operators::SymmetricOperator;

/// Value, gradient and Hessian oracles of a twice differentiable function.
pub trait SmoothObjective {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> Vec<f64>;
    fn hessian(&self, x: &[f64]) -> SymmetricOperator;
    fn name(&self) -> String {
        "objective".into()
    }
}

fn tridiagonal(diag: &[f64], off: &[f64]) -> SymmetricOperator {
    let n = diag.len();
    let mut t = Vec::with_capacity(3 * n);
    for i in 0..n {
        t.push((i, i, diag[i]));
        if i + 1 < n {
            t.push((i, i + 1, off[i]));
            t.push((i + 1, i, off[i]));
        }
    }
    SymmetricOperator::from_triplets(n, &t).expect("tridiagonal pattern is symmetric")
}

/// `sum_i 100 (x_{i+1} - x_i^2)^2 + (1 - x_i)^2`.
#[derive(Debug, Clone, Copy)]
pub struct ChainedRosenbrock {
    pub n: usize,
}

impl ChainedRosenbrock {
    /// `(-1.2, 1, -1.2, 1, ...)`.
    pub fn standard_start(&self) -> Vec<f64> {
        (0..self.n).map(|i| if i % 2 == 0 { -1.2 } else { 1.0 }).collect()
    }
}

impl SmoothObjective for ChainedRosenbrock {
    fn dim(&self) -> usize {
        self.n
    }

    fn value(&self, x: &[f64]) -> f64 {
        x.windows(2)
            .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2))
            .sum()
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.n];
        for i in 0..self.n.saturating_sub(1) {
            let r = x[i + 1] - x[i] * x[i];
            g[i] += -400.0 * x[i] * r - 2.0 * (1.0 - x[i]);
            g[i + 1] += 200.0 * r;
        }
        g
    }

    fn hessian(&self, x: &[f64]) -> SymmetricOperator {
        let n = self.n;
        let mut d = vec![0.0; n];
        let mut o = vec![0.0; n.saturating_sub(1)];
        for i in 0..n.saturating_sub(1) {
            d[i] += 1200.0 * x[i] * x[i] - 400.0 * x[i + 1] + 2.0;
            d[i + 1] += 200.0;
            o[i] = -400.0 * x[i];
        }
        tridiagonal(&d, &o)
    }

    fn name(&self) -> String {
        "rosenbrock".into()
    }
}

/// Double wells with a cosine ripple, coupled to their neighbours:
/// `sum_i [1/4 (x_i^2 - 1)^2 + a (1 - cos(w x_i))] + c/2 sum_i (x_{i+1} - x_i)^2`.
///
/// The origin is a saddle point with negative curvature, so runs started
/// near it see small gradients together with an indefinite Hessian.
#[derive(Debug, Clone, Copy)]
pub struct Humps {
    pub n: usize,
    pub a: f64,
    pub omega: f64,
    pub c: f64,
}

impl Humps {
    pub fn new(n: usize) -> Self {
        Self { n, a: 0.05, omega: 4.0, c: 0.1 }
    }

    /// A small deterministic perturbation of the origin.
    pub fn standard_start(&self) -> Vec<f64> {
        (0..self.n).map(|i| 1e-3 * ((i + 1) as f64).sin()).collect()
    }
}

impl SmoothObjective for Humps {
    fn dim(&self) -> usize {
        self.n
    }

    fn value(&self, x: &[f64]) -> f64 {
        let wells: f64 = x
            .iter()
            .map(|v| 0.25 * (v * v - 1.0).powi(2) + self.a * (1.0 - (self.omega * v).cos()))
            .sum();
        let coupling: f64 = x.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum();
        wells + 0.5 * self.c * coupling
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g: Vec<f64> = x
            .iter()
            .map(|v| v * (v * v - 1.0) + self.a * self.omega * (self.omega * v).sin())
            .collect();
        for i in 0..self.n.saturating_sub(1) {
            let d = self.c * (x[i + 1] - x[i]);
            g[i] -= d;
            g[i + 1] += d;
        }
        g
    }

    fn hessian(&self, x: &[f64]) -> SymmetricOperator {
        let n = self.n;
        let w2 = self.omega * self.omega;
        let mut d: Vec<f64> = x
            .iter()
            .map(|v| 3.0 * v * v - 1.0 + self.a * w2 * (self.omega * v).cos())
            .collect();
        for i in 0..n.saturating_sub(1) {
            d[i] += self.c;
            d[i + 1] += self.c;
        }
        tridiagonal(&d, &vec![-self.c; n.saturating_sub(1)])
    }

    fn name(&self) -> String {
        "humps".into()
    }
}

/// `1/2 |x|^2`.
#[derive(Debug, Clone, Copy)]
pub struct Sphere {
    pub n: usize,
}

impl SmoothObjective for Sphere {
    fn dim(&self) -> usize {
        self.n
    }
    fn value(&self, x: &[f64]) -> f64 {
        0.5 * x.iter().map(|v| v * v).sum::<f64>()
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        x.to_vec()
    }
    fn hessian(&self, _x: &[f64]) -> SymmetricOperator {
        SymmetricOperator::identity(self.n)
    }
    fn name(&self) -> String {
        "sphere".into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::LinearOperator;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn check_derivatives(obj: &dyn SmoothObjective, x: &[f64]) {
        let n = obj.dim();
        let g = obj.gradient(x);
        let h = obj.hessian(x);
        let step = 1e-6;
        for i in 0..n {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[i] += step;
            xm[i] -= step;
            let fd = (obj.value(&xp) - obj.value(&xm)) / (2.0 * step);
            assert!((fd - g[i]).abs() <= 1e-6 * g[i].abs().max(1.0), "grad {i}: {fd} vs {}", g[i]);
            let gp = obj.gradient(&xp);
            let gm = obj.gradient(&xm);
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            let col = h.apply(&e).unwrap();
            for j in 0..n {
                let fd = (gp[j] - gm[j]) / (2.0 * step);
                assert!((fd - col[j]).abs() <= 1e-5 * col[j].abs().max(1.0), "hess ({j},{i})");
            }
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..5 {
            let x: Vec<f64> = (0..6).map(|_| rng.random_range(-1.5..1.5)).collect();
            check_derivatives(&ChainedRosenbrock { n: 6 }, &x);
            check_derivatives(&Humps::new(6), &x);
            check_derivatives(&Sphere { n: 6 }, &x);
        }
    }

    #[test]
    fn rosenbrock_minimum() {
        let f = ChainedRosenbrock { n: 5 };
        assert_eq!(f.value(&[1.0; 5]), 0.0);
        assert!(f.gradient(&[1.0; 5]).iter().all(|v| *v == 0.0));
        assert_eq!(f.standard_start()[..3], [-1.2, 1.0, -1.2]);
    }

    #[test]
    fn humps_origin_is_a_saddle() {
        let f = Humps::new(4);
        assert!(f.gradient(&[0.0; 4]).iter().all(|v| *v == 0.0));
        let h = f.hessian(&[0.0; 4]);
        let v = h.apply(&[1.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(v[0] < 0.0);
    }
}
