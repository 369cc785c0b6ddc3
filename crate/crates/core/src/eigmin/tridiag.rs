//! Symmetric tridiagonal eigen-helpers used on the Lanczos matrix.
//!
//! `alpha` is the diagonal (length m) and `beta` the off-diagonal (length
//! at least m - 1; extra trailing entries are ignored).

/// Number of eigenvalues strictly less than `x` (Sturm sequence count).
pub fn sturm_count(alpha: &[f64], beta: &[f64], x: f64) -> usize {
    let m = alpha.len();
    let tiny = f64::MIN_POSITIVE.sqrt();
    let mut count = 0;
    let mut q = 1.0;
    for i in 0..m {
        let b2 = if i == 0 { 0.0 } else { beta[i - 1] * beta[i - 1] };
        q = alpha[i] - x - if i == 0 { 0.0 } else { b2 / q };
        if q == 0.0 {
            q = -tiny;
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

fn gershgorin(alpha: &[f64], beta: &[f64]) -> (f64, f64) {
    let m = alpha.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..m {
        let r = if i > 0 { beta[i - 1].abs() } else { 0.0 }
            + if i + 1 < m { beta[i].abs() } else { 0.0 };
        lo = lo.min(alpha[i] - r);
        hi = hi.max(alpha[i] + r);
    }
    (lo, hi)
}

/// The `k`-th smallest eigenvalue (0-based) by bisection on the Sturm count.
pub fn kth_eigenvalue(alpha: &[f64], beta: &[f64], k: usize) -> f64 {
    assert!(k < alpha.len());
    let (mut lo, mut hi) = gershgorin(alpha, beta);
    let pad = f64::EPSILON * lo.abs().max(hi.abs()).max(1.0);
    lo -= pad;
    hi += pad;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        // count(mid) > k  <=>  lambda_k < mid
        if sturm_count(alpha, beta, mid) > k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn largest_eigenvalue(alpha: &[f64], beta: &[f64]) -> f64 {
    kth_eigenvalue(alpha, beta, alpha.len() - 1)
}

/// Every eigenvalue in ascending order.
pub fn eigenvalues(alpha: &[f64], beta: &[f64]) -> Vec<f64> {
    (0..alpha.len()).map(|k| kth_eigenvalue(alpha, beta, k)).collect()
}

/// Unit eigenvector for the (accurately computed) eigenvalue `mu`, by
/// inverse iteration with a pivoted tridiagonal LU.
pub fn eigenvector(alpha: &[f64], beta: &[f64], mu: f64) -> Vec<f64> {
    let m = alpha.len();
    if m == 1 {
        return vec![1.0];
    }
    let norm = alpha
        .iter()
        .map(|a| a.abs())
        .chain(beta[..m - 1].iter().map(|b| 2.0 * b.abs()))
        .fold(0.0_f64, f64::max)
        .max(f64::MIN_POSITIVE);
    let tiny = f64::EPSILON * norm;

    // LU with partial pivoting of T - mu I, LAPACK gttrf layout.
    let mut dl: Vec<f64> = beta[..m - 1].to_vec();
    let mut d: Vec<f64> = alpha.iter().map(|a| a - mu).collect();
    let mut du: Vec<f64> = beta[..m - 1].to_vec();
    let mut du2 = vec![0.0; m.saturating_sub(2)];
    let mut swapped = vec![false; m - 1];
    for i in 0..m - 1 {
        if d[i].abs() >= dl[i].abs() {
            if d[i] == 0.0 {
                d[i] = tiny;
            }
            let fact = dl[i] / d[i];
            dl[i] = fact;
            d[i + 1] -= fact * du[i];
        } else {
            let fact = d[i] / dl[i];
            d[i] = dl[i];
            dl[i] = fact;
            let temp = du[i];
            du[i] = d[i + 1];
            d[i + 1] = temp - fact * d[i + 1];
            if i + 2 < m {
                du2[i] = du[i + 1];
                du[i + 1] *= -fact;
            }
            swapped[i] = true;
        }
    }
    for di in d.iter_mut() {
        if di.abs() < tiny {
            *di = if *di < 0.0 { -tiny } else { tiny };
        }
    }

    let solve = |b: &mut [f64]| {
        for i in 0..m - 1 {
            if swapped[i] {
                let temp = b[i];
                b[i] = b[i + 1];
                b[i + 1] = temp - dl[i] * b[i];
            } else {
                b[i + 1] -= dl[i] * b[i];
            }
        }
        b[m - 1] /= d[m - 1];
        b[m - 2] = (b[m - 2] - du[m - 2] * b[m - 1]) / d[m - 2];
        for i in (0..m.saturating_sub(2)).rev() {
            b[i] = (b[i] - du[i] * b[i + 1] - du2[i] * b[i + 2]) / d[i];
        }
    };

    // Deterministic, generic start vector.
    let mut y: Vec<f64> = (0..m).map(|i| 1.0 + 0.1 * ((i as f64) * 0.7).sin()).collect();
    for _ in 0..3 {
        solve(&mut y);
        let nrm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(nrm.is_finite() && nrm > 0.0) {
            break;
        }
        y.iter_mut().for_each(|v| *v /= nrm);
    }
    y
}
