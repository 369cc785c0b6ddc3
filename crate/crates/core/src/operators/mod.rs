//! Matrix-free symmetric linear operators.
//!
//! Every solver in this crate touches the problem matrix only through
//! [`LinearOperator::apply_into`], so the number of matrix-vector products
//! is the natural cost measure. [`SymmetricOperator`] keeps an atomic counter
//! of those products; shifted views ([`Shifted`]) forward to the counter of
//! the operator they wrap, so a whole solve can be accounted for by reading
//! one counter before and after.

mod io;

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{check_dim, CrsError, Result};

pub use io::{read_dense_text, read_matrix, read_matrix_market, read_vector};

/// Relative tolerance for accepting a nearly symmetric input matrix.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// A symmetric linear map `R^n -> R^n`.
pub trait LinearOperator: Send + Sync {
    fn dim(&self) -> usize;

    /// Writes `op * v` into `out` and counts one matrix-vector product.
    fn apply_into(&self, v: &[f64], out: &mut [f64]) -> Result<()>;

    /// An upper bound on the spectral norm, computable in one pass over the
    /// stored entries.
    fn norm_upper_bound(&self) -> f64;

    /// Number of products performed so far.
    fn matvec_count(&self) -> u64;

    fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim()];
        self.apply_into(v, &mut out)?;
        Ok(out)
    }
}

#[derive(Debug, Clone)]
enum Storage {
    /// Full row-major `n * n` array.
    Dense(Vec<f64>),
    Csr {
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<f64>,
    },
}

/// A symmetric matrix in dense or CSR storage with a product counter.
#[derive(Debug)]
pub struct SymmetricOperator {
    dim: usize,
    storage: Storage,
    matvecs: AtomicU64,
}

impl Clone for SymmetricOperator {
    fn clone(&self) -> Self {
        Self {
            dim: self.dim,
            storage: self.storage.clone(),
            matvecs: AtomicU64::new(self.matvec_count()),
        }
    }
}

impl SymmetricOperator {
    fn with_storage(dim: usize, storage: Storage) -> Self {
        Self {
            dim,
            storage,
            matvecs: AtomicU64::new(0),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![1.0; n])
    }

    pub fn zeros(n: usize) -> Self {
        Self::with_storage(
            n,
            Storage::Csr {
                row_ptr: vec![0; n + 1],
                col_idx: Vec::new(),
                values: Vec::new(),
            },
        )
    }

    /// Sparse diagonal matrix.
    pub fn diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self::with_storage(
            n,
            Storage::Csr {
                row_ptr: (0..=n).collect(),
                col_idx: (0..n).collect(),
                values: diag.to_vec(),
            },
        )
    }

    /// Dense symmetric matrix from a full row-major array.
    ///
    /// Inputs whose asymmetry exceeds [`SYMMETRY_TOL`] relative to the largest
    /// entry are rejected; accepted inputs are symmetrized exactly.
    pub fn dense(n: usize, mut data: Vec<f64>) -> Result<Self> {
        check_dim(n * n, data.len())?;
        if let Some(bad) = data.iter().position(|v| !v.is_finite()) {
            return Err(CrsError::InvalidArgument(format!(
                "non-finite matrix entry at ({}, {})",
                bad / n.max(1),
                bad % n.max(1)
            )));
        }
        let scale = data.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        for i in 0..n {
            for j in (i + 1)..n {
                let (a, b) = (data[i * n + j], data[j * n + i]);
                let diff = (a - b).abs();
                if diff > SYMMETRY_TOL * scale {
                    return Err(CrsError::NotSymmetric {
                        row: i,
                        col: j,
                        diff,
                    });
                }
                let avg = 0.5 * (a + b);
                data[i * n + j] = avg;
                data[j * n + i] = avg;
            }
        }
        Ok(Self::with_storage(n, Storage::Dense(data)))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            check_dim(n, row.len())?;
            data.extend_from_slice(row);
        }
        Self::dense(n, data)
    }

    /// Sparse symmetric matrix from `(row, col, value)` triplets holding both
    /// triangles. Duplicates are summed.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut entries: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for &(i, j, v) in triplets {
            if i >= n || j >= n {
                return Err(CrsError::InvalidArgument(format!(
                    "entry ({i}, {j}) outside a {n}x{n} matrix"
                )));
            }
            if !v.is_finite() {
                return Err(CrsError::InvalidArgument(format!(
                    "non-finite entry at ({i}, {j})"
                )));
            }
            *entries.entry((i, j)).or_insert(0.0) += v;
        }
        let scale = entries.values().fold(0.0_f64, |m, v| m.max(v.abs()));
        for (&(i, j), &a) in &entries {
            if i < j {
                let b = entries.get(&(j, i)).copied().unwrap_or(0.0);
                let diff = (a - b).abs();
                if diff > SYMMETRY_TOL * scale {
                    return Err(CrsError::NotSymmetric {
                        row: i,
                        col: j,
                        diff,
                    });
                }
            } else if i > j && !entries.contains_key(&(j, i)) {
                let diff = a.abs();
                if diff > SYMMETRY_TOL * scale {
                    return Err(CrsError::NotSymmetric {
                        row: j,
                        col: i,
                        diff,
                    });
                }
            }
        }

        let mut sym: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for (&(i, j), &a) in &entries {
            let b = entries.get(&(j, i)).copied().unwrap_or(0.0);
            let v = 0.5 * (a + b);
            sym.insert((i, j), v);
            sym.insert((j, i), v);
        }

        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::with_capacity(sym.len());
        let mut values = Vec::with_capacity(sym.len());
        for (&(i, j), &v) in &sym {
            if v == 0.0 {
                continue;
            }
            row_ptr[i + 1] += 1;
            col_idx.push(j);
            values.push(v);
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(Self::with_storage(
            n,
            Storage::Csr {
                row_ptr,
                col_idx,
                values,
            },
        ))
    }

    /// Number of stored entries.
    pub fn nnz(&self) -> usize {
        match &self.storage {
            Storage::Dense(d) => d.len(),
            Storage::Csr { values, .. } => values.len(),
        }
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.storage, Storage::Dense(_))
    }

    /// Full row-major copy, for small-scale oracles and I/O.
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.dim;
        match &self.storage {
            Storage::Dense(d) => d.clone(),
            Storage::Csr {
                row_ptr,
                col_idx,
                values,
            } => {
                let mut out = vec![0.0; n * n];
                for i in 0..n {
                    for k in row_ptr[i]..row_ptr[i + 1] {
                        out[i * n + col_idx[k]] += values[k];
                    }
                }
                out
            }
        }
    }

    /// Entry `(i, j)`; linear in the row length for sparse storage.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        match &self.storage {
            Storage::Dense(d) => d[i * self.dim + j],
            Storage::Csr {
                row_ptr,
                col_idx,
                values,
            } => (row_ptr[i]..row_ptr[i + 1])
                .filter(|&k| col_idx[k] == j)
                .map(|k| values[k])
                .sum(),
        }
    }

    /// Max absolute row sum of `self + shift * I`.
    pub fn shifted_inf_norm(&self, shift: f64) -> f64 {
        let n = self.dim;
        let mut best = 0.0_f64;
        match &self.storage {
            Storage::Dense(d) => {
                for i in 0..n {
                    let row = &d[i * n..(i + 1) * n];
                    let s: f64 = row
                        .iter()
                        .enumerate()
                        .map(|(j, v)| if j == i { (v + shift).abs() } else { v.abs() })
                        .sum();
                    best = best.max(s);
                }
            }
            Storage::Csr {
                row_ptr,
                col_idx,
                values,
            } => {
                for i in 0..n {
                    let mut off = 0.0;
                    let mut diag = shift;
                    for k in row_ptr[i]..row_ptr[i + 1] {
                        if col_idx[k] == i {
                            diag += values[k];
                        } else {
                            off += values[k].abs();
                        }
                    }
                    best = best.max(off + diag.abs());
                }
            }
        }
        best
    }

    /// Lazy view of `self + shift * I`.
    pub fn shifted(&self, shift: f64) -> Shifted<'_> {
        Shifted { base: self, shift }
    }

    /// Scales every entry in place.
    pub fn scale_in_place(&mut self, factor: f64) {
        match &mut self.storage {
            Storage::Dense(d) => d.iter_mut().for_each(|v| *v *= factor),
            Storage::Csr { values, .. } => values.iter_mut().for_each(|v| *v *= factor),
        }
    }

    pub fn reset_matvec_count(&self) {
        self.matvecs.store(0, Ordering::Relaxed);
    }
}

impl LinearOperator for SymmetricOperator {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply_into(&self, v: &[f64], out: &mut [f64]) -> Result<()> {
        check_dim(self.dim, v.len())?;
        check_dim(self.dim, out.len())?;
        let n = self.dim;
        match &self.storage {
            Storage::Dense(d) => {
                for (i, o) in out.iter_mut().enumerate() {
                    let row = &d[i * n..(i + 1) * n];
                    *o = row.iter().zip(v).map(|(a, x)| a * x).sum();
                }
            }
            Storage::Csr {
                row_ptr,
                col_idx,
                values,
            } => {
                for (i, o) in out.iter_mut().enumerate() {
                    let mut acc = 0.0;
                    for k in row_ptr[i]..row_ptr[i + 1] {
                        acc += values[k] * v[col_idx[k]];
                    }
                    *o = acc;
                }
            }
        }
        self.matvecs.fetch_add(1, Ordering::Relaxed);
        Ok(())
    }

    fn norm_upper_bound(&self) -> f64 {
        self.shifted_inf_norm(0.0)
    }

    fn matvec_count(&self) -> u64 {
        self.matvecs.load(Ordering::Relaxed)
    }
}

/// `base + shift * I` without materializing it. Products are charged to
/// `base`'s counter.
#[derive(Debug, Clone, Copy)]
pub struct Shifted<'a> {
    base: &'a SymmetricOperator,
    shift: f64,
}

impl Shifted<'_> {
    pub fn shift(&self) -> f64 {
        self.shift
    }
}

impl LinearOperator for Shifted<'_> {
    fn dim(&self) -> usize {
        self.base.dim
    }

    fn apply_into(&self, v: &[f64], out: &mut [f64]) -> Result<()> {
        self.base.apply_into(v, out)?;
        if self.shift != 0.0 {
            crate::linalg::axpy(self.shift, v, out);
        }
        Ok(())
    }

    fn norm_upper_bound(&self) -> f64 {
        self.base.shifted_inf_norm(self.shift)
    }

    fn matvec_count(&self) -> u64 {
        self.base.matvec_count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_sparse(n: usize, density: f64, seed: u64) -> SymmetricOperator {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut t = Vec::new();
        for i in 0..n {
            for j in i..n {
                if i == j || rng.random::<f64>() < density {
                    let v: f64 = rng.random_range(-1.0..1.0);
                    t.push((i, j, v));
                    if i != j {
                        t.push((j, i, v));
                    }
                }
            }
        }
        SymmetricOperator::from_triplets(n, &t).unwrap()
    }

    fn spectral_radius(op: &SymmetricOperator) -> f64 {
        let n = op.dim();
        let m = DMatrix::from_row_slice(n, n, &op.to_dense());
        m.symmetric_eigenvalues().iter().fold(0.0_f64, |a, v| a.max(v.abs()))
    }

    #[test]
    fn apply_examples() {
        let id = SymmetricOperator::identity(2);
        assert_eq!(id.apply(&[3.0, -1.0]).unwrap(), vec![3.0, -1.0]);

        let d = SymmetricOperator::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        assert_eq!(d.apply(&[1.0, 0.0]).unwrap(), vec![2.0, 1.0]);

        let s = SymmetricOperator::diagonal(&[-1.0, 0.0, 2.0]);
        assert_eq!(s.apply(&[1.0, 1.0, 1.0]).unwrap(), vec![-1.0, 0.0, 2.0]);
    }

    #[test]
    fn apply_rejects_wrong_length() {
        let op = SymmetricOperator::identity(3);
        let err = op.apply(&[1.0, 2.0]).unwrap_err();
        assert!(matches!(
            err,
            CrsError::DimensionMismatch {
                expected: 3,
                found: 2
            }
        ));
        assert_eq!(op.matvec_count(), 0);
    }

    #[test]
    fn counter_increments_once_per_apply() {
        let op = random_sparse(20, 0.2, 1);
        let v = vec![1.0; 20];
        for k in 1..=5u64 {
            op.apply(&v).unwrap();
            assert_eq!(op.matvec_count(), k);
        }
        let sh = op.shifted(0.5);
        sh.apply(&v).unwrap();
        assert_eq!(op.matvec_count(), 6);
        assert_eq!(sh.matvec_count(), 6);
    }

    #[test]
    fn norm_bound_examples() {
        assert_eq!(
            SymmetricOperator::diagonal(&[-1.0, 0.0, 2.0]).norm_upper_bound(),
            2.0
        );
        let d = SymmetricOperator::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        assert_eq!(d.norm_upper_bound(), 3.0);
    }

    #[test]
    fn norm_bound_dominates_spectral_norm() {
        for seed in 0..5 {
            let op = random_sparse(100, 0.05, seed);
            let bound = op.norm_upper_bound();
            assert!(bound >= spectral_radius(&op) - 1e-12);
            for shift in [-2.0, 0.3, 5.0] {
                let sh = op.shifted(shift);
                let n = op.dim();
                let mut dense = op.to_dense();
                for i in 0..n {
                    dense[i * n + i] += shift;
                }
                let shifted = SymmetricOperator::dense(n, dense).unwrap();
                assert!(sh.norm_upper_bound() >= spectral_radius(&shifted) - 1e-12);
            }
        }
    }

    #[test]
    fn shifted_apply_matches_axpy() {
        let op = random_sparse(30, 0.1, 9);
        let v: Vec<f64> = (0..30).map(|i| (i as f64).sin()).collect();
        let base = op.apply(&v).unwrap();
        let c = -1.75;
        let shifted = op.shifted(c).apply(&v).unwrap();
        for i in 0..30 {
            let expect = base[i] + c * v[i];
            assert!((shifted[i] - expect).abs() <= 1e-12 * expect.abs().max(1.0));
        }
    }

    #[test]
    fn linear_and_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let op = random_sparse(40, 0.1, 4);
        let dense_rows: Vec<Vec<f64>> = op.to_dense().chunks(40).map(|r| r.to_vec()).collect();
        let dense = SymmetricOperator::from_rows(&dense_rows).unwrap();
        for _ in 0..10 {
            let u: Vec<f64> = (0..40).map(|_| rng.random_range(-1.0..1.0)).collect();
            let w: Vec<f64> = (0..40).map(|_| rng.random_range(-1.0..1.0)).collect();
            let (a, b) = (0.7, -2.3);
            let comb: Vec<f64> = u.iter().zip(&w).map(|(x, y)| a * x + b * y).collect();
            for o in [&op, &dense] {
                let lhs = o.apply(&comb).unwrap();
                let (au, aw) = (o.apply(&u).unwrap(), o.apply(&w).unwrap());
                for i in 0..40 {
                    assert!((lhs[i] - (a * au[i] + b * aw[i])).abs() < 1e-12);
                }
                let l = crate::linalg::dot(&au, &w);
                let r = crate::linalg::dot(&u, &aw);
                let scale = crate::linalg::norm(&u) * crate::linalg::norm(&w);
                assert!((l - r).abs() <= 1e-10 * scale);
            }
        }
    }

    #[test]
    fn rejects_asymmetric_input() {
        let err = SymmetricOperator::from_rows(&[vec![1.0, 2.0], vec![2.1, 1.0]]).unwrap_err();
        assert!(matches!(err, CrsError::NotSymmetric { .. }));
        let err = SymmetricOperator::from_triplets(2, &[(0, 1, 1.0)]).unwrap_err();
        assert!(matches!(err, CrsError::NotSymmetric { .. }));
        // Tiny asymmetry is accepted and removed.
        let op =
            SymmetricOperator::from_rows(&[vec![1.0, 2.0], vec![2.0 + 1e-14, 1.0]]).unwrap();
        assert_eq!(op.get(0, 1), op.get(1, 0));
    }
}
