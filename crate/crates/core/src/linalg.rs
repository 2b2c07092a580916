//! Small dense linear-algebra helpers shared by the filter and the tests.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use crate::error::{Error, Result};

/// Replace `m` with `(m + mᵀ) / 2`.
pub fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

/// Largest elementwise asymmetry `max |m_ij - m_ji|`.
pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    SymmetricEigen::new(m.clone()).eigenvalues.min()
}

/// Adds `1e-10 * (trace/p) * I` when the smallest eigenvalue is below
/// `1e-12 * (trace/p)`. Returns whether the ridge was applied.
pub fn ridge_regularize(m: &mut DMatrix<f64>) -> bool {
    let p = m.nrows();
    if p == 0 {
        return false;
    }
    let scale = m.trace() / p as f64;
    if scale <= 0.0 || !scale.is_finite() {
        return false;
    }
    if min_eigenvalue(m) < 1e-12 * scale {
        for i in 0..p {
            m[(i, i)] += 1e-10 * scale;
        }
        true
    } else {
        false
    }
}

/// Cholesky factor of a symmetric matrix, retrying once with a
/// `1e-10 * trace / n` ridge if the plain factorization fails.
pub fn cholesky_with_ridge(m: &DMatrix<f64>) -> Option<Cholesky<f64, Dyn>> {
    if let Some(c) = Cholesky::new(m.clone()) {
        return Some(c);
    }
    let n = m.nrows().max(1);
    let scale = m.trace() / n as f64;
    if !(scale > 0.0) {
        return None;
    }
    let ridge = 1e-10 * scale;
    let mut reg = m.clone();
    for i in 0..m.nrows() {
        reg[(i, i)] += ridge;
    }
    Cholesky::new(reg)
}

/// Diagonal scaling `d_i = 1/sqrt(m_ii)` (1 where the diagonal is not positive).
pub fn equilibration(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_iterator(
        m.nrows(),
        (0..m.nrows()).map(|i| {
            let d = m[(i, i)];
            if d > 0.0 && d.is_finite() {
                1.0 / d.sqrt()
            } else {
                1.0
            }
        }),
    )
}

/// Quadratic form `gᵀ F⁻¹ g` for a symmetric PSD `F`, computed on the
/// diagonally equilibrated matrix with ridge regularization.
pub fn inverse_quadratic_form(f: &DMatrix<f64>, g: &DVector<f64>) -> Result<f64> {
    let d = equilibration(f);
    let mut fe = f.clone();
    for i in 0..f.nrows() {
        for j in 0..f.ncols() {
            fe[(i, j)] *= d[i] * d[j];
        }
    }
    symmetrize(&mut fe);
    ridge_regularize(&mut fe);
    let ge = g.component_mul(&d);
    let chol = cholesky_with_ridge(&fe).ok_or_else(|| {
        Error::DegenerateStatistics("information matrix is not positive definite".into())
    })?;
    let y = chol
        .l()
        .solve_lower_triangular(&ge)
        .ok_or_else(|| Error::DegenerateStatistics("singular triangular factor".into()))?;
    Ok(y.norm_squared())
}

/// Row-compressed sparse matrix used to apply banded transition matrices.
#[derive(Debug, Clone)]
pub struct SparseRows {
    ncols: usize,
    rows: Vec<Vec<(usize, f64)>>,
}

impl SparseRows {
    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        let rows = (0..m.nrows())
            .map(|i| {
                (0..m.ncols())
                    .filter(|&j| m[(i, j)] != 0.0)
                    .map(|j| (j, m[(i, j)]))
                    .collect()
            })
            .collect();
        Self {
            ncols: m.ncols(),
            rows,
        }
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn density(&self) -> f64 {
        let total = self.rows.len() * self.ncols;
        if total == 0 {
            0.0
        } else {
            self.nnz() as f64 / total as f64
        }
    }

    pub fn mul_vec(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            self.rows.len(),
            self.rows
                .iter()
                .map(|row| row.iter().map(|&(j, v)| v * x[j]).sum::<f64>()),
        )
    }

    /// `self * m` for a dense `m`.
    pub fn mul_dense(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.rows.len(), m.ncols());
        for c in 0..m.ncols() {
            let col = m.column(c);
            for (i, row) in self.rows.iter().enumerate() {
                out[(i, c)] = row.iter().map(|&(j, v)| v * col[j]).sum();
            }
        }
        out
    }

    /// `self * p * selfᵀ`.
    pub fn sandwich(&self, p: &DMatrix<f64>) -> DMatrix<f64> {
        // (S (S P)ᵀ)ᵀ = S P Sᵀ
        let sp = self.mul_dense(p);
        self.mul_dense(&sp.transpose()).transpose()
    }
}

/// Dimension of the observable subspace of `(ad, cd)`.
///
/// Equals the rank of `[C; C·A; …; C·A^(n-1)]`, but is accumulated with an
/// orthonormal block-Krylov iteration so that near-identity transition
/// matrices do not drown the higher powers in rounding error.
pub fn observability_rank(ad: &DMatrix<f64>, cd: &DMatrix<f64>) -> usize {
    let n = ad.nrows();
    let tol = 1e-9;
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut frontier: Vec<DVector<f64>> = Vec::new();
    for r in 0..cd.nrows() {
        let v = cd.row(r).transpose();
        if let Some(q) = orthogonalize(&v, &basis, tol) {
            basis.push(q.clone());
            frontier.push(q);
        }
    }
    let adt = ad.transpose();
    while !frontier.is_empty() && basis.len() < n {
        let mut next = Vec::new();
        for q in &frontier {
            let v = &adt * q;
            if let Some(u) = orthogonalize(&v, &basis, tol) {
                basis.push(u.clone());
                next.push(u);
                if basis.len() == n {
                    break;
                }
            }
        }
        frontier = next;
    }
    basis.len()
}

fn orthogonalize(v: &DVector<f64>, basis: &[DVector<f64>], tol: f64) -> Option<DVector<f64>> {
    let scale = v.norm();
    if scale == 0.0 {
        return None;
    }
    let mut u = v.clone();
    // two passes of modified Gram-Schmidt
    for _ in 0..2 {
        for b in basis {
            let c = b.dot(&u);
            u.axpy(-c, b, 1.0);
        }
    }
    let rest = u.norm();
    if rest > tol * scale {
        Some(u / rest)
    } else {
        None
    }
}

/// Plain rank via SVD with a relative tolerance.
pub fn numerical_rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.max();
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * max).count()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sandwich_matches_dense_product() {
        let a = DMatrix::from_row_slice(3, 3, &[1.0, 0.5, 0.0, 0.0, 1.0, 0.2, -0.3, 0.0, 1.0]);
        let p = DMatrix::from_row_slice(3, 3, &[2.0, 0.1, 0.3, 0.1, 1.0, 0.0, 0.3, 0.0, 4.0]);
        let dense = &a * &p * a.transpose();
        let sparse = SparseRows::from_dense(&a).sandwich(&p);
        assert!((dense - sparse).amax() < 1e-14);
    }

    #[test]
    fn krylov_rank_matches_svd_rank_on_small_pair() {
        let a = DMatrix::from_row_slice(
            4,
            4,
            &[
                1.0, 0.1, 0.0, 0.0, -0.2, 1.0, 0.1, 0.0, 0.0, 0.0, 1.0, 0.1, 0.1, 0.0, -0.2, 1.0,
            ],
        );
        let c = DMatrix::from_row_slice(1, 4, &[1.0, 0.0, 0.0, 0.0]);
        let mut obs = DMatrix::zeros(4, 4);
        let mut pw = DMatrix::identity(4, 4);
        for k in 0..4 {
            obs.row_mut(k).copy_from(&(&c * &pw).row(0));
            pw = &pw * &a;
        }
        assert_eq!(observability_rank(&a, &c), numerical_rank(&obs, 1e-10));
    }

    #[test]
    fn unobservable_pair_is_detected() {
        // second state never reaches the output
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let c = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
        assert_eq!(observability_rank(&a, &c), 1);
    }

    #[test]
    fn ridge_only_when_needed() {
        let mut m = DMatrix::identity(3, 3);
        assert!(!ridge_regularize(&mut m));
        let mut s = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(ridge_regularize(&mut s));
        assert!(min_eigenvalue(&s) > 0.0);
    }
}
