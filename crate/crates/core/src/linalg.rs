//! Small dense linear-algebra helpers shared across modules.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// `A ⊗ I_m`, the lift of a node-level matrix to stacked `m`-dimensional coordinates.
pub fn lift(a: &DMatrix<f64>, m: usize) -> DMatrix<f64> {
    a.kronecker(&DMatrix::identity(m, m))
}

/// Symmetric eigendecomposition with eigenvalues sorted ascending and the
/// eigenvector columns permuted to match.
pub fn sorted_symmetric_eigen(a: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let sym = (a + a.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Eigenvalues of a symmetric matrix, ascending.
pub fn sorted_eigenvalues(a: &DMatrix<f64>) -> DVector<f64> {
    let sym = (a + a.transpose()) * 0.5;
    let mut values: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    values.sort_by(f64::total_cmp);
    DVector::from_vec(values)
}

/// Largest singular value.
pub fn spectral_norm(a: &DMatrix<f64>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.singular_values().max()
}

/// Orthonormal basis of the null space of `a`, using a relative singular-value
/// threshold. The matrix is zero-padded to square so the full right singular
/// basis is available.
pub fn null_space(a: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let (rows, cols) = a.shape();
    if cols == 0 {
        return DMatrix::zeros(0, 0);
    }
    let size = rows.max(cols);
    let mut padded = DMatrix::zeros(size, cols);
    padded.view_mut((0, 0), (rows, cols)).copy_from(a);
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let sigma_max = svd.singular_values.max();
    let cutoff = rel_tol * sigma_max.max(f64::MIN_POSITIVE);
    let null: Vec<DVector<f64>> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s <= cutoff || sigma_max == 0.0)
        .map(|(k, _)| v_t.row(k).transpose())
        .collect();
    if null.is_empty() {
        DMatrix::zeros(cols, 0)
    } else {
        DMatrix::from_columns(&null)
    }
}

/// Orthonormal basis of the orthogonal complement of the column span of `a`.
pub fn orthogonal_complement(a: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    null_space(&a.transpose(), rel_tol)
}

/// Modified Gram-Schmidt with one re-orthogonalisation pass. Columns whose
/// remaining norm falls below `rel_tol` times their original norm are
/// reported by index instead of being added.
pub fn gram_schmidt(columns: &[DVector<f64>], rel_tol: f64) -> Result<DMatrix<f64>, usize> {
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(columns.len());
    for (idx, col) in columns.iter().enumerate() {
        let original = col.norm();
        let mut v = col.clone();
        for _ in 0..2 {
            for q in &basis {
                let proj = q.dot(&v);
                v.axpy(-proj, q, 1.0);
            }
        }
        let remaining = v.norm();
        if original == 0.0 || remaining <= rel_tol * original {
            return Err(idx);
        }
        basis.push(v / remaining);
    }
    Ok(DMatrix::from_columns(&basis))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn lift_matches_kronecker_layout() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let l = lift(&a, 2);
        assert_eq!(l.shape(), (4, 4));
        assert_eq!(l[(0, 2)], 2.0);
        assert_eq!(l[(1, 3)], 2.0);
        assert_eq!(l[(0, 3)], 0.0);
        assert_eq!(l[(3, 1)], 3.0);
    }

    #[test]
    fn null_space_of_rank_one() {
        let a = DMatrix::from_row_slice(1, 3, &[1.0, 1.0, 1.0]);
        let n = null_space(&a, 1e-10);
        assert_eq!(n.ncols(), 2);
        assert!((&a * &n).norm() < 1e-12);
        assert_relative_eq!(n.transpose() * &n, DMatrix::identity(2, 2), epsilon = 1e-12);
    }

    #[test]
    fn eigen_sorted_ascending() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let (vals, vecs) = sorted_symmetric_eigen(&a);
        assert_relative_eq!(vals[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(vals[1], 3.0, epsilon = 1e-12);
        let r = &a * vecs.column(0) - vecs.column(0) * vals[0];
        assert!(r.norm() < 1e-12);
    }

    #[test]
    fn gram_schmidt_flags_dependent_column() {
        let cols = vec![
            DVector::from_vec(vec![1.0, 0.0, 0.0]),
            DVector::from_vec(vec![2.0, 0.0, 0.0]),
        ];
        assert_eq!(gram_schmidt(&cols, 1e-8).unwrap_err(), 1);
    }
}
