//! Numerical rank and nullspaces through the singular value decomposition.

use nalgebra::{DMatrix, DVector};

/// Singular values of `m`, including the zeros implied by a short matrix.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    let padded = pad_rows(m);
    let mut s: Vec<f64> = padded.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Number of singular values above `rel_tol * σ_max`.
pub fn numerical_rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    let s = singular_values(m);
    let top = s.first().copied().unwrap_or(0.0);
    if top == 0.0 {
        return 0;
    }
    s.iter().filter(|&&x| x > rel_tol * top).count()
}

/// Orthonormal basis of `{x : m x ≈ 0}`, using `rel_tol * σ_max` as the cut.
pub fn nullspace(m: &DMatrix<f64>, rel_tol: f64) -> Vec<DVector<f64>> {
    let n = m.ncols();
    if m.nrows() == 0 || m.iter().all(|&x| x == 0.0) {
        return (0..n).map(|i| DVector::from_fn(n, |j, _| if i == j { 1.0 } else { 0.0 })).collect();
    }
    let svd = pad_rows(m).svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let top = svd.singular_values.max();
    svd.singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s <= rel_tol * top)
        .map(|(i, _)| v_t.row(i).transpose())
        .collect()
}

/// Appends zero rows so that the thin SVD returns a full right basis.
fn pad_rows(m: &DMatrix<f64>) -> DMatrix<f64> {
    if m.nrows() >= m.ncols() {
        return m.clone();
    }
    let mut out = DMatrix::zeros(m.ncols(), m.ncols());
    out.view_mut((0, 0), (m.nrows(), m.ncols())).copy_from(m);
    out
}
