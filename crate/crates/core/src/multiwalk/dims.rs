//! Dimension counts for the space of Hamiltonian walks near `β₀`.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::numerical_rank;

/// Relative singular-value cut for the tangent rank.
pub const TANGENT_RANK_TOL: f64 = 1e-8;

/// Dimension of all `β` with equal row sums: `N² - N + 1`.
pub fn total_dim(n: usize) -> usize {
    n * n - n + 1
}

/// `N²/2 - N + 1`, defined for even `N ≥ 2`.
pub fn ham_dim(n: usize) -> Result<usize> {
    if n < 2 || !n.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!(
            "the Hamiltonian dimension count needs an even N >= 2, got {n}"
        )));
    }
    Ok(n * n / 2 - n + 1)
}

/// `Γ₀ = [[0, 1], [-1, 0]]` in `N̄ x N̄` blocks.
pub fn gamma0(n_bar: usize) -> DMatrix<f64> {
    let n = 2 * n_bar;
    DMatrix::from_fn(n, n, |i, j| {
        if j == i + n_bar {
            1.0
        } else if i == j + n_bar {
            -1.0
        } else {
            0.0
        }
    })
}

/// Basis of the perturbations `Γ̄ = [[A, B], [-Bᵗ, C]]` with skew `A`, `C`.
pub fn perturbation_basis(n_bar: usize) -> Vec<DMatrix<f64>> {
    let n = 2 * n_bar;
    let mut out = Vec::new();
    for offset in [0, n_bar] {
        for i in 0..n_bar {
            for j in i + 1..n_bar {
                let mut m = DMatrix::zeros(n, n);
                m[(offset + i, offset + j)] = 1.0;
                m[(offset + j, offset + i)] = -1.0;
                out.push(m);
            }
        }
    }
    for i in 0..n_bar {
        for j in 0..n_bar {
            let mut m = DMatrix::zeros(n, n);
            m[(i, n_bar + j)] = 1.0;
            m[(n_bar + j, i)] = -1.0;
            out.push(m);
        }
    }
    out
}

/// `β̄ᵗ = Γ̄ ĉ₀ - λ Γ₀ diag(γ)` with `γ_j = Σ_i Γ̄_ij`.
pub fn linearized_beta_t(gamma_bar: &DMatrix<f64>, n_bar: usize, lambda: f64) -> DMatrix<f64> {
    let n = 2 * n_bar;
    let c0 = DMatrix::from_fn(n, n, |i, j| {
        if i != j {
            0.0
        } else if i < n_bar {
            -lambda
        } else {
            lambda
        }
    });
    let gamma_sums: Vec<f64> = (0..n).map(|j| gamma_bar.column(j).sum()).collect();
    let diag = DMatrix::from_fn(n, n, |i, j| if i == j { gamma_sums[j] } else { 0.0 });
    gamma_bar * c0 - gamma0(n_bar) * diag * lambda
}

/// The linearized map as an `N² x (#parameters)` matrix, one column per
/// basis perturbation, taken at `λ = 1`.
pub fn tangent_map_at_beta0(n_bar: usize) -> DMatrix<f64> {
    let basis = perturbation_basis(n_bar);
    let n = 2 * n_bar;
    let mut m = DMatrix::zeros(n * n, basis.len());
    for (col, g) in basis.iter().enumerate() {
        let b = linearized_beta_t(g, n_bar, 1.0);
        m.column_mut(col).copy_from_slice(b.as_slice());
    }
    m
}

/// Numerical rank of the tangent map. `N̄ = 1` gives 0: the two-velocity
/// walk has no deformations besides `λ`.
pub fn tangent_rank_at_beta0(n_bar: usize) -> Result<usize> {
    if n_bar == 0 {
        return Err(Error::InvalidParameter("N̄ must be at least 1".into()));
    }
    let m = tangent_map_at_beta0(n_bar);
    if m.ncols() == 0 {
        return Ok(0);
    }
    Ok(numerical_rank(&m, TANGENT_RANK_TOL))
}

/// `β` built from a skew `Γ` and `λ` by `c_j = λ / Σ_i Γ_ij`, `βᵗ = Γ ĉ`.
pub fn beta_from_gamma(gamma: &DMatrix<f64>, lambda: f64) -> DMatrix<f64> {
    let n = gamma.nrows();
    let c: Vec<f64> = (0..n).map(|j| lambda / gamma.column(j).sum()).collect();
    DMatrix::from_fn(n, n, |j, i| gamma[(i, j)] * c[j])
}

/// Rank of the principal components of `samples` Hamiltonian `β`'s drawn
/// within `radius` of `β₀` (with `λ` near 1), cut at `rel_tol * σ_max`.
pub fn local_pca_rank(n_bar: usize, samples: usize, radius: f64, rel_tol: f64, seed: u64) -> Result<usize> {
    if n_bar == 0 || samples < 2 {
        return Err(Error::InvalidParameter("need N̄ >= 1 and at least two samples".into()));
    }
    let basis = perturbation_basis(n_bar);
    let n = 2 * n_bar;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = DMatrix::zeros(samples, n * n);
    for s in 0..samples {
        let mut gamma = gamma0(n_bar);
        for b in &basis {
            gamma += b * (radius * rng.random_range(-1.0..1.0));
        }
        let lambda = 1.0 + radius * rng.random_range(-1.0..1.0);
        let beta = beta_from_gamma(&gamma, lambda);
        points.row_mut(s).copy_from(&DMatrix::from_row_slice(1, n * n, beta.as_slice()));
    }
    let mean = points.row_mean();
    for mut row in points.row_iter_mut() {
        row -= &mean;
    }
    Ok(numerical_rank(&points, rel_tol))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_dimensions() {
        assert_eq!((total_dim(4), ham_dim(4).unwrap()), (13, 5));
        assert_eq!((total_dim(2), ham_dim(2).unwrap()), (3, 1));
        assert!(ham_dim(3).is_err());
        assert!(ham_dim(0).is_err());
    }

    #[test]
    fn ham_dim_stays_below_half_of_total() {
        // N²/2 - N + 1 < (N² - N + 1)/2  <=>  N > 1
        for n in [2, 4, 6, 8] {
            let (h, t) = (ham_dim(n).unwrap() as f64, total_dim(n) as f64);
            assert!(h < t / 2.0);
            assert!(h > t / 2.0 - n as f64);
        }
    }

    #[test]
    fn parameter_count() {
        for n_bar in 1..5 {
            assert_eq!(perturbation_basis(n_bar).len(), 2 * n_bar * n_bar - n_bar);
        }
    }

    #[test]
    fn tangent_ranks() {
        assert_eq!(tangent_rank_at_beta0(1).unwrap(), 0);
        assert_eq!(tangent_rank_at_beta0(2).unwrap(), 4);
        assert_eq!(tangent_rank_at_beta0(3).unwrap(), 12);
    }

    #[test]
    fn beta0_from_gamma0() {
        let b = beta_from_gamma(&gamma0(2), 1.0);
        assert_eq!(b, crate::multiwalk::RescaledGenerator::beta0(2, 1.0).beta);
    }
}
