//! Kolmogorov equations for the velocity-switching process.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::expm::exp_real;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KolmogorovDirection {
    /// `ṗ = p β`
    Inverse,
    /// `ṗ = β p`
    Direct,
}

/// `β_kj = α_kj + λ_j δ_kj`
pub fn kolmogorov_beta(alpha: &DMatrix<f64>, rates: &[f64]) -> Result<DMatrix<f64>> {
    if !alpha.is_square() || rates.len() != alpha.nrows() {
        return Err(Error::Dimension(format!(
            "alpha is {}x{} with {} rates",
            alpha.nrows(),
            alpha.ncols(),
            rates.len()
        )));
    }
    let mut beta = alpha.clone();
    for (j, r) in rates.iter().enumerate() {
        beta[(j, j)] += r;
    }
    Ok(beta)
}

pub fn kolmogorov_evolve(
    p0: &DMatrix<f64>,
    beta: &DMatrix<f64>,
    t: f64,
    direction: KolmogorovDirection,
) -> Result<DMatrix<f64>> {
    if !beta.is_square() || p0.shape() != beta.shape() {
        return Err(Error::Dimension(format!(
            "p is {:?}, beta is {:?}",
            p0.shape(),
            beta.shape()
        )));
    }
    let e = exp_real(beta, t);
    Ok(match direction {
        KolmogorovDirection::Inverse => p0 * e,
        KolmogorovDirection::Direct => e * p0,
    })
}

/// `F_j = Σ_i p_ij`
pub fn column_sums(p: &DMatrix<f64>) -> Vec<f64> {
    p.column_iter().map(|c| c.sum()).collect()
}
