//! Observed convergence orders from error sequences.

use crate::error::{Error, Result};

/// Least-squares slope of `ln err` against `ln h`.
pub fn observed_order(steps: &[f64], errors: &[f64]) -> Result<f64> {
    if steps.len() != errors.len() || steps.len() < 2 {
        return Err(Error::InvalidParameter(
            "need at least two (step, error) pairs".into(),
        ));
    }
    if steps.iter().chain(errors).any(|&x| !(x > 0.0 && x.is_finite())) {
        return Err(Error::InvalidParameter(
            "steps and errors must be positive and finite".into(),
        ));
    }
    let xs: Vec<f64> = steps.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    Ok(cov / var)
}
