pub mod dims;
pub mod fit;
pub mod kolmogorov;
pub mod multiwalk;
pub mod oscillator;
pub mod telegrapher;
pub mod walk1d;

use anyhow::{bail, Result};
use randevol_core::{Bundle, Field, PeriodicGrid};

pub fn linspace(start: f64, end: f64, count: usize) -> Vec<f64> {
    if count < 2 {
        return vec![start];
    }
    (0..count)
        .map(|i| start + (end - start) * i as f64 / (count - 1) as f64)
        .collect()
}

/// `‖a - b‖∞ / max(‖b‖∞, 1)`
pub fn rel_sup(a: &Bundle, b: &Bundle) -> Result<f64> {
    Ok(a.sup_distance(b)? / b.sup_norm().max(1.0))
}

pub fn grid_1d(points: usize, length: f64) -> Result<PeriodicGrid> {
    if points < 8 {
        bail!("--grid-n must be at least 8, got {points}");
    }
    Ok(PeriodicGrid::new_1d(points, length)?)
}

/// Sum of `amp · trig(m k x + phase)` terms, `k = 2π/L`.
pub fn wave(grid: PeriodicGrid, terms: &[(f64, f64, f64)]) -> Result<Field> {
    let k = 2.0 * std::f64::consts::PI / grid.length(0);
    Ok(Field::from_fn(grid, |x, _| {
        terms.iter().map(|&(amp, m, phase)| amp * (m * k * x + phase).sin()).sum()
    })?)
}

/// `½ Σ ∫ f_i²`, the size against which indefinite quadratic densities are judged.
pub fn energy_scale(state: &Bundle) -> f64 {
    0.5 * state.l2_norm().powi(2) * state.grid().cell_volume()
}
