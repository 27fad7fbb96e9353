//! Time evolution of linear systems `dy/dt = G y` on periodic grids.
//!
//! Translation-invariant generators are propagated exactly, one Fourier mode
//! at a time, by small matrix exponentials. Generators containing pointwise
//! or dense entries can be propagated by one dense exponential on small
//! grids, or stepped with classical RK4.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::expm::{exp_complex, exp_real};
use crate::grid::{Bundle, Field, PeriodicGrid};
use crate::operator::OperatorMatrix;
use crate::spectral::{self, C64};

/// Exact propagator of a Fourier-diagonal generator, with the per-mode
/// matrices assembled once.
#[derive(Debug, Clone)]
pub struct SpectralPropagator {
    grid: PeriodicGrid,
    size: usize,
    mode_matrices: Vec<DMatrix<C64>>,
}

impl SpectralPropagator {
    pub fn new(generator: &OperatorMatrix, grid: &PeriodicGrid) -> Result<Self> {
        generator.check_grid(grid)?;
        if !generator.is_multiplier() {
            return Err(Error::Unsupported(
                "generator has entries that are not Fourier multipliers; \
                 use dense_propagate or rk4_propagate"
                    .into(),
            ));
        }
        let mode_matrices = spectral::modes(grid)
            .iter()
            .map(|m| generator.mode_matrix(m).expect("multiplier"))
            .collect();
        Ok(SpectralPropagator {
            grid: *grid,
            size: generator.size(),
            mode_matrices,
        })
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn propagate(&self, state: &Bundle, t: f64) -> Result<Bundle> {
        if state.len() != self.size {
            return Err(Error::Dimension(format!(
                "generator has {} components, state has {}",
                self.size,
                state.len()
            )));
        }
        if *state.grid() != self.grid {
            return Err(Error::Dimension("state lives on a different grid".into()));
        }
        if !t.is_finite() {
            return Err(Error::InvalidParameter(format!("non-finite time {t}")));
        }
        if t == 0.0 {
            return Ok(state.clone());
        }
        let coeffs: Vec<Vec<C64>> = state.components().iter().map(spectral::forward).collect();
        // Each mode is independent; results are gathered in mode order, so
        // the output does not depend on the thread count.
        let evolved: Vec<Vec<C64>> = self
            .mode_matrices
            .par_iter()
            .enumerate()
            .map(|(idx, m)| {
                let y = DVector::from_iterator(self.size, coeffs.iter().map(|c| c[idx]));
                (exp_complex(m, t) * y).as_slice().to_vec()
            })
            .collect();
        let components = (0..self.size)
            .map(|c| {
                let column = evolved.iter().map(|mode| mode[c]).collect();
                spectral::inverse_real(&self.grid, column)
            })
            .collect();
        let out = Bundle::new(components)?;
        if !out.is_finite() {
            return Err(Error::Instability { step: 0, time: t });
        }
        Ok(out)
    }
}

/// Evolves `state` to time `t` under `dy/dt = G y` with `G` Fourier-diagonal.
pub fn exact_propagate(state: &Bundle, generator: &OperatorMatrix, t: f64) -> Result<Bundle> {
    SpectralPropagator::new(generator, state.grid())?.propagate(state, t)
}

/// Largest total number of unknowns accepted by [`dense_propagate`].
pub const DENSE_LIMIT: usize = 1024;

/// Exact propagation through one dense matrix exponential of the full
/// block generator. Works for any constant-in-time generator on small grids.
pub fn dense_propagate(state: &Bundle, generator: &OperatorMatrix, t: f64) -> Result<Bundle> {
    let grid = *state.grid();
    let n = grid.len();
    if generator.size() != state.len() {
        return Err(Error::Dimension(format!(
            "generator has {} components, state has {}",
            generator.size(),
            state.len()
        )));
    }
    if n * state.len() > DENSE_LIMIT {
        return Err(Error::Unsupported(format!(
            "dense propagation limited to {DENSE_LIMIT} unknowns, got {}",
            n * state.len()
        )));
    }
    let g = generator.to_dense(&grid)?;
    let y = DVector::from_iterator(
        n * state.len(),
        state.components().iter().flat_map(|f| f.values().iter().copied()),
    );
    let out = exp_real(&g, t) * y;
    let components = out
        .as_slice()
        .chunks_exact(n)
        .map(|chunk| Field::new(grid, chunk.to_vec()))
        .collect::<Result<Vec<_>>>()
        .map_err(|_| Error::Instability { step: 0, time: t })?;
    Bundle::new(components)
}

/// Exact propagation by whichever exact method the generator admits:
/// per-mode exponentials for Fourier multipliers, one dense exponential
/// otherwise.
pub fn propagate_linear(state: &Bundle, generator: &OperatorMatrix, t: f64) -> Result<Bundle> {
    if generator.is_multiplier() {
        exact_propagate(state, generator, t)
    } else {
        dense_propagate(state, generator, t)
    }
}

/// Classical fourth-order Runge–Kutta from 0 to `t` with step `dt`; the last
/// step is shortened to land exactly on `t`.
pub fn rk4_propagate<F>(state: &Bundle, rhs: F, t: f64, dt: f64) -> Result<Bundle>
where
    F: Fn(&Bundle) -> Result<Bundle>,
{
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter(format!("step must be positive, got {dt}")));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!("final time must be >= 0, got {t}")));
    }
    let mut y = state.clone();
    let mut time = 0.0;
    let mut step = 0;
    while time < t {
        let h = dt.min(t - time);
        if h <= t * 1e-15 {
            break;
        }
        let k1 = rhs(&y)?;
        let k2 = rhs(&y.axpy(0.5 * h, &k1)?)?;
        let k3 = rhs(&y.axpy(0.5 * h, &k2)?)?;
        let k4 = rhs(&y.axpy(h, &k3)?)?;
        y = y
            .axpy(h / 6.0, &k1)?
            .axpy(h / 3.0, &k2)?
            .axpy(h / 3.0, &k3)?
            .axpy(h / 6.0, &k4)?;
        step += 1;
        time += h;
        if !y.is_finite() {
            return Err(Error::Instability { step, time });
        }
    }
    Ok(y)
}
