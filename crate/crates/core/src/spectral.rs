//! Discrete Fourier transforms on periodic grids.
//!
//! Coefficients use the unnormalized forward convention
//! `c_m = sum_j f_j exp(-i k_m x_j)`; the inverse divides by the point count.

use std::cell::RefCell;
use std::sync::Arc;

use nalgebra::Complex;
use rustfft::{Fft, FftPlanner};

use crate::grid::{Field, PeriodicGrid};

pub type C64 = Complex<f64>;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    })
}

fn transform(grid: &PeriodicGrid, data: &mut [C64], inverse: bool) {
    let nx = grid.points(0);
    if grid.dims() == 1 {
        plan(nx, inverse).process(data);
        return;
    }
    let ny = grid.points(1);
    let row_plan = plan(ny, inverse);
    for row in data.chunks_exact_mut(ny) {
        row_plan.process(row);
    }
    let col_plan = plan(nx, inverse);
    let mut column = vec![C64::new(0.0, 0.0); nx];
    for j in 0..ny {
        for i in 0..nx {
            column[i] = data[i * ny + j];
        }
        col_plan.process(&mut column);
        for i in 0..nx {
            data[i * ny + j] = column[i];
        }
    }
}

pub fn forward(field: &Field) -> Vec<C64> {
    let mut data: Vec<C64> = field.values().iter().map(|&v| C64::new(v, 0.0)).collect();
    transform(field.grid(), &mut data, false);
    data
}

/// Inverse transform, keeping the real part.
pub fn inverse_real(grid: &PeriodicGrid, mut coefficients: Vec<C64>) -> Field {
    transform(grid, &mut coefficients, true);
    let scale = 1.0 / grid.len() as f64;
    Field::from_raw(*grid, coefficients.iter().map(|c| c.re * scale).collect())
}

/// Wavevector and per-axis Nyquist flags of flat Fourier index `idx`.
#[derive(Debug, Clone, Copy)]
pub struct Mode {
    pub k: [f64; 2],
    pub nyquist: [bool; 2],
}

pub fn modes(grid: &PeriodicGrid) -> Vec<Mode> {
    (0..grid.len())
        .map(|idx| {
            let (i, j) = grid.split_index(idx);
            let mut k = [grid.wavenumber(0, i), 0.0];
            let mut nyquist = [grid.is_nyquist(0, i), false];
            if grid.dims() == 2 {
                k[1] = grid.wavenumber(1, j);
                nyquist[1] = grid.is_nyquist(1, j);
            }
            Mode { k, nyquist }
        })
        .collect()
}

/// Largest absolute signed mode number present with amplitude above `tol`
/// (relative to the largest coefficient), over all axes.
pub fn bandwidth(field: &Field, tol: f64) -> usize {
    let coeffs = forward(field);
    let grid = field.grid();
    let peak = coeffs.iter().fold(0.0_f64, |m, c| m.max(c.norm()));
    if peak == 0.0 {
        return 0;
    }
    let mut width = 0;
    for (idx, c) in coeffs.iter().enumerate() {
        if c.norm() > tol * peak {
            let (i, j) = grid.split_index(idx);
            width = width.max(grid.mode_number(0, i).unsigned_abs() as usize);
            if grid.dims() == 2 {
                width = width.max(grid.mode_number(1, j).unsigned_abs() as usize);
            }
        }
    }
    width
}
