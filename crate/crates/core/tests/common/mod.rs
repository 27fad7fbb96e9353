#![allow(dead_code)]

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use randevol_core::{Bundle, Field, PeriodicGrid};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_bundle(grid: PeriodicGrid, count: usize, max_mode: usize, zero_mean: bool, seed: u64) -> Bundle {
    let mut r = rng(seed);
    Bundle::new(
        (0..count)
            .map(|_| Field::random_band_limited(grid, max_mode, zero_mean, &mut r))
            .collect(),
    )
    .unwrap()
}

/// `‖a - b‖∞ / max(‖b‖∞, tiny)`
pub fn rel_sup(a: &Bundle, b: &Bundle) -> f64 {
    a.sup_distance(b).unwrap() / b.sup_norm().max(f64::MIN_POSITIVE)
}

pub fn rel_change(value: f64, initial: f64, scale: f64) -> f64 {
    (value - initial).abs() / scale.max(f64::MIN_POSITIVE)
}

pub fn linspace(start: f64, end: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|i| start + (end - start) * i as f64 / (count - 1) as f64)
        .collect()
}
