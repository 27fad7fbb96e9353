//! Periodic grids and the real-valued fields sampled on them.

use std::f64::consts::PI;

use rand::Rng;

use crate::error::{Error, Result};

/// A uniform periodic grid on `[0, L_1) x [0, L_2)` (one or two dimensions).
///
/// Point counts are even and at least 4 so that the spectral derivative has a
/// well-defined Nyquist convention.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodicGrid {
    dims: usize,
    points: [usize; 2],
    lengths: [f64; 2],
}

impl PeriodicGrid {
    pub fn new_1d(points: usize, length: f64) -> Result<Self> {
        Self::new(&[points], &[length])
    }

    pub fn new_2d(points: [usize; 2], lengths: [f64; 2]) -> Result<Self> {
        Self::new(&points, &lengths)
    }

    pub fn new(points: &[usize], lengths: &[f64]) -> Result<Self> {
        if points.is_empty() || points.len() > 2 || points.len() != lengths.len() {
            return Err(Error::Dimension(format!(
                "grid needs 1 or 2 dimensions with one length each, got {} points and {} lengths",
                points.len(),
                lengths.len()
            )));
        }
        for (&n, &l) in points.iter().zip(lengths) {
            if n < 4 || n % 2 != 0 {
                return Err(Error::InvalidParameter(format!(
                    "points per dimension must be even and >= 4, got {n}"
                )));
            }
            if !(l.is_finite() && l > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "domain length must be positive and finite, got {l}"
                )));
            }
        }
        let mut grid = PeriodicGrid {
            dims: points.len(),
            points: [1, 1],
            lengths: [1.0, 1.0],
        };
        grid.points[..points.len()].copy_from_slice(points);
        grid.lengths[..lengths.len()].copy_from_slice(lengths);
        Ok(grid)
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn points(&self, axis: usize) -> usize {
        self.points[axis]
    }

    pub fn length(&self, axis: usize) -> f64 {
        self.lengths[axis]
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.lengths[axis] / self.points[axis] as f64
    }

    /// Total number of grid points.
    pub fn len(&self) -> usize {
        self.points[..self.dims].iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Volume of one grid cell (the quadrature weight).
    pub fn cell_volume(&self) -> f64 {
        (0..self.dims).map(|ax| self.spacing(ax)).product()
    }

    /// Coordinates of the point with flat index `idx` (row-major, axis 0 slowest).
    pub fn coordinates(&self, idx: usize) -> [f64; 2] {
        let (i, j) = self.split_index(idx);
        [i as f64 * self.spacing(0), j as f64 * self.spacing(1)]
    }

    pub(crate) fn split_index(&self, idx: usize) -> (usize, usize) {
        if self.dims == 1 {
            (idx, 0)
        } else {
            (idx / self.points[1], idx % self.points[1])
        }
    }

    pub(crate) fn flat_index(&self, i: usize, j: usize) -> usize {
        if self.dims == 1 {
            i
        } else {
            i * self.points[1] + j
        }
    }

    /// Signed integer mode number of Fourier index `m` along `axis`.
    pub fn mode_number(&self, axis: usize, m: usize) -> i64 {
        let n = self.points[axis];
        if m <= n / 2 {
            m as i64
        } else {
            m as i64 - n as i64
        }
    }

    /// Angular wavenumber of Fourier index `m` along `axis`.
    pub fn wavenumber(&self, axis: usize, m: usize) -> f64 {
        2.0 * PI * self.mode_number(axis, m) as f64 / self.lengths[axis]
    }

    pub fn is_nyquist(&self, axis: usize, m: usize) -> bool {
        self.dims > axis && m == self.points[axis] / 2
    }

    pub fn coordinate_values(&self, axis: usize) -> Vec<f64> {
        let h = self.spacing(axis);
        (0..self.points[axis]).map(|i| i as f64 * h).collect()
    }
}

/// A real field sampled on a [`PeriodicGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: PeriodicGrid,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: PeriodicGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Dimension(format!(
                "field has {} values but the grid has {} points",
                values.len(),
                grid.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "non-finite field value {} at index {pos}",
                values[pos]
            )));
        }
        Ok(Field { grid, values })
    }

    pub(crate) fn from_raw(grid: PeriodicGrid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Field { grid, values }
    }

    pub fn zeros(grid: PeriodicGrid) -> Self {
        Field {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn constant(grid: PeriodicGrid, value: f64) -> Self {
        Field {
            grid,
            values: vec![value; grid.len()],
        }
    }

    /// Samples `f(x, y)` at every grid point (`y` is 0 on a 1D grid).
    pub fn from_fn(grid: PeriodicGrid, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let values = (0..grid.len())
            .map(|idx| {
                let [x, y] = grid.coordinates(idx);
                f(x, y)
            })
            .collect();
        Field::new(grid, values)
    }

    /// A random smooth field containing only Fourier modes with
    /// `|m| <= max_mode` along every axis. Amplitudes decay like `1/(1+|m|)`.
    pub fn random_band_limited<R: Rng + ?Sized>(
        grid: PeriodicGrid,
        max_mode: usize,
        zero_mean: bool,
        rng: &mut R,
    ) -> Self {
        let max_y = if grid.dims() == 2 { max_mode } else { 0 };
        let mut terms = Vec::new();
        for mx in 0..=max_mode {
            for my in 0..=max_y {
                if zero_mean && mx == 0 && my == 0 {
                    continue;
                }
                let weight = 1.0 / (1.0 + (mx + my) as f64);
                let signs: &[f64] = if my == 0 || mx == 0 { &[1.0] } else { &[1.0, -1.0] };
                for &sy in signs {
                    let a: f64 = rng.random_range(-1.0..1.0) * weight;
                    let b: f64 = rng.random_range(-1.0..1.0) * weight;
                    terms.push((mx as f64, sy * my as f64, a, b));
                }
            }
        }
        let lx = grid.length(0);
        let ly = grid.length(1);
        let values = (0..grid.len())
            .map(|idx| {
                let [x, y] = grid.coordinates(idx);
                terms
                    .iter()
                    .map(|&(mx, my, a, b)| {
                        let phase = 2.0 * PI * (mx * x / lx + my * y / ly);
                        a * phase.cos() + b * phase.sin()
                    })
                    .sum()
            })
            .collect();
        Field { grid, values }
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn check_grid(&self, other: &Field) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::Dimension(
                "fields live on different grids".to_string(),
            ));
        }
        Ok(())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field::from_raw(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_with(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Result<Field> {
        self.check_grid(other)?;
        Ok(Field::from_raw(
            self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        ))
    }

    pub fn scale(&self, c: f64) -> Field {
        self.map(|v| c * v)
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a - b)
    }

    /// `self + c * other`
    pub fn axpy(&self, c: f64, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a + c * b)
    }

    pub fn mul(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Discrete L2 norm `sqrt(sum f^2 * cell volume)`.
    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v * v).sum::<f64>() * self.grid.cell_volume()).sqrt()
    }

    pub fn sup_distance(&self, other: &Field) -> Result<f64> {
        self.check_grid(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Cyclic shift by whole lattice sites: result(i) = self(i + shift).
    pub fn shift_sites(&self, shift: [i64; 2]) -> Field {
        let g = self.grid;
        let nx = g.points(0) as i64;
        let ny = g.points(1) as i64;
        let values = (0..g.len())
            .map(|idx| {
                let (i, j) = g.split_index(idx);
                let si = (i as i64 + shift[0]).rem_euclid(nx) as usize;
                let sj = (j as i64 + shift[1]).rem_euclid(ny) as usize;
                self.values[g.flat_index(si, sj)]
            })
            .collect();
        Field::from_raw(g, values)
    }
}

/// An ordered list of fields sharing one grid (the components of a system).
#[derive(Debug, Clone, PartialEq)]
pub struct Bundle {
    components: Vec<Field>,
}

impl Bundle {
    pub fn new(components: Vec<Field>) -> Result<Self> {
        let Some(first) = components.first() else {
            return Err(Error::Dimension("a bundle needs at least one component".into()));
        };
        for c in &components[1..] {
            first.check_grid(c)?;
        }
        Ok(Bundle { components })
    }

    pub fn pair(a: Field, b: Field) -> Result<Self> {
        Bundle::new(vec![a, b])
    }

    pub fn zeros(grid: PeriodicGrid, count: usize) -> Self {
        Bundle {
            components: vec![Field::zeros(grid); count.max(1)],
        }
    }

    pub fn grid(&self) -> &PeriodicGrid {
        self.components[0].grid()
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn components(&self) -> &[Field] {
        &self.components
    }

    pub fn component(&self, i: usize) -> &Field {
        &self.components[i]
    }

    pub fn into_components(self) -> Vec<Field> {
        self.components
    }

    pub fn check_compatible(&self, other: &Bundle) -> Result<()> {
        if self.len() != other.len() {
            return Err(Error::Dimension(format!(
                "bundles have {} and {} components",
                self.len(),
                other.len()
            )));
        }
        self.components[0].check_grid(&other.components[0])
    }

    pub fn scale(&self, c: f64) -> Bundle {
        Bundle {
            components: self.components.iter().map(|f| f.scale(c)).collect(),
        }
    }

    /// `self + c * other`
    pub fn axpy(&self, c: f64, other: &Bundle) -> Result<Bundle> {
        self.check_compatible(other)?;
        Ok(Bundle {
            components: self
                .components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| a.axpy(c, b))
                .collect::<Result<_>>()?,
        })
    }

    pub fn sub(&self, other: &Bundle) -> Result<Bundle> {
        self.axpy(-1.0, other)
    }

    pub fn sup_norm(&self) -> f64 {
        self.components.iter().fold(0.0, |m, f| m.max(f.sup_norm()))
    }

    pub fn sup_distance(&self, other: &Bundle) -> Result<f64> {
        self.check_compatible(other)?;
        self.components
            .iter()
            .zip(&other.components)
            .try_fold(0.0_f64, |m, (a, b)| Ok(m.max(a.sup_distance(b)?)))
    }

    pub fn l2_norm(&self) -> f64 {
        self.components
            .iter()
            .map(|f| f.l2_norm().powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.components.iter().all(Field::is_finite)
    }

    pub fn map_components(&self, f: impl Fn(&Field) -> Field) -> Bundle {
        Bundle {
            components: self.components.iter().map(f).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rejects_odd_or_tiny_grids() {
        assert!(PeriodicGrid::new_1d(7, 1.0).is_err());
        assert!(PeriodicGrid::new_1d(2, 1.0).is_err());
        assert!(PeriodicGrid::new_1d(8, 0.0).is_err());
        assert!(PeriodicGrid::new(&[8, 8, 8], &[1.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn spacing_times_points_is_length() {
        let g = PeriodicGrid::new_2d([64, 32], [3.0, 0.7]).unwrap();
        for ax in 0..2 {
            assert_eq!(g.spacing(ax) * g.points(ax) as f64, g.length(ax));
        }
        assert_eq!(g.len(), 64 * 32);
    }

    #[test]
    fn non_finite_values_are_rejected() {
        let g = PeriodicGrid::new_1d(4, 1.0).unwrap();
        assert!(Field::new(g, vec![0.0, f64::NAN, 0.0, 0.0]).is_err());
        assert!(Field::new(g, vec![0.0; 3]).is_err());
    }

    #[test]
    fn bundles_require_a_shared_grid() {
        let g1 = PeriodicGrid::new_1d(8, 1.0).unwrap();
        let g2 = PeriodicGrid::new_1d(8, 2.0).unwrap();
        assert!(Bundle::pair(Field::zeros(g1), Field::zeros(g2)).is_err());
    }

    #[test]
    fn zero_mean_random_fields_have_zero_mean() {
        let g = PeriodicGrid::new_2d([16, 16], [1.0, 2.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = Field::random_band_limited(g, 3, true, &mut rng);
        let mean = f.values().iter().sum::<f64>() / f.len() as f64;
        assert!(mean.abs() < 1e-14);
    }

    #[test]
    fn site_shift_is_cyclic() {
        let g = PeriodicGrid::new_1d(4, 1.0).unwrap();
        let f = Field::new(g, vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        assert_eq!(f.shift_sites([1, 0]).values(), &[1.0, 2.0, 3.0, 0.0]);
        assert_eq!(f.shift_sites([-1, 0]).values(), &[3.0, 0.0, 1.0, 2.0]);
    }
}
