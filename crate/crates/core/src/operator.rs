//! Linear operators on periodic grids and matrices of them.
//!
//! Translation-invariant operators (derivatives, their scalings, shifts,
//! sums and products) are Fourier multipliers and are applied spectrally.
//! Pointwise multiplications and dense matrices are applied in physical space.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::grid::{Bundle, Field, PeriodicGrid};
use crate::spectral::{self, Mode, C64};

/// Relative tolerance for the numerical adjointness check.
pub const ADJOINT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Adjointness {
    SelfAdjoint,
    SkewAdjoint,
    Unknown,
}

impl Adjointness {
    fn product(self, other: Adjointness) -> Adjointness {
        use Adjointness::*;
        match (self, other) {
            (SelfAdjoint, SelfAdjoint) | (SkewAdjoint, SkewAdjoint) => SelfAdjoint,
            (SelfAdjoint, SkewAdjoint) | (SkewAdjoint, SelfAdjoint) => SkewAdjoint,
            _ => Unknown,
        }
    }

    fn sum(self, other: Adjointness) -> Adjointness {
        if self == other {
            self
        } else {
            Adjointness::Unknown
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum OperatorKind {
    Identity,
    /// `d^order / dx_axis^order`, spectral. Odd orders vanish on the Nyquist mode.
    Derivative { axis: usize, order: u32 },
    Scaled { coefficient: f64, base: Box<OperatorKind> },
    /// `base + shift * Identity`
    Shifted { base: Box<OperatorKind>, shift: f64 },
    /// Product; the last factor acts first.
    Composed(Vec<OperatorKind>),
    Sum(Vec<OperatorKind>),
    /// Multiplication by a grid function.
    Pointwise(Vec<f64>),
    /// An explicit matrix on the grid points.
    Dense(DMatrix<f64>),
}

impl OperatorKind {
    fn symbol(&self, mode: &Mode) -> Option<C64> {
        Some(match self {
            OperatorKind::Identity => C64::new(1.0, 0.0),
            OperatorKind::Derivative { axis, order } => {
                if order % 2 == 1 && mode.nyquist[*axis] {
                    C64::new(0.0, 0.0)
                } else {
                    C64::new(0.0, mode.k[*axis]).powu(*order)
                }
            }
            OperatorKind::Scaled { coefficient, base } => base.symbol(mode)? * *coefficient,
            OperatorKind::Shifted { base, shift } => base.symbol(mode)? + *shift,
            OperatorKind::Composed(factors) => {
                let mut s = C64::new(1.0, 0.0);
                for f in factors {
                    s *= f.symbol(mode)?;
                }
                s
            }
            OperatorKind::Sum(terms) => {
                let mut s = C64::new(0.0, 0.0);
                for t in terms {
                    s += t.symbol(mode)?;
                }
                s
            }
            OperatorKind::Pointwise(_) | OperatorKind::Dense(_) => return None,
        })
    }

    fn is_multiplier(&self) -> bool {
        match self {
            OperatorKind::Identity | OperatorKind::Derivative { .. } => true,
            OperatorKind::Scaled { base, .. } | OperatorKind::Shifted { base, .. } => {
                base.is_multiplier()
            }
            OperatorKind::Composed(v) | OperatorKind::Sum(v) => v.iter().all(|k| k.is_multiplier()),
            OperatorKind::Pointwise(_) | OperatorKind::Dense(_) => false,
        }
    }

    fn check_grid(&self, grid: &PeriodicGrid) -> Result<()> {
        match self {
            OperatorKind::Identity => Ok(()),
            OperatorKind::Derivative { axis, .. } => {
                if *axis >= grid.dims() {
                    Err(Error::Dimension(format!(
                        "derivative along axis {axis} on a {}-dimensional grid",
                        grid.dims()
                    )))
                } else {
                    Ok(())
                }
            }
            OperatorKind::Scaled { base, .. } | OperatorKind::Shifted { base, .. } => {
                base.check_grid(grid)
            }
            OperatorKind::Composed(v) | OperatorKind::Sum(v) => {
                v.iter().try_for_each(|k| k.check_grid(grid))
            }
            OperatorKind::Pointwise(w) => {
                if w.len() != grid.len() {
                    Err(Error::Dimension(format!(
                        "pointwise weight has {} values, grid has {} points",
                        w.len(),
                        grid.len()
                    )))
                } else {
                    Ok(())
                }
            }
            OperatorKind::Dense(m) => {
                if m.nrows() != grid.len() || m.ncols() != grid.len() {
                    Err(Error::Dimension(format!(
                        "dense operator is {}x{}, grid has {} points",
                        m.nrows(),
                        m.ncols(),
                        grid.len()
                    )))
                } else {
                    Ok(())
                }
            }
        }
    }

    fn apply_values(&self, grid: &PeriodicGrid, f: &[f64]) -> Vec<f64> {
        if self.is_multiplier() {
            let field = Field::from_raw(*grid, f.to_vec());
            let modes = spectral::modes(grid);
            let coeffs = spectral::forward(&field)
                .into_iter()
                .zip(&modes)
                .map(|(c, m)| c * self.symbol(m).expect("multiplier"))
                .collect();
            return spectral::inverse_real(grid, coeffs).into_values();
        }
        match self {
            OperatorKind::Scaled { coefficient, base } => base
                .apply_values(grid, f)
                .into_iter()
                .map(|v| v * coefficient)
                .collect(),
            OperatorKind::Shifted { base, shift } => base
                .apply_values(grid, f)
                .into_iter()
                .zip(f)
                .map(|(v, x)| v + shift * x)
                .collect(),
            OperatorKind::Composed(factors) => factors
                .iter()
                .rev()
                .fold(f.to_vec(), |acc, op| op.apply_values(grid, &acc)),
            OperatorKind::Sum(terms) => {
                let mut out = vec![0.0; f.len()];
                for t in terms {
                    for (o, v) in out.iter_mut().zip(t.apply_values(grid, f)) {
                        *o += v;
                    }
                }
                out
            }
            OperatorKind::Pointwise(w) => w.iter().zip(f).map(|(a, b)| a * b).collect(),
            OperatorKind::Dense(m) => {
                let v = nalgebra::DVector::from_column_slice(f);
                (m * v).as_slice().to_vec()
            }
            OperatorKind::Identity | OperatorKind::Derivative { .. } => unreachable!(),
        }
    }
}

/// A linear operator together with its declared adjointness.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearOperator {
    kind: OperatorKind,
    adjointness: Adjointness,
}

impl LinearOperator {
    pub fn new(kind: OperatorKind, adjointness: Adjointness) -> Self {
        LinearOperator { kind, adjointness }
    }

    pub fn identity() -> Self {
        Self::new(OperatorKind::Identity, Adjointness::SelfAdjoint)
    }

    pub fn zero() -> Self {
        Self::identity().scaled(0.0)
    }

    /// Spectral `d^order/dx^order` along axis 0.
    pub fn derivative(order: u32) -> Self {
        Self::derivative_along(0, order)
    }

    pub fn derivative_along(axis: usize, order: u32) -> Self {
        let adj = if order.is_multiple_of(2) {
            Adjointness::SelfAdjoint
        } else {
            Adjointness::SkewAdjoint
        };
        Self::new(OperatorKind::Derivative { axis, order }, adj)
    }

    /// `sum_s velocity[s] * d/dx_s`
    pub fn directional(velocity: &[f64]) -> Self {
        let terms = velocity
            .iter()
            .enumerate()
            .map(|(axis, &c)| OperatorKind::Scaled {
                coefficient: c,
                base: Box::new(OperatorKind::Derivative { axis, order: 1 }),
            })
            .collect();
        Self::new(OperatorKind::Sum(terms), Adjointness::SkewAdjoint)
    }

    pub fn pointwise(weight: &Field) -> Self {
        Self::new(
            OperatorKind::Pointwise(weight.values().to_vec()),
            Adjointness::SelfAdjoint,
        )
    }

    pub fn dense(matrix: DMatrix<f64>, adjointness: Adjointness) -> Self {
        Self::new(OperatorKind::Dense(matrix), adjointness)
    }

    pub fn scaled(&self, coefficient: f64) -> Self {
        Self::new(
            OperatorKind::Scaled {
                coefficient,
                base: Box::new(self.kind.clone()),
            },
            self.adjointness,
        )
    }

    /// `self + shift * Identity`; a shift keeps selfadjointness only.
    pub fn shifted(&self, shift: f64) -> Self {
        let adj = match self.adjointness {
            Adjointness::SelfAdjoint => Adjointness::SelfAdjoint,
            Adjointness::SkewAdjoint if shift == 0.0 => Adjointness::SkewAdjoint,
            _ => Adjointness::Unknown,
        };
        Self::new(
            OperatorKind::Shifted {
                base: Box::new(self.kind.clone()),
                shift,
            },
            adj,
        )
    }

    /// `self ∘ other` (other acts first).
    pub fn compose(&self, other: &LinearOperator) -> Self {
        let adj = if self.is_multiplier() && other.is_multiplier() {
            self.adjointness.product(other.adjointness)
        } else if self.kind == other.kind {
            // powers of one operator
            self.adjointness.product(other.adjointness)
        } else {
            Adjointness::Unknown
        };
        Self::new(
            OperatorKind::Composed(vec![self.kind.clone(), other.kind.clone()]),
            adj,
        )
    }

    pub fn plus(&self, other: &LinearOperator) -> Self {
        Self::new(
            OperatorKind::Sum(vec![self.kind.clone(), other.kind.clone()]),
            self.adjointness.sum(other.adjointness),
        )
    }

    /// `self^n`, with `self^0` the identity.
    pub fn power(&self, n: u32) -> Self {
        if n == 0 {
            return Self::identity();
        }
        let mut adj = self.adjointness;
        for _ in 1..n {
            adj = adj.product(self.adjointness);
        }
        Self::new(OperatorKind::Composed(vec![self.kind.clone(); n as usize]), adj)
    }

    pub fn with_adjointness(mut self, adjointness: Adjointness) -> Self {
        self.adjointness = adjointness;
        self
    }

    pub fn kind(&self) -> &OperatorKind {
        &self.kind
    }

    pub fn adjointness(&self) -> Adjointness {
        self.adjointness
    }

    /// True when the operator is diagonal in the Fourier basis.
    pub fn is_multiplier(&self) -> bool {
        self.kind.is_multiplier()
    }

    pub fn symbol(&self, mode: &Mode) -> Option<C64> {
        self.kind.symbol(mode)
    }

    pub fn check_grid(&self, grid: &PeriodicGrid) -> Result<()> {
        self.kind.check_grid(grid)
    }

    pub fn apply(&self, f: &Field) -> Result<Field> {
        self.kind.check_grid(f.grid())?;
        Ok(Field::from_raw(
            *f.grid(),
            self.kind.apply_values(f.grid(), f.values()),
        ))
    }

    /// The operator as an explicit `n x n` matrix on the grid points.
    pub fn to_dense(&self, grid: &PeriodicGrid) -> Result<DMatrix<f64>> {
        self.kind.check_grid(grid)?;
        if let OperatorKind::Dense(m) = &self.kind {
            return Ok(m.clone());
        }
        let n = grid.len();
        let mut out = DMatrix::zeros(n, n);
        let mut unit = vec![0.0; n];
        for j in 0..n {
            unit[j] = 1.0;
            let col = self.kind.apply_values(grid, &unit);
            out.column_mut(j).copy_from_slice(&col);
            unit[j] = 0.0;
        }
        Ok(out)
    }

    /// `||O ∓ O^†|| / ||O||` for the requested adjointness, in the discrete
    /// inner product (Frobenius norm). Multipliers are measured on their
    /// Fourier symbols, which gives the same norm by Parseval.
    pub fn adjoint_defect(&self, grid: &PeriodicGrid, target: Adjointness) -> Result<f64> {
        self.kind.check_grid(grid)?;
        let sign = match target {
            Adjointness::SelfAdjoint => -1.0,
            Adjointness::SkewAdjoint => 1.0,
            Adjointness::Unknown => return Ok(0.0),
        };
        if self.is_multiplier() {
            let mut defect = 0.0;
            let mut norm = 0.0;
            for m in spectral::modes(grid) {
                let s = self.symbol(&m).expect("multiplier");
                defect += (s + s.conj() * sign).norm_sqr();
                norm += s.norm_sqr();
            }
            return Ok(if norm == 0.0 { 0.0 } else { (defect / norm).sqrt() });
        }
        let m = self.to_dense(grid)?;
        let norm = m.norm();
        if norm == 0.0 {
            return Ok(0.0);
        }
        Ok((&m + m.transpose() * sign).norm() / norm)
    }

    /// Checks the declared adjointness numerically.
    pub fn verify_adjointness(&self, grid: &PeriodicGrid) -> Result<f64> {
        let defect = self.adjoint_defect(grid, self.adjointness)?;
        if defect > ADJOINT_TOL {
            return Err(Error::Structure(format!(
                "operator declared {:?} has adjoint defect {defect:.3e}",
                self.adjointness
            )));
        }
        Ok(defect)
    }
}

/// Applies `op` to `f`.
pub fn apply_operator(op: &LinearOperator, f: &Field) -> Result<Field> {
    op.apply(f)
}

/// A square matrix of operators acting on bundles: `(B y)_i = sum_j B_ij y_j`.
/// Missing entries are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    size: usize,
    entries: Vec<Option<LinearOperator>>,
}

impl OperatorMatrix {
    pub fn zeros(size: usize) -> Self {
        OperatorMatrix {
            size,
            entries: vec![None; size * size],
        }
    }

    /// Builds a matrix from rows of optional operators.
    pub fn from_rows(rows: Vec<Vec<Option<LinearOperator>>>) -> Result<Self> {
        let size = rows.len();
        if rows.iter().any(|r| r.len() != size) {
            return Err(Error::Dimension("operator matrix must be square".into()));
        }
        Ok(OperatorMatrix {
            size,
            entries: rows.into_iter().flatten().collect(),
        })
    }

    /// Entry `(i, j)` is `matrix[(i, j)] * Identity`.
    pub fn from_constants(matrix: &DMatrix<f64>) -> Self {
        let n = matrix.nrows();
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                if matrix[(i, j)] != 0.0 {
                    out.set(i, j, LinearOperator::identity().scaled(matrix[(i, j)]));
                }
            }
        }
        out
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn set(&mut self, i: usize, j: usize, op: LinearOperator) {
        self.entries[i * self.size + j] = Some(op);
    }

    /// Adds `op` to entry `(i, j)`.
    pub fn add_to(&mut self, i: usize, j: usize, op: LinearOperator) {
        let slot = &mut self.entries[i * self.size + j];
        *slot = Some(match slot.take() {
            Some(existing) => existing.plus(&op),
            None => op,
        });
    }

    pub fn get(&self, i: usize, j: usize) -> Option<&LinearOperator> {
        self.entries[i * self.size + j].as_ref()
    }

    pub fn is_multiplier(&self) -> bool {
        self.entries.iter().flatten().all(LinearOperator::is_multiplier)
    }

    /// Right-multiplies column `j` by the constant `c[j]`.
    pub fn scale_columns(&self, c: &[f64]) -> Self {
        let mut out = Self::zeros(self.size);
        for i in 0..self.size {
            for (j, &cj) in c.iter().enumerate().take(self.size) {
                if let Some(op) = self.get(i, j) {
                    out.set(i, j, op.scaled(cj));
                }
            }
        }
        out
    }

    pub fn check_grid(&self, grid: &PeriodicGrid) -> Result<()> {
        self.entries
            .iter()
            .flatten()
            .try_for_each(|op| op.check_grid(grid))
    }

    pub fn apply(&self, y: &Bundle) -> Result<Bundle> {
        if y.len() != self.size {
            return Err(Error::Dimension(format!(
                "operator matrix of size {} applied to {} components",
                self.size,
                y.len()
            )));
        }
        let grid = *y.grid();
        let mut out = Vec::with_capacity(self.size);
        for i in 0..self.size {
            let mut acc = Field::zeros(grid);
            for j in 0..self.size {
                if let Some(op) = self.get(i, j) {
                    acc = acc.add(&op.apply(y.component(j))?)?;
                }
            }
            out.push(acc);
        }
        Bundle::new(out)
    }

    /// The per-mode matrix of symbols, or `None` if some entry is not a multiplier.
    pub fn mode_matrix(&self, mode: &Mode) -> Option<DMatrix<C64>> {
        let mut m = DMatrix::from_element(self.size, self.size, C64::new(0.0, 0.0));
        for i in 0..self.size {
            for j in 0..self.size {
                if let Some(op) = self.get(i, j) {
                    m[(i, j)] = op.symbol(mode)?;
                }
            }
        }
        Some(m)
    }

    /// The whole matrix as a dense `(size*n) x (size*n)` block matrix.
    pub fn to_dense(&self, grid: &PeriodicGrid) -> Result<DMatrix<f64>> {
        let n = grid.len();
        let mut out = DMatrix::zeros(self.size * n, self.size * n);
        for i in 0..self.size {
            for j in 0..self.size {
                if let Some(op) = self.get(i, j) {
                    out.view_mut((i * n, j * n), (n, n))
                        .copy_from(&op.to_dense(grid)?);
                }
            }
        }
        Ok(out)
    }

    /// Relative defect of `B_ij^† = -B_ji` over all entries.
    pub fn skew_defect(&self, grid: &PeriodicGrid) -> Result<f64> {
        self.check_grid(grid)?;
        if self.is_multiplier() {
            let mut defect = 0.0;
            let mut norm = 0.0;
            for mode in spectral::modes(grid) {
                let m = self.mode_matrix(&mode).expect("multiplier");
                defect += (&m + m.adjoint()).norm_squared();
                norm += m.norm_squared();
            }
            return Ok(if norm == 0.0 { 0.0 } else { (defect / norm).sqrt() });
        }
        let m = self.to_dense(grid)?;
        let norm = m.norm();
        Ok(if norm == 0.0 {
            0.0
        } else {
            (&m + m.transpose()).norm() / norm
        })
    }

    /// Errors unless the matrix is skewsymmetric in the operator sense.
    pub fn verify_skew(&self, grid: &PeriodicGrid) -> Result<f64> {
        let d = self.skew_defect(grid)?;
        if d > ADJOINT_TOL {
            return Err(Error::Structure(format!(
                "operator matrix is not skewsymmetric (defect {d:.3e})"
            )));
        }
        Ok(d)
    }
}
