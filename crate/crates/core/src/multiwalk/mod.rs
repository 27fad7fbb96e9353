//! Random walks with `N` velocities in one or two dimensions.
//!
//! Densities evolve by `∂F_i = -(v_i·∇)F_i + Σ_j α_ji F_j`. After
//! `F = f e^{-λt}` the coupling becomes `β = α + λI`, and [`fit`] decides
//! whether the rescaled system is Hamiltonian for `H = ½ Σ c_i f_i²`.

pub mod dims;
pub mod fit;
pub mod internal;
pub mod io;
pub mod kolmogorov;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::grid::{Bundle, Field, PeriodicGrid};
use crate::operator::{LinearOperator, OperatorMatrix};
use crate::propagate::exact_propagate;
use crate::rescale::{rescale, Direction};

pub use dims::{ham_dim, local_pca_rank, tangent_map_at_beta0, tangent_rank_at_beta0, total_dim};
pub use fit::{fit_hamiltonian, hamiltonian_evolve, HamiltonianCertificate, NotRepresentable};
pub use internal::{InternalCertificate, InternalModel, VectorTelegrapher};
pub use kolmogorov::{kolmogorov_evolve, KolmogorovDirection};

/// Relative tolerance on row-sum constraints.
pub const CONSTRAINT_TOL: f64 = 1e-12;

fn matrix_scale(m: &DMatrix<f64>) -> f64 {
    m.amax().max(1.0)
}

/// Largest `|Σ_j m_ij - target|` over rows.
pub fn row_sum_defect(m: &DMatrix<f64>, target: f64) -> f64 {
    m.row_iter().map(|r| (r.sum() - target).abs()).fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct VelocityModel {
    dim: usize,
    velocities: Vec<Vec<f64>>,
    alpha: DMatrix<f64>,
    lambda: f64,
}

impl VelocityModel {
    /// `alpha` must have zero row sums and nonnegative off-diagonal entries.
    pub fn new(velocities: Vec<Vec<f64>>, alpha: DMatrix<f64>, lambda: f64) -> Result<Self> {
        let n = velocities.len();
        if n == 0 {
            return Err(Error::InvalidParameter("need at least one velocity".into()));
        }
        let dim = velocities[0].len();
        if !(1..=2).contains(&dim) || velocities.iter().any(|v| v.len() != dim) {
            return Err(Error::Dimension(
                "velocities must all have 1 or all have 2 components".into(),
            ));
        }
        if alpha.nrows() != n || alpha.ncols() != n {
            return Err(Error::Dimension(format!(
                "alpha is {}x{} for {n} velocities",
                alpha.nrows(),
                alpha.ncols()
            )));
        }
        if !lambda.is_finite() || alpha.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("non-finite model parameters".into()));
        }
        let defect = row_sum_defect(&alpha, 0.0);
        if defect > CONSTRAINT_TOL * matrix_scale(&alpha) {
            return Err(Error::Model(format!("alpha rows must sum to zero (defect {defect:.3e})")));
        }
        for i in 0..n {
            for j in 0..n {
                if i != j && alpha[(i, j)] < 0.0 {
                    return Err(Error::Model(format!(
                        "transition intensity alpha[{i}][{j}] = {} is negative",
                        alpha[(i, j)]
                    )));
                }
            }
        }
        Ok(VelocityModel {
            dim,
            velocities,
            alpha,
            lambda,
        })
    }

    /// Velocities `(+v, -v)` with flip rate `a`, rescaled at rate `a`.
    pub fn two_velocity(v: f64, a: f64) -> Result<Self> {
        let alpha = DMatrix::from_row_slice(2, 2, &[-a, a, a, -a]);
        Self::new(vec![vec![v], vec![-v]], alpha, a)
    }

    /// `N = 2N̄` velocities whose coupling is `N̄` copies of the two-velocity
    /// walk: velocity `i` pairs with `i + N̄`, and `β = λ[[0, 1], [1, 0]]`.
    pub fn paired(velocities: Vec<Vec<f64>>, lambda: f64) -> Result<Self> {
        let n = velocities.len();
        if !n.is_multiple_of(2) {
            return Err(Error::InvalidParameter("paired model needs an even count".into()));
        }
        let half = n / 2;
        let alpha = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                -lambda
            } else if (i + half) % n == j {
                lambda
            } else {
                0.0
            }
        });
        Self::new(velocities, alpha, lambda)
    }

    pub fn n(&self) -> usize {
        self.velocities.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn velocities(&self) -> &[Vec<f64>] {
        &self.velocities
    }

    pub fn alpha(&self) -> &DMatrix<f64> {
        &self.alpha
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    /// `β = α + λI`
    pub fn rescaled(&self) -> RescaledGenerator {
        RescaledGenerator {
            beta: &self.alpha + DMatrix::identity(self.n(), self.n()) * self.lambda,
            lambda: self.lambda,
        }
    }

    fn transport(&self, i: usize) -> LinearOperator {
        LinearOperator::directional(&self.velocities[i]).scaled(-1.0)
    }

    fn coupled_generator(&self, coupling: &DMatrix<f64>) -> OperatorMatrix {
        let mut g = OperatorMatrix::from_constants(&coupling.transpose());
        for i in 0..self.n() {
            g.add_to(i, i, self.transport(i));
        }
        g
    }

    /// `G_ij = -δ_ij v_i·∇ + α_ji`
    pub fn generator(&self) -> OperatorMatrix {
        self.coupled_generator(&self.alpha)
    }

    /// `G_ij = -δ_ij v_i·∇ + β_ji`
    pub fn rescaled_generator(&self) -> OperatorMatrix {
        self.coupled_generator(&self.rescaled().beta)
    }

    fn check_state(&self, f: &Bundle) -> Result<()> {
        if f.len() != self.n() {
            return Err(Error::Dimension(format!(
                "model has {} velocities, state has {} components",
                self.n(),
                f.len()
            )));
        }
        if f.grid().dims() != self.dim {
            return Err(Error::Dimension(format!(
                "model is {}-dimensional, grid is {}-dimensional",
                self.dim,
                f.grid().dims()
            )));
        }
        Ok(())
    }

    /// Lattice shift of velocity `i` over `dt`, in sites per axis.
    pub fn lattice_shift(&self, i: usize, dt: f64, grid: &PeriodicGrid) -> Result<[i64; 2]> {
        let mut shift = [0i64; 2];
        for (axis, &v) in self.velocities[i].iter().enumerate() {
            let sites = v * dt / grid.spacing(axis);
            let rounded = sites.round();
            if (sites - rounded).abs() > 1e-9 {
                return Err(Error::LatticeMismatch(format!(
                    "velocity {i} moves {sites} sites along axis {axis} per step"
                )));
            }
            shift[axis] = rounded as i64;
        }
        Ok(shift)
    }
}

/// `β` together with the rescaling rate it was built for.
#[derive(Debug, Clone, PartialEq)]
pub struct RescaledGenerator {
    pub beta: DMatrix<f64>,
    pub lambda: f64,
}

impl RescaledGenerator {
    pub fn new(beta: DMatrix<f64>, lambda: f64) -> Result<Self> {
        if !beta.is_square() {
            return Err(Error::Dimension(format!(
                "beta must be square, got {}x{}",
                beta.nrows(),
                beta.ncols()
            )));
        }
        Ok(RescaledGenerator { beta, lambda })
    }

    /// Takes `λ` from the first row sum.
    pub fn infer_lambda(beta: DMatrix<f64>) -> Result<Self> {
        let lambda = if beta.nrows() == 0 { 0.0 } else { beta.row(0).sum() };
        Self::new(beta, lambda)
    }

    pub fn n(&self) -> usize {
        self.beta.nrows()
    }

    /// Checks that every row sums to `λ`.
    pub fn validate(&self) -> Result<()> {
        let defect = row_sum_defect(&self.beta, self.lambda);
        if defect > CONSTRAINT_TOL * matrix_scale(&self.beta) {
            return Err(Error::Model(format!(
                "beta rows must sum to lambda = {} (defect {defect:.3e})",
                self.lambda
            )));
        }
        Ok(())
    }

    /// `β₀ = λ [[0, 1], [1, 0]]` in `N̄ x N̄` blocks.
    pub fn beta0(n_bar: usize, lambda: f64) -> Self {
        let n = 2 * n_bar;
        let beta = DMatrix::from_fn(n, n, |i, j| if (i + n_bar) % n == j { lambda } else { 0.0 });
        RescaledGenerator { beta, lambda }
    }
}

/// One step `F_i(x) ← Σ_j p_ji F_j(x - v_i dt)` with `p = I + α dt`.
pub fn discrete_update(f: &Bundle, model: &VelocityModel, dt: f64) -> Result<Bundle> {
    model.check_state(f)?;
    let n = model.n();
    let p = DMatrix::identity(n, n) + model.alpha() * dt;
    if p.iter().any(|&x| x < 0.0) {
        return Err(Error::InvalidParameter(format!(
            "step {dt} makes some transition probability negative"
        )));
    }
    let grid = *f.grid();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let shift = model.lattice_shift(i, dt, &grid)?;
        let mut acc = Field::zeros(grid);
        for j in 0..n {
            if p[(j, i)] != 0.0 {
                acc = acc.axpy(p[(j, i)], f.component(j))?;
            }
        }
        out.push(acc.shift_sites([-shift[0], -shift[1]]));
    }
    Bundle::new(out)
}

pub fn evolve_continuum(f: &Bundle, model: &VelocityModel, t: f64) -> Result<Bundle> {
    model.check_state(f)?;
    exact_propagate(f, &model.generator(), t)
}

pub fn evolve_rescaled(f: &Bundle, model: &VelocityModel, t: f64) -> Result<Bundle> {
    model.check_state(f)?;
    exact_propagate(f, &model.rescaled_generator(), t)
}

/// `f = F e^{λt}`
pub fn rescale_multi(f: &Bundle, t: f64, lambda: f64) -> Result<Bundle> {
    rescale(f, t, lambda, Direction::Forward)
}

/// `Σ_i ∫ F_i`
pub fn total_mass(f: &Bundle) -> f64 {
    f.components().iter().map(crate::density::integrate).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_state(grid: PeriodicGrid, n: usize, seed: u64) -> Bundle {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Bundle::new((0..n).map(|_| Field::random_band_limited(grid, 4, false, &mut rng)).collect()).unwrap()
    }

    #[test]
    fn model_validation() {
        let bad_rows = DMatrix::from_row_slice(2, 2, &[-1.0, 0.5, 1.0, -1.0]);
        assert!(matches!(
            VelocityModel::new(vec![vec![1.0], vec![-1.0]], bad_rows, 0.0),
            Err(Error::Model(_))
        ));
        let negative = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, 1.0, -1.0]);
        assert!(matches!(
            VelocityModel::new(vec![vec![1.0], vec![-1.0]], negative, 0.0),
            Err(Error::Model(_))
        ));
    }

    #[test]
    fn beta_rows_sum_to_lambda() {
        let m = VelocityModel::two_velocity(1.0, 0.7).unwrap();
        let r = m.rescaled();
        assert_eq!(row_sum_defect(&r.beta, 0.7), 0.0);
        r.validate().unwrap();
        assert_eq!(r.beta, DMatrix::from_row_slice(2, 2, &[0.0, 0.7, 0.7, 0.0]));
    }

    #[test]
    fn zero_alpha_is_independent_transport() {
        let grid = PeriodicGrid::new_1d(32, 1.0).unwrap();
        let m = VelocityModel::new(vec![vec![1.0], vec![-2.0]], DMatrix::zeros(2, 2), 0.0).unwrap();
        let f = random_state(grid, 2, 1);
        let dt = 1.0 / 32.0;
        let g = discrete_update(&f, &m, dt).unwrap();
        assert_eq!(g.component(0), &f.component(0).shift_sites([-1, 0]));
        assert_eq!(g.component(1), &f.component(1).shift_sites([2, 0]));
    }

    #[test]
    fn incommensurate_velocity_is_rejected() {
        let grid = PeriodicGrid::new_1d(32, 1.0).unwrap();
        let m = VelocityModel::new(vec![vec![1.5], vec![-1.0]], DMatrix::zeros(2, 2), 0.0).unwrap();
        assert!(matches!(
            discrete_update(&random_state(grid, 2, 2), &m, 1.0 / 32.0),
            Err(Error::LatticeMismatch(_))
        ));
    }

    #[test]
    fn discrete_mass_is_conserved() {
        let grid = PeriodicGrid::new_2d([16, 16], [1.0, 1.0]).unwrap();
        let vel = vec![vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0], vec![0.0, -1.0]];
        let alpha = DMatrix::from_row_slice(
            4,
            4,
            &[-1.0, 0.5, 0.25, 0.25, 0.5, -1.0, 0.25, 0.25, 0.3, 0.3, -0.8, 0.2, 0.1, 0.1, 0.3, -0.5],
        );
        let m = VelocityModel::new(vel, alpha, 0.0).unwrap();
        let f = random_state(grid, 4, 3);
        let g = discrete_update(&f, &m, 1.0 / 16.0).unwrap();
        assert!((total_mass(&g) - total_mass(&f)).abs() < 1e-12);
    }

    #[test]
    fn zero_lambda_rescaling_is_identity() {
        let grid = PeriodicGrid::new_1d(16, 1.0).unwrap();
        let f = random_state(grid, 3, 4);
        assert_eq!(rescale_multi(&f, 2.0, 0.0).unwrap(), f);
    }

    #[test]
    fn beta0_shape() {
        let b = RescaledGenerator::beta0(2, 1.0);
        let expected = DMatrix::from_row_slice(
            4,
            4,
            &[0., 0., 1., 0., 0., 0., 0., 1., 1., 0., 0., 0., 0., 1., 0., 0.],
        );
        assert_eq!(b.beta, expected);
        let m = VelocityModel::paired(vec![vec![1.0], vec![2.0], vec![-1.0], vec![-2.0]], 1.0).unwrap();
        assert_eq!(m.rescaled(), b);
    }
}
