//! Walks whose particle also carries one of `M` internal states.
//!
//! State `(i, μ)` is flattened to index `i·M + μ`, and the intensities
//! `α_ji^{νμ}` form an `NM x NM` matrix with row `(j, ν)` and column
//! `(i, μ)`. The model is then an ordinary [`VelocityModel`] in which each
//! velocity is repeated `M` times.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{evolve_continuum, VelocityModel};
use crate::convergence::observed_order;
use crate::density::QuadraticDensity;
use crate::error::{Error, Result};
use crate::grid::{Bundle, Field};
use crate::linalg::nullspace;
use crate::operator::{LinearOperator, OperatorMatrix};
use crate::propagate::exact_propagate;
use crate::telegrapher::time_derivatives;

#[derive(Debug, Clone, PartialEq)]
pub struct InternalModel {
    n: usize,
    m: usize,
    expanded: VelocityModel,
}

impl InternalModel {
    pub fn new(velocities: Vec<Vec<f64>>, m: usize, alpha: DMatrix<f64>, lambda: f64) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParameter("need at least one internal state".into()));
        }
        let n = velocities.len();
        let expanded_velocities = velocities
            .iter()
            .flat_map(|v| std::iter::repeat_n(v.clone(), m))
            .collect();
        let expanded = VelocityModel::new(expanded_velocities, alpha, lambda)?;
        Ok(InternalModel { n, m, expanded })
    }

    /// The reflection-symmetric 1D model with velocities `±v`:
    /// `∂F₊ = v∂F₊ + α̃F₊ + ᾱF₋`, `∂F₋ = -v∂F₋ + α̃F₋ + ᾱF₊`.
    /// Component block 0 is `F₊` (moving with velocity `-v`).
    pub fn reflection_symmetric(
        v: f64,
        alpha_tilde: &DMatrix<f64>,
        alpha_bar: &DMatrix<f64>,
        lambda: f64,
    ) -> Result<Self> {
        let m = check_pair(alpha_tilde, alpha_bar)?;
        let mut alpha = DMatrix::zeros(2 * m, 2 * m);
        for (bi, bj, block) in [
            (0, 0, alpha_tilde),
            (1, 1, alpha_tilde),
            (0, 1, alpha_bar),
            (1, 0, alpha_bar),
        ] {
            alpha
                .view_mut((bi * m, bj * m), (m, m))
                .copy_from(&block.transpose());
        }
        Self::new(vec![vec![-v], vec![v]], m, alpha, lambda)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn index(&self, i: usize, mu: usize) -> usize {
        i * self.m + mu
    }

    /// `α_ji^{νμ}`
    pub fn alpha4(&self, j: usize, i: usize, nu: usize, mu: usize) -> f64 {
        self.expanded.alpha()[(self.index(j, nu), self.index(i, mu))]
    }

    pub fn as_velocity_model(&self) -> &VelocityModel {
        &self.expanded
    }
}

pub fn internal_evolve(f: &Bundle, model: &InternalModel, t: f64) -> Result<Bundle> {
    evolve_continuum(f, &model.expanded, t)
}

/// Per-velocity symmetric blocks `c_i^{μν}` of `H = ½ Σ c_i^{μν} f_i^μ f_i^ν`.
#[derive(Debug, Clone, PartialEq)]
pub struct InternalCertificate {
    pub blocks: Vec<DMatrix<f64>>,
}

impl InternalCertificate {
    pub fn matrix(&self) -> DMatrix<f64> {
        let m = self.blocks[0].nrows();
        let n = self.blocks.len();
        let mut c = DMatrix::zeros(n * m, n * m);
        for (i, b) in self.blocks.iter().enumerate() {
            c.view_mut((i * m, i * m), (m, m)).copy_from(b);
        }
        c
    }

    pub fn density(&self) -> QuadraticDensity {
        let m = self.blocks[0].nrows();
        let mut d = QuadraticDensity::new();
        for (i, b) in self.blocks.iter().enumerate() {
            for mu in 0..m {
                for nu in 0..m {
                    if b[(mu, nu)] != 0.0 {
                        d = d
                            .term(i * m + mu, i * m + nu, 0.5 * b[(mu, nu)], LinearOperator::identity())
                            .expect("identity is selfadjoint");
                    }
                }
            }
        }
        d
    }
}

/// Finds block-diagonal symmetric `C` with `C K + Kᵗ C = 0` for the rescaled
/// coupling `K = (α + λI)ᵗ`, which makes `½ fᵗ C f` conserved. The returned
/// `C` is a seeded random combination of a nullspace basis.
pub fn fit_internal_hamiltonian(model: &InternalModel, seed: u64) -> Result<InternalCertificate> {
    let (n, m) = (model.n, model.m);
    let size = n * m;
    let k = model.expanded.rescaled().beta.transpose();
    let mut params = Vec::new();
    for i in 0..n {
        for mu in 0..m {
            for nu in mu..m {
                params.push((i, mu, nu));
            }
        }
    }
    let unit = |&(i, mu, nu): &(usize, usize, usize)| {
        let mut c = DMatrix::zeros(size, size);
        c[(i * m + mu, i * m + nu)] = 1.0;
        c[(i * m + nu, i * m + mu)] = 1.0;
        c
    };
    let mut system = DMatrix::zeros(size * size, params.len());
    for (col, p) in params.iter().enumerate() {
        let c = unit(p);
        let s = &c * &k + k.transpose() * &c;
        system.column_mut(col).copy_from_slice(s.as_slice());
    }
    let basis = nullspace(&system, 1e-10);
    if basis.is_empty() {
        return Err(Error::Model("no conserved quadratic form of this shape".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coeffs = DVector::zeros(params.len());
    for b in &basis {
        coeffs += b * rng.random_range(0.5..1.5);
    }
    let mut blocks = vec![DMatrix::zeros(m, m); n];
    for (p, &x) in params.iter().zip(coeffs.iter()) {
        let (i, mu, nu) = *p;
        blocks[i][(mu, nu)] += x;
        if mu != nu {
            blocks[i][(nu, mu)] += x;
        }
    }
    Ok(InternalCertificate { blocks })
}

fn check_pair(alpha_tilde: &DMatrix<f64>, alpha_bar: &DMatrix<f64>) -> Result<usize> {
    let m = alpha_tilde.nrows();
    if m == 0 || !alpha_tilde.is_square() || alpha_bar.shape() != alpha_tilde.shape() {
        return Err(Error::Dimension(format!(
            "alpha_tilde {:?} and alpha_bar {:?} must be equal square shapes",
            alpha_tilde.shape(),
            alpha_bar.shape()
        )));
    }
    Ok(m)
}

/// The pair `F₊, F₋` of the reflection-symmetric model and its reduction to
/// `∂²F - 2α̃ ∂F = v² ∂²F/∂x² + (ᾱ² - α̃² + [ᾱ, α̃]) F`.
#[derive(Debug, Clone)]
pub struct VectorTelegrapher {
    v: f64,
    alpha_tilde: DMatrix<f64>,
    alpha_bar: DMatrix<f64>,
}

/// Residual sup norms at a sequence of differencing steps.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualStudy {
    pub steps: Vec<f64>,
    pub residuals: Vec<f64>,
    pub order: f64,
}

fn mix(m: &DMatrix<f64>, fields: &[Field]) -> Result<Vec<Field>> {
    (0..m.nrows())
        .map(|r| {
            let mut acc = Field::zeros(*fields[0].grid());
            for (c, f) in fields.iter().enumerate() {
                if m[(r, c)] != 0.0 {
                    acc = acc.axpy(m[(r, c)], f)?;
                }
            }
            Ok(acc)
        })
        .collect()
}

impl VectorTelegrapher {
    /// Requires the column sums of `α̃ + ᾱ` to vanish.
    pub fn new(v: f64, alpha_tilde: DMatrix<f64>, alpha_bar: DMatrix<f64>) -> Result<Self> {
        check_pair(&alpha_tilde, &alpha_bar)?;
        let sum = &alpha_tilde + &alpha_bar;
        let scale = alpha_tilde.amax().max(alpha_bar.amax()).max(1.0);
        let defect = sum.column_iter().map(|c| c.sum().abs()).fold(0.0, f64::max);
        if defect > super::CONSTRAINT_TOL * scale {
            return Err(Error::Model(format!(
                "columns of alpha_tilde + alpha_bar must sum to zero (defect {defect:.3e})"
            )));
        }
        Ok(VectorTelegrapher {
            v,
            alpha_tilde,
            alpha_bar,
        })
    }

    pub fn m(&self) -> usize {
        self.alpha_tilde.nrows()
    }

    /// `ᾱ² - α̃² + [ᾱ, α̃]`
    pub fn forcing(&self) -> DMatrix<f64> {
        let (t, b) = (&self.alpha_tilde, &self.alpha_bar);
        b * b - t * t + b * t - t * b
    }

    fn block_generator(&self, diag: [(&DMatrix<f64>, f64); 2], off: [&DMatrix<f64>; 2], off_deriv: f64) -> OperatorMatrix {
        let m = self.m();
        let mut coupling = DMatrix::zeros(2 * m, 2 * m);
        coupling.view_mut((0, 0), (m, m)).copy_from(diag[0].0);
        coupling.view_mut((m, m), (m, m)).copy_from(diag[1].0);
        coupling.view_mut((0, m), (m, m)).copy_from(off[0]);
        coupling.view_mut((m, 0), (m, m)).copy_from(off[1]);
        let mut g = OperatorMatrix::from_constants(&coupling);
        let d = LinearOperator::derivative(1).scaled(self.v);
        for mu in 0..m {
            if diag[0].1 != 0.0 {
                g.add_to(mu, mu, d.scaled(diag[0].1));
                g.add_to(m + mu, m + mu, d.scaled(diag[1].1));
            }
            if off_deriv != 0.0 {
                g.add_to(mu, m + mu, d.scaled(off_deriv));
                g.add_to(m + mu, mu, d.scaled(off_deriv));
            }
        }
        g
    }

    /// Generator of `(F₊, F₋)`.
    pub fn pair_generator(&self) -> OperatorMatrix {
        self.block_generator(
            [(&self.alpha_tilde, 1.0), (&self.alpha_tilde, -1.0)],
            [&self.alpha_bar, &self.alpha_bar],
            0.0,
        )
    }

    /// Generator of `(F, G)`: `F_t = v∂G + (α̃ + ᾱ)F`, `G_t = v∂F + (α̃ - ᾱ)G`.
    pub fn fg_generator(&self) -> OperatorMatrix {
        let p = &self.alpha_tilde + &self.alpha_bar;
        let q = &self.alpha_tilde - &self.alpha_bar;
        let zero = DMatrix::zeros(self.m(), self.m());
        self.block_generator([(&p, 0.0), (&q, 0.0)], [&zero, &zero], 1.0)
    }

    fn stack(&self, a: &[Field], b: &[Field]) -> Result<Bundle> {
        if a.len() != self.m() || b.len() != self.m() {
            return Err(Error::Dimension(format!(
                "expected {} internal components per block",
                self.m()
            )));
        }
        Bundle::new(a.iter().chain(b).cloned().collect())
    }

    fn unstack(&self, b: Bundle) -> (Vec<Field>, Vec<Field>) {
        let mut all = b.into_components();
        let second = all.split_off(self.m());
        (all, second)
    }

    pub fn evolve_pair(&self, f_plus: &[Field], f_minus: &[Field], t: f64) -> Result<(Vec<Field>, Vec<Field>)> {
        let s = self.stack(f_plus, f_minus)?;
        Ok(self.unstack(exact_propagate(&s, &self.pair_generator(), t)?))
    }

    pub fn evolve_fg(&self, f: &[Field], g: &[Field], t: f64) -> Result<(Vec<Field>, Vec<Field>)> {
        let s = self.stack(f, g)?;
        Ok(self.unstack(exact_propagate(&s, &self.fg_generator(), t)?))
    }

    /// `F = (F₊ + F₋)/2` along the pair flow.
    pub fn mean_trajectory(&self, f_plus: &[Field], f_minus: &[Field], t: f64) -> Result<Vec<Field>> {
        let (p, m) = self.evolve_pair(f_plus, f_minus, t)?;
        p.iter().zip(&m).map(|(a, b)| a.zip_with(b, |x, y| 0.5 * (x + y))).collect()
    }

    /// Sup norm over components of the second-order residual at time `t`,
    /// with time derivatives from central differences of step `h`.
    pub fn residual(&self, f_plus: &[Field], f_minus: &[Field], t: f64, h: f64) -> Result<f64> {
        let mut per_component = Vec::with_capacity(self.m());
        for mu in 0..self.m() {
            let traj = |s: f64| self.mean_trajectory(f_plus, f_minus, s).map(|mut v| v.swap_remove(mu));
            per_component.push(time_derivatives(traj, t, h)?);
        }
        let f: Vec<Field> = per_component.iter().map(|c| c.0.clone()).collect();
        let ft: Vec<Field> = per_component.iter().map(|c| c.1.clone()).collect();
        let ftt: Vec<Field> = per_component.iter().map(|c| c.2.clone()).collect();
        let damp = mix(&self.alpha_tilde, &ft)?;
        let force = mix(&self.forcing(), &f)?;
        let lap = LinearOperator::derivative(2).scaled(self.v * self.v);
        let mut worst = 0.0_f64;
        for mu in 0..self.m() {
            let r = ftt[mu]
                .axpy(-2.0, &damp[mu])?
                .sub(&lap.apply(&f[mu])?)?
                .sub(&force[mu])?;
            worst = worst.max(r.sup_norm());
        }
        Ok(worst)
    }

    /// Residuals at `h0, h0/2, ...` (`levels` steps) and the fitted order.
    pub fn residual_study(
        &self,
        f_plus: &[Field],
        f_minus: &[Field],
        t: f64,
        h0: f64,
        levels: usize,
    ) -> Result<ResidualStudy> {
        let steps: Vec<f64> = (0..levels).map(|k| h0 / 2f64.powi(k as i32)).collect();
        let residuals = steps
            .iter()
            .map(|&h| self.residual(f_plus, f_minus, t, h))
            .collect::<Result<Vec<_>>>()?;
        let order = observed_order(&steps, &residuals)?;
        Ok(ResidualStudy {
            steps,
            residuals,
            order,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::PeriodicGrid;

    fn example(lambda: f64, s: f64) -> (DMatrix<f64>, DMatrix<f64>) {
        let tilde = DMatrix::identity(2, 2) * -lambda;
        let bar = DMatrix::from_row_slice(2, 2, &[lambda - s, s, s, lambda - s]);
        (tilde, bar)
    }

    #[test]
    fn constraint_is_enforced() {
        let (t, b) = example(1.0, 0.3);
        assert!(VectorTelegrapher::new(1.0, t.clone(), b.clone()).is_ok());
        assert!(matches!(
            VectorTelegrapher::new(1.0, t, b * 2.0),
            Err(Error::Model(_))
        ));
    }

    #[test]
    fn single_state_reduces_to_plain_model() {
        let a = 0.6;
        let t = DMatrix::from_element(1, 1, -a);
        let b = DMatrix::from_element(1, 1, a);
        let im = InternalModel::reflection_symmetric(1.0, &t, &b, a).unwrap();
        let plain = VelocityModel::new(
            vec![vec![-1.0], vec![1.0]],
            DMatrix::from_row_slice(2, 2, &[-a, a, a, -a]),
            a,
        )
        .unwrap();
        assert_eq!(im.as_velocity_model(), &plain);
        assert_eq!(im.alpha4(0, 1, 0, 0), a);
    }

    #[test]
    fn forcing_vanishes_in_scalar_case() {
        let vt = VectorTelegrapher::new(1.0, DMatrix::from_element(1, 1, -0.4), DMatrix::from_element(1, 1, 0.4)).unwrap();
        assert_eq!(vt.forcing()[(0, 0)], 0.0);
    }

    #[test]
    fn internal_hamiltonian_for_symmetric_example() {
        let (t, b) = example(0.8, 0.25);
        let im = InternalModel::reflection_symmetric(1.0, &t, &b, 0.8).unwrap();
        let cert = fit_internal_hamiltonian(&im, 3).unwrap();
        let c = cert.matrix();
        let k = im.as_velocity_model().rescaled().beta.transpose();
        assert!((&c * &k + k.transpose() * &c).amax() < 1e-12 * c.amax());
        assert!(c.amax() > 0.0);
    }

    #[test]
    fn pair_and_fg_flows_agree() {
        let grid = PeriodicGrid::new_1d(32, 1.0).unwrap();
        let (t, b) = example(0.5, 0.2);
        let vt = VectorTelegrapher::new(1.2, t, b).unwrap();
        let mut rng = <ChaCha8Rng as SeedableRng>::seed_from_u64(8);
        let fp: Vec<Field> = (0..2).map(|_| Field::random_band_limited(grid, 4, false, &mut rng)).collect();
        let fm: Vec<Field> = (0..2).map(|_| Field::random_band_limited(grid, 4, false, &mut rng)).collect();
        let f0: Vec<Field> = fp.iter().zip(&fm).map(|(a, b)| a.add(b).unwrap().scale(0.5)).collect();
        let g0: Vec<Field> = fp.iter().zip(&fm).map(|(a, b)| a.sub(b).unwrap().scale(0.5)).collect();
        let f_pair = vt.mean_trajectory(&fp, &fm, 0.7).unwrap();
        let (f_fg, _) = vt.evolve_fg(&f0, &g0, 0.7).unwrap();
        for (x, y) in f_pair.iter().zip(&f_fg) {
            assert!(x.sup_distance(y).unwrap() < 1e-12);
        }
    }
}
