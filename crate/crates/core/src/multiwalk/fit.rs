//! Deciding whether `β` factors as `β_ji = Γ_ij c_j` with skew `Γ`.
//!
//! Skewness of `Γ_ij = β_ji / c_j` is the homogeneous linear system
//! `c_i β_ji + c_j β_ij = 0` for `i < j`, so the admissible `c` form the
//! nullspace of that system minus the coordinate hyperplanes.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{RescaledGenerator, VelocityModel};
use crate::density::QuadraticDensity;
use crate::error::{Error, Result};
use crate::grid::Bundle;
use crate::linalg::nullspace;
use crate::operator::{LinearOperator, OperatorMatrix};
use crate::propagate::exact_propagate;

/// Relative tolerance for the nullspace cut and the reconstruction checks.
pub const FIT_TOL: f64 = 1e-10;
/// Entries of a unit nullspace vector below this count as zero.
pub const NONZERO_TOL: f64 = 1e-8;
/// Random combinations tried when no basis vector is usable.
pub const RANDOM_DRAWS: usize = 1000;
/// Largest `N` for which equal-magnitude sign patterns are enumerated.
pub const SIGN_SEARCH_MAX: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub enum NotRepresentable {
    /// `β_ii ≠ 0` while `Γ_ii = 0` forces it to vanish.
    Diagonal { index: usize, value: f64 },
    /// Every admissible `c` has a zero entry.
    NoValidC { nullity: usize },
    /// `c_j Σ_i Γ_ij` differs from `λ`.
    LambdaMismatch { column: usize, value: f64, lambda: f64 },
}

impl std::fmt::Display for NotRepresentable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            NotRepresentable::Diagonal { index, value } => {
                write!(f, "diagonal obstruction: beta[{index}][{index}] = {value:e} must vanish")
            }
            NotRepresentable::NoValidC { nullity } => write!(
                f,
                "no valid c: every vector of the {nullity}-dimensional solution space has a zero entry"
            ),
            NotRepresentable::LambdaMismatch { column, value, lambda } => write!(
                f,
                "lambda mismatch: c_{column} * sum_i Gamma_i{column} = {value:e}, expected {lambda:e}"
            ),
        }
    }
}

impl std::error::Error for NotRepresentable {}

/// A skew `Γ` and nonzero `c` with `β_ji = Γ_ij c_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianCertificate {
    gamma: DMatrix<f64>,
    c: Vec<f64>,
    lambda: f64,
}

impl HamiltonianCertificate {
    /// Builds a certificate from the strictly upper triangle of `Γ`.
    pub fn from_upper(gamma_upper: &DMatrix<f64>, c: Vec<f64>, lambda: f64) -> Result<Self> {
        let n = c.len();
        if gamma_upper.nrows() != n || gamma_upper.ncols() != n {
            return Err(Error::Dimension(format!(
                "Gamma is {}x{} for {n} weights",
                gamma_upper.nrows(),
                gamma_upper.ncols()
            )));
        }
        if c.iter().any(|&x| x == 0.0 || !x.is_finite()) {
            return Err(Error::Structure("every c_i must be finite and nonzero".into()));
        }
        let gamma = DMatrix::from_fn(n, n, |i, j| match i.cmp(&j) {
            std::cmp::Ordering::Less => gamma_upper[(i, j)],
            std::cmp::Ordering::Greater => -gamma_upper[(j, i)],
            std::cmp::Ordering::Equal => 0.0,
        });
        Ok(HamiltonianCertificate { gamma, c, lambda })
    }

    pub fn n(&self) -> usize {
        self.c.len()
    }

    pub fn gamma(&self) -> &DMatrix<f64> {
        &self.gamma
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// `β_ji = Γ_ij c_j`, i.e. `βᵗ = Γ ĉ`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let n = self.n();
        DMatrix::from_fn(n, n, |j, i| self.gamma[(i, j)] * self.c[j])
    }

    /// `max |β - reconstruct()|` relative to `max(1, max|β|)`.
    pub fn reconstruction_defect(&self, beta: &DMatrix<f64>) -> f64 {
        if beta.shape() != (self.n(), self.n()) {
            return f64::INFINITY;
        }
        (beta - self.reconstruct()).amax() / beta.amax().max(1.0)
    }

    /// `H = ½ Σ c_i f_i²`
    pub fn density(&self) -> QuadraticDensity {
        QuadraticDensity::diagonal(&self.c, &LinearOperator::identity()).expect("identity is selfadjoint")
    }

    /// `H_n = ½ Σ c_i (∂ⁿ f_i)²`, written as `½ Σ c_i f_i (-1)ⁿ ∂²ⁿ f_i`.
    pub fn density_n(&self, n: u32) -> QuadraticDensity {
        let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
        let w: Vec<f64> = self.c.iter().map(|c| sign * c).collect();
        QuadraticDensity::diagonal(&w, &LinearOperator::derivative(2 * n)).expect("even order")
    }

    /// `B_ij = -δ_ij (1/c_i) v_i·∇ + Γ_ij`
    pub fn structure(&self, model: &VelocityModel) -> Result<OperatorMatrix> {
        if model.n() != self.n() {
            return Err(Error::Dimension(format!(
                "certificate for {} velocities, model has {}",
                self.n(),
                model.n()
            )));
        }
        let mut b = OperatorMatrix::from_constants(&self.gamma);
        for i in 0..self.n() {
            b.add_to(i, i, LinearOperator::directional(&model.velocities()[i]).scaled(-1.0 / self.c[i]));
        }
        Ok(b)
    }
}

/// Finds `(Γ, c)` or explains why none exists. `seed` drives the random
/// search used only when the nullspace basis has no all-nonzero vector.
pub fn fit_hamiltonian(
    beta: &RescaledGenerator,
    seed: u64,
) -> std::result::Result<HamiltonianCertificate, NotRepresentable> {
    let b = &beta.beta;
    let n = beta.n();
    let scale = b.amax().max(1.0);
    for i in 0..n {
        if b[(i, i)].abs() > FIT_TOL * scale {
            return Err(NotRepresentable::Diagonal {
                index: i,
                value: b[(i, i)],
            });
        }
    }
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let mut system = DMatrix::zeros(pairs.len(), n);
    for (row, &(i, j)) in pairs.iter().enumerate() {
        system[(row, i)] = b[(j, i)];
        system[(row, j)] = b[(i, j)];
    }
    let basis = nullspace(&system, FIT_TOL);
    let c = choose_weights(&system, &basis, seed).ok_or(NotRepresentable::NoValidC {
        nullity: basis.len(),
    })?;
    let mut cert = normalize(b, c, beta.lambda);
    let skew_defect = (cert.gamma() + cert.gamma().transpose()).amax();
    // store the exactly skew part; the reconstruction check below then
    // measures how far the found c is from a true solution
    cert.gamma = (cert.gamma() - cert.gamma().transpose()) * 0.5;
    if skew_defect > FIT_TOL || cert.reconstruction_defect(b) > FIT_TOL {
        return Err(NotRepresentable::NoValidC {
            nullity: basis.len(),
        });
    }
    if beta.lambda != 0.0 {
        for j in 0..n {
            let value = cert.c[j] * cert.gamma.column(j).sum();
            if (value - beta.lambda).abs() > FIT_TOL * scale {
                return Err(NotRepresentable::LambdaMismatch {
                    column: j,
                    value,
                    lambda: beta.lambda,
                });
            }
        }
    }
    Ok(cert)
}

fn all_nonzero(v: &DVector<f64>) -> bool {
    let norm = v.norm();
    norm > 0.0 && v.iter().all(|x| x.abs() >= NONZERO_TOL * norm)
}

/// Search order: equal-magnitude sign vectors in the nullspace (fewest sign
/// changes first), then the
/// basis vectors, then seeded random combinations.
fn choose_weights(system: &DMatrix<f64>, basis: &[DVector<f64>], seed: u64) -> Option<DVector<f64>> {
    if basis.is_empty() {
        return None;
    }
    let n = basis[0].len();
    if n <= SIGN_SEARCH_MAX {
        let tol = FIT_TOL * system.amax().max(1.0) * (n as f64).sqrt();
        let sign = |mask: u32, i: usize| if i > 0 && mask >> (i - 1) & 1 == 1 { -1.0 } else { 1.0 };
        // fewest sign changes along the index first, so block patterns win
        let mut masks: Vec<u32> = (0..(1u32 << (n - 1))).collect();
        masks.sort_by_key(|&m| ((1..n).filter(|&i| sign(m, i) != sign(m, i - 1)).count(), m));
        for mask in masks {
            let s = DVector::from_fn(n, |i, _| sign(mask, i));
            if (system * &s).amax() <= tol {
                return Some(s);
            }
        }
    }
    if let Some(v) = basis.iter().find(|v| all_nonzero(v)) {
        return Some(v.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..RANDOM_DRAWS {
        let mut v = DVector::zeros(n);
        for b in basis {
            v += b * rng.random_range(-1.0..1.0);
        }
        if all_nonzero(&v) {
            return Some(v);
        }
    }
    None
}

/// Scales `c` so that `max|Γ| = 1` with the first nonzero strictly-upper
/// entry of `Γ` positive; `Γ = 0` keeps `c` at all ones.
fn normalize(beta: &DMatrix<f64>, c: DVector<f64>, lambda: f64) -> HamiltonianCertificate {
    let n = c.len();
    let raw = DMatrix::from_fn(n, n, |i, j| beta[(j, i)] / c[j]);
    let top = raw.amax();
    if top == 0.0 {
        return HamiltonianCertificate {
            gamma: DMatrix::zeros(n, n),
            c: vec![1.0; n],
            lambda,
        };
    }
    let first = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .map(|(i, j)| raw[(i, j)])
        .find(|x| x.abs() > FIT_TOL * top)
        .unwrap_or(1.0);
    // Γ scales as 1/c, so c ← s c gives Γ ← Γ / s
    let s = top * first.signum();
    HamiltonianCertificate {
        gamma: raw / s,
        c: c.iter().map(|x| x * s).collect(),
        lambda,
    }
}

/// Evolves `f` by `∂f_i = Σ_j B_ij δH/δf_j`, which must coincide with the
/// rescaled flow of `model`.
pub fn hamiltonian_evolve(
    f: &Bundle,
    cert: &HamiltonianCertificate,
    model: &VelocityModel,
    t: f64,
) -> Result<Bundle> {
    let defect = cert.reconstruction_defect(&model.rescaled().beta);
    if defect > FIT_TOL {
        return Err(Error::Structure(format!(
            "certificate does not reproduce the model's beta (defect {defect:.3e})"
        )));
    }
    let generator = cert.structure(model)?.scale_columns(cert.c());
    exact_propagate(f, &generator, t)
}
