//! The one-dimensional persistent random walk.
//!
//! A particle moves with speed `v` and reverses direction at the events of a
//! Poisson process of intensity `a`. For a test function `φ`, the pair
//! `F±_n(x) = <φ(x ± S_n)>` obeys an exact two-term recursion on the lattice
//! `Z·dx` with `dx = v·dt`; its continuum limit is
//!
//! ```text
//! ∂F⁺/∂t =  v ∂F⁺ - a (F⁺ - F⁻)
//! ∂F⁻/∂t = -v ∂F⁻ - a (F⁻ - F⁺)
//! ```
//!
//! With `F± = f± e^{-at}` this becomes `∂f/∂t = B δH/δf` for the skew
//! matrix `B = [[v∂, -a], [a, v∂]]` and `H = ((f⁺)² - (f⁻)²)/2`, and every
//! `H_n = (f⁺ ∂^{2n} f⁺ - f⁻ ∂^{2n} f⁻)/2` is conserved.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::density::{integrate, QuadraticDensity};
use crate::error::{Error, Result};
use crate::grid::{Bundle, Field, PeriodicGrid};
use crate::operator::{LinearOperator, OperatorMatrix};
use crate::propagate::{exact_propagate, rk4_propagate, SpectralPropagator};
use crate::report::{DensityReport, Frame};
use crate::rescale::{rescale, rescale_factor, Direction};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WalkParams {
    pub v: f64,
    pub a: f64,
    pub dt: f64,
}

impl WalkParams {
    pub fn new(v: f64, a: f64, dt: f64) -> Result<Self> {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidParameter(format!("speed must be positive, got {v}")));
        }
        if !(a >= 0.0 && a.is_finite()) {
            return Err(Error::InvalidParameter(format!("intensity must be >= 0, got {a}")));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("step time must be positive, got {dt}")));
        }
        if a * dt >= 1.0 {
            return Err(Error::InvalidParameter(format!(
                "flip probability a*dt = {} must be below 1",
                a * dt
            )));
        }
        Ok(WalkParams { v, a, dt })
    }

    /// Lattice spacing `v·dt`.
    pub fn dx(&self) -> f64 {
        self.v * self.dt
    }

    pub fn flip_probability(&self) -> f64 {
        self.a * self.dt
    }

    /// The lattice must coincide with the grid: one site per grid point.
    pub fn check_lattice(&self, grid: &PeriodicGrid) -> Result<()> {
        if grid.dims() != 1 {
            return Err(Error::Dimension("the walk lives on a 1D grid".into()));
        }
        let h = grid.spacing(0);
        if (self.dx() - h).abs() > 1e-12 * h {
            return Err(Error::LatticeMismatch(format!(
                "lattice spacing v*dt = {} differs from grid spacing {h}",
                self.dx()
            )));
        }
        Ok(())
    }

    /// A grid of `points` sites whose spacing is exactly the lattice spacing.
    pub fn lattice_grid(&self, points: usize) -> Result<PeriodicGrid> {
        PeriodicGrid::new_1d(points, self.dx() * points as f64)
    }
}

/// One step of `F±_n(x) = (1 - a dt) F±_{n-1}(x ± dx) + a dt F∓_{n-1}(x ± dx)`.
pub fn expectation_recursion_step(
    plus: &Field,
    minus: &Field,
    params: &WalkParams,
) -> Result<(Field, Field)> {
    plus.check_grid(minus)?;
    params.check_lattice(plus.grid())?;
    let p = params.flip_probability();
    let q = 1.0 - p;
    let plus_ahead = plus.shift_sites([1, 0]);
    let minus_ahead = minus.shift_sites([1, 0]);
    let plus_behind = plus.shift_sites([-1, 0]);
    let minus_behind = minus.shift_sites([-1, 0]);
    let new_plus = plus_ahead.zip_with(&minus_ahead, |s, o| q * s + p * o)?;
    let new_minus = minus_behind.zip_with(&plus_behind, |s, o| q * s + p * o)?;
    Ok((new_plus, new_minus))
}

/// `(F⁺_n, F⁻_n)` from `F±_0 = φ`.
pub fn expectation_recursion(phi: &Field, n_steps: usize, params: &WalkParams) -> Result<(Field, Field)> {
    params.check_lattice(phi.grid())?;
    let mut state = (phi.clone(), phi.clone());
    for _ in 0..n_steps {
        state = expectation_recursion_step(&state.0, &state.1, params)?;
    }
    Ok(state)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub plus: f64,
    pub minus: f64,
    pub stderr_plus: f64,
    pub stderr_minus: f64,
    pub n_samples: usize,
    pub seed: u64,
}

/// Displacement `S_n` of one simulated walk whose first step is positive.
fn sample_displacement(rng: &mut ChaCha8Rng, n_steps: usize, params: &WalkParams) -> f64 {
    if n_steps == 0 {
        return 0.0;
    }
    let p = params.flip_probability();
    let mut direction = 1.0;
    let mut sites = 1.0;
    for _ in 1..n_steps {
        if rng.random::<f64>() < p {
            direction = -direction;
        }
        sites += direction;
    }
    sites * params.dx()
}

/// Monte Carlo estimate of `<φ(x + S_n)>` and `<φ(x - S_n)>`.
///
/// Sample `i` draws from its own ChaCha stream `(seed, i)`, so the result
/// does not depend on how samples are scheduled across threads.
pub fn monte_carlo_expectation<P>(
    phi: P,
    x: f64,
    n_steps: usize,
    params: &WalkParams,
    n_samples: usize,
    seed: u64,
) -> Result<McEstimate>
where
    P: Fn(f64) -> f64 + Sync,
{
    if n_samples < 100 {
        return Err(Error::InvalidParameter(format!(
            "need at least 100 samples, got {n_samples}"
        )));
    }
    let draws: Vec<(f64, f64)> = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let s = sample_displacement(&mut rng, n_steps, params);
            (phi(x + s), phi(x - s))
        })
        .collect();
    let (plus, stderr_plus) = mean_and_stderr(draws.iter().map(|d| d.0), n_samples);
    let (minus, stderr_minus) = mean_and_stderr(draws.iter().map(|d| d.1), n_samples);
    Ok(McEstimate {
        plus,
        minus,
        stderr_plus,
        stderr_minus,
        n_samples,
        seed,
    })
}

fn mean_and_stderr(values: impl Iterator<Item = f64> + Clone, n: usize) -> (f64, f64) {
    let nf = n as f64;
    let mean = values.clone().sum::<f64>() / nf;
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    (mean, (var / nf).sqrt())
}

fn pair_matrix(diag_plus: LinearOperator, diag_minus: LinearOperator, upper: f64, lower: f64) -> OperatorMatrix {
    let mut g = OperatorMatrix::zeros(2);
    g.set(0, 0, diag_plus);
    g.set(1, 1, diag_minus);
    g.set(0, 1, LinearOperator::identity().scaled(upper));
    g.set(1, 0, LinearOperator::identity().scaled(lower));
    g
}

/// Generator of the dissipative continuum system.
pub fn unrescaled_generator(params: &WalkParams) -> OperatorMatrix {
    let d = LinearOperator::derivative(1).scaled(params.v);
    pair_matrix(
        d.shifted(-params.a),
        d.scaled(-1.0).shifted(-params.a),
        params.a,
        params.a,
    )
}

/// Generator of the rescaled system `∂f± = ±v ∂f± + a f∓`.
pub fn hamiltonian_generator(params: &WalkParams) -> OperatorMatrix {
    let d = LinearOperator::derivative(1).scaled(params.v);
    pair_matrix(d.clone(), d.scaled(-1.0), params.a, params.a)
}

/// The skew structure matrix `[[v∂, -a], [a, v∂]]`.
pub fn structure_matrix(params: &WalkParams) -> OperatorMatrix {
    let d = LinearOperator::derivative(1).scaled(params.v);
    pair_matrix(d.clone(), d, -params.a, params.a)
}

/// `H_n = (f⁺ ∂^{2n} f⁺ - f⁻ ∂^{2n} f⁻) / 2`
pub fn density_hn(n: u32) -> QuadraticDensity {
    let op = LinearOperator::derivative(2 * n);
    QuadraticDensity::new()
        .term(0, 0, 0.5, op.clone())
        .and_then(|d| d.term(1, 1, -0.5, op))
        .expect("even derivatives are selfadjoint")
}

fn check_pair(state: &Bundle) -> Result<()> {
    if state.len() != 2 {
        return Err(Error::Dimension(format!(
            "walk state has 2 components, got {}",
            state.len()
        )));
    }
    Ok(())
}

pub fn evolve_unrescaled(state: &Bundle, t: f64, params: &WalkParams) -> Result<Bundle> {
    check_pair(state)?;
    exact_propagate(state, &unrescaled_generator(params), t)
}

pub fn evolve_hamiltonian(state: &Bundle, t: f64, params: &WalkParams) -> Result<Bundle> {
    check_pair(state)?;
    exact_propagate(state, &hamiltonian_generator(params), t)
}

/// `∫ H_n dx`
pub fn conserved_density(state: &Bundle, n: u32) -> Result<f64> {
    check_pair(state)?;
    density_hn(n).value(state)
}

/// Least-squares slope of `ln|values|` against `times`.
pub fn decay_exponent(times: &[f64], values: &[f64]) -> Result<f64> {
    if times.len() != values.len() || times.len() < 2 {
        return Err(Error::InvalidParameter(
            "need at least two matching samples to fit an exponent".into(),
        ));
    }
    let logs: Vec<f64> = values.iter().map(|v| v.abs().ln()).collect();
    let n = times.len() as f64;
    let mt = times.iter().sum::<f64>() / n;
    let ml = logs.iter().sum::<f64>() / n;
    let cov: f64 = times.iter().zip(&logs).map(|(t, l)| (t - mt) * (l - ml)).sum();
    let var: f64 = times.iter().map(|t| (t - mt).powi(2)).sum();
    Ok(cov / var)
}

/// Densities `H_0..=H_max_n` in both frames along the rescaled flow started
/// at `f0` (which is also the unrescaled state at `t = 0`).
pub fn density_report(f0: &Bundle, params: &WalkParams, times: &[f64], max_n: u32) -> Result<DensityReport> {
    check_pair(f0)?;
    let prop = SpectralPropagator::new(&hamiltonian_generator(params), f0.grid())?;
    let densities: Vec<QuadraticDensity> = (0..=max_n).map(density_hn).collect();
    let mut rescaled = Vec::with_capacity(times.len());
    let mut unrescaled = Vec::with_capacity(times.len());
    for &t in times {
        let f = prop.propagate(f0, t)?;
        let big_f = rescale(&f, t, params.a, Direction::Inverse)?;
        rescaled.push(densities.iter().map(|h| h.value(&f)).collect::<Result<Vec<_>>>()?);
        unrescaled.push(densities.iter().map(|h| h.value(&big_f)).collect::<Result<Vec<_>>>()?);
    }
    let labels = (0..=max_n).map(|n| format!("H{n}")).collect();
    let mut report = DensityReport::new(labels)
        .with_meta("module", "walk1d")
        .with_meta("density_family", "walk1d-hn")
        .with_meta("v", params.v)
        .with_meta("a", params.a);
    report.push_series(Frame::Rescaled, times, &rescaled)?;
    report.push_series(Frame::Unrescaled, times, &unrescaled)?;
    Ok(report)
}

/// Position-dependent motion probability `σ(x)` and switching intensity `λ(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct InhomogeneousParams {
    pub sigma: Field,
    pub lambda: Field,
    pub v: f64,
    pub lambda_constant: bool,
}

impl InhomogeneousParams {
    pub fn new(sigma: Field, lambda: Field, v: f64) -> Result<Self> {
        sigma.check_grid(&lambda)?;
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidParameter(format!("speed must be positive, got {v}")));
        }
        if sigma.values().iter().any(|&s| !(s > 0.0 && s <= 1.0)) {
            return Err(Error::InvalidParameter("sigma must lie in (0, 1]".into()));
        }
        if lambda.values().iter().any(|&l| l < 0.0) {
            return Err(Error::InvalidParameter("lambda must be >= 0".into()));
        }
        let l0 = lambda.values()[0];
        let lambda_constant = lambda
            .values()
            .iter()
            .all(|&l| (l - l0).abs() <= 1e-15 * l0.abs().max(1.0));
        Ok(InhomogeneousParams {
            sigma,
            lambda,
            v,
            lambda_constant,
        })
    }

    /// `spacing / (4 v max σ)`
    pub fn max_stable_step(&self) -> f64 {
        self.sigma.grid().spacing(0) / (4.0 * self.v * self.sigma.max())
    }

    pub fn constant_lambda(&self) -> Result<f64> {
        if !self.lambda_constant {
            return Err(Error::NotRescalable(
                "a position-dependent switching rate leaves explicit time dependence \
                 after rescaling"
                    .into(),
            ));
        }
        Ok(self.lambda.values()[0])
    }
}

fn check_inhomogeneous(p: &Bundle, params: &InhomogeneousParams) -> Result<()> {
    check_pair(p)?;
    p.component(0).check_grid(&params.sigma)
}

/// `∂p± = ±v ∂(σ p±) + λ (p∓ - p±)`
pub fn inhomogeneous_rhs(p: &Bundle, params: &InhomogeneousParams) -> Result<Bundle> {
    check_inhomogeneous(p, params)?;
    let d = LinearOperator::derivative(1);
    let (pp, pm) = (p.component(0), p.component(1));
    let flux_p = d.apply(&params.sigma.mul(pp)?)?.scale(params.v);
    let flux_m = d.apply(&params.sigma.mul(pm)?)?.scale(-params.v);
    let exchange = pm.sub(pp)?.mul(&params.lambda)?;
    Bundle::pair(flux_p.add(&exchange)?, flux_m.sub(&exchange)?)
}

/// `∂p̃± = ±v ∂(σ p̃±) + λ p̃∓`, valid for constant `λ` only.
pub fn rescaled_inhomogeneous_rhs(p: &Bundle, params: &InhomogeneousParams) -> Result<Bundle> {
    check_inhomogeneous(p, params)?;
    let lambda = params.constant_lambda()?;
    let d = LinearOperator::derivative(1);
    let (pp, pm) = (p.component(0), p.component(1));
    let flux_p = d.apply(&params.sigma.mul(pp)?)?.scale(params.v);
    let flux_m = d.apply(&params.sigma.mul(pm)?)?.scale(-params.v);
    Bundle::pair(flux_p.axpy(lambda, pm)?, flux_m.axpy(lambda, pp)?)
}

fn check_step(params: &InhomogeneousParams, dt: f64) -> Result<()> {
    let bound = params.max_stable_step();
    if dt.is_nan() || dt <= 0.0 || dt > bound {
        return Err(Error::InvalidParameter(format!(
            "step {dt} outside the stability bound (0, {bound}]"
        )));
    }
    Ok(())
}

/// RK4 integration of the inhomogeneous system.
pub fn evolve_inhomogeneous(p: &Bundle, params: &InhomogeneousParams, t: f64, dt: f64) -> Result<Bundle> {
    check_inhomogeneous(p, params)?;
    check_step(params, dt)?;
    rk4_propagate(p, |y| inhomogeneous_rhs(y, params), t, dt)
}

/// RK4 integration of the rescaled inhomogeneous system (constant `λ`).
pub fn evolve_rescaled_inhomogeneous(
    p: &Bundle,
    params: &InhomogeneousParams,
    t: f64,
    dt: f64,
) -> Result<Bundle> {
    check_inhomogeneous(p, params)?;
    params.constant_lambda()?;
    check_step(params, dt)?;
    rk4_propagate(p, |y| rescaled_inhomogeneous_rhs(y, params), t, dt)
}

/// Hamiltonian form of the rescaled inhomogeneous walk:
/// structure `[[v∂, -λ/σ], [λ/σ, v∂]]` and density `σ((p̃⁺)² - (p̃⁻)²)/2`.
#[derive(Debug, Clone)]
pub struct InhomogeneousHamiltonian {
    pub structure: OperatorMatrix,
    pub density: QuadraticDensity,
    /// `∫ H dx` at the supplied state.
    pub value: f64,
}

pub fn inhomogeneous_hamiltonian_form(
    p: &Bundle,
    params: &InhomogeneousParams,
) -> Result<InhomogeneousHamiltonian> {
    check_inhomogeneous(p, params)?;
    let lambda = params.constant_lambda()?;
    let inv_sigma = params.sigma.map(|s| lambda / s);
    let coupling = LinearOperator::pointwise(&inv_sigma);
    let d = LinearOperator::derivative(1).scaled(params.v);
    let mut structure = OperatorMatrix::zeros(2);
    structure.set(0, 0, d.clone());
    structure.set(1, 1, d);
    structure.set(0, 1, coupling.scaled(-1.0));
    structure.set(1, 0, coupling);
    let density = QuadraticDensity::new()
        .weighted_term(0, 0, 0.5, params.sigma.clone())
        .weighted_term(1, 1, -0.5, params.sigma.clone());
    let value = density.value(p)?;
    Ok(InhomogeneousHamiltonian {
        structure,
        density,
        value,
    })
}

/// Total probability `∫ (p⁺ + p⁻) dx`.
pub fn total_probability(p: &Bundle) -> Result<f64> {
    check_pair(p)?;
    Ok(integrate(p.component(0)) + integrate(p.component(1)))
}

/// Factor `e^{2at}` that makes the unrescaled `∫H_0` constant.
pub fn unrescaled_h0_compensation(t: f64, a: f64) -> Result<f64> {
    rescale_factor(t, 2.0 * a, Direction::Forward)
}
