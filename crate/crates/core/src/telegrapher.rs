//! Telegrapher-type equations `ε u_tt + 2a u_t = L u`.
//!
//! The half-sum and half-difference of the walk densities satisfy the scalar
//! telegrapher equation. For a general selfadjoint `L` the substitution
//! `u = ū e^{-(a/ε)t}` removes the damping and leaves `ε ū_tt = L̂ ū` with
//! `L̂ = L + a²/ε`. That equation has a canonical Hamiltonian form and, when
//! `L = A²` for skewadjoint `A`, two more skew forms built from
//! `X = ±A/√ε`.

use crate::density::QuadraticDensity;
use crate::error::{Error, Result};
use crate::grid::{Bundle, Field, PeriodicGrid};
use crate::operator::{Adjointness, LinearOperator, OperatorMatrix};
use crate::propagate::{exact_propagate, propagate_linear};
use crate::rescale::rescale_factor;
use crate::rescale::Direction;
use crate::spectral::{self, C64};

/// Tolerance on `||A² - L||` when both operators are supplied.
pub const ROOT_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct TelegrapherSystem {
    epsilon: f64,
    a: f64,
    l: LinearOperator,
    root: Option<LinearOperator>,
    sign: f64,
}

/// The first-order forms of the rescaled scalar equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Form {
    /// `ū_t = ũ`, `ũ_t = L̂ ū / ε`
    Canonical,
    /// `ū_t = X ū + (a/ε) ũ`, `ũ_t = -X ũ + (a/ε) ū`
    Direct,
    /// `ū_t = X ũ + (a/ε) ū`, `ũ_t = X ū - (a/ε) ũ`
    Alternate,
}

impl Form {
    pub const ALL: [Form; 3] = [Form::Canonical, Form::Direct, Form::Alternate];
}

impl TelegrapherSystem {
    pub fn new(epsilon: f64, a: f64, l: LinearOperator) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidParameter(format!("epsilon must be positive, got {epsilon}")));
        }
        if !(a >= 0.0 && a.is_finite()) {
            return Err(Error::InvalidParameter(format!("damping must be >= 0, got {a}")));
        }
        if l.adjointness() != Adjointness::SelfAdjoint {
            return Err(Error::Structure("L must be declared selfadjoint".into()));
        }
        Ok(TelegrapherSystem {
            epsilon,
            a,
            l,
            root: None,
            sign: 1.0,
        })
    }

    /// `L = A²` with `A` skewadjoint; `sign` picks `X = ±A/√ε`.
    pub fn from_root(epsilon: f64, a: f64, root: LinearOperator, sign: f64) -> Result<Self> {
        if root.adjointness() != Adjointness::SkewAdjoint {
            return Err(Error::Structure("A must be declared skewadjoint".into()));
        }
        if sign != 1.0 && sign != -1.0 {
            return Err(Error::InvalidParameter(format!("sign must be +1 or -1, got {sign}")));
        }
        let mut sys = Self::new(epsilon, a, root.power(2))?;
        sys.root = Some(root);
        sys.sign = sign;
        Ok(sys)
    }

    /// The reference configuration `A = v∂`, `L = A²`.
    pub fn wave(v: f64, epsilon: f64, a: f64) -> Result<Self> {
        Self::from_root(epsilon, a, LinearOperator::derivative(1).scaled(v), 1.0)
    }

    pub fn with_sign(mut self, sign: f64) -> Result<Self> {
        if sign != 1.0 && sign != -1.0 {
            return Err(Error::InvalidParameter(format!("sign must be +1 or -1, got {sign}")));
        }
        self.sign = sign;
        Ok(self)
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn l(&self) -> &LinearOperator {
        &self.l
    }

    pub fn root(&self) -> Option<&LinearOperator> {
        self.root.as_ref()
    }

    /// `λ = -a/ε`
    pub fn lambda(&self) -> f64 {
        -self.a / self.epsilon
    }

    /// `a/ε`, the rate of the rescaling `ū = u e^{(a/ε)t}`.
    pub fn rate(&self) -> f64 {
        self.a / self.epsilon
    }

    /// `L̂ = L + a²/ε`
    pub fn l_hat(&self) -> LinearOperator {
        self.l.shifted(self.a * self.a / self.epsilon)
    }

    pub fn x_op(&self) -> Result<LinearOperator> {
        let root = self.root.as_ref().ok_or_else(|| {
            Error::Unsupported("skew forms need L given as A² with skewadjoint A".into())
        })?;
        Ok(root.scaled(self.sign / self.epsilon.sqrt()))
    }

    /// Numerically checks the adjointness of `L`, `A`, `L̂` and `A² = L`.
    pub fn verify(&self, grid: &PeriodicGrid) -> Result<()> {
        self.l.verify_adjointness(grid)?;
        self.l_hat().verify_adjointness(grid)?;
        if let Some(root) = &self.root {
            root.verify_adjointness(grid)?;
            let defect = operator_distance(&root.power(2), &self.l, grid)?;
            if defect > ROOT_TOL {
                return Err(Error::Structure(format!("||A² - L|| = {defect:.3e}")));
            }
        }
        Ok(())
    }

    /// `||L̂ - L - a²/ε||`, which vanishes up to roundoff.
    pub fn shift_identity_defect(&self, grid: &PeriodicGrid) -> Result<f64> {
        let c = self.a * self.a / self.epsilon;
        let expected = self.l.plus(&LinearOperator::identity().scaled(c));
        operator_distance(&self.l_hat(), &expected, grid)
    }

    /// Generator of the damped equation as a first-order system in `(u, u_t)`.
    pub fn damped_generator(&self) -> OperatorMatrix {
        let mut g = OperatorMatrix::zeros(2);
        g.set(0, 1, LinearOperator::identity());
        g.set(1, 0, self.l.scaled(1.0 / self.epsilon));
        g.set(1, 1, LinearOperator::identity().scaled(-2.0 * self.rate()));
        g
    }

    pub fn generator(&self, form: Form) -> Result<OperatorMatrix> {
        let r = self.rate();
        let mut g = OperatorMatrix::zeros(2);
        match form {
            Form::Canonical => {
                g.set(0, 1, LinearOperator::identity());
                g.set(1, 0, self.l_hat().scaled(1.0 / self.epsilon));
            }
            Form::Direct => {
                let x = self.x_op()?;
                g.set(0, 0, x.clone());
                g.set(1, 1, x.scaled(-1.0));
                g.set(0, 1, LinearOperator::identity().scaled(r));
                g.set(1, 0, LinearOperator::identity().scaled(r));
            }
            Form::Alternate => {
                let x = self.x_op()?;
                g.set(0, 1, x.clone());
                g.set(1, 0, x);
                g.set(0, 0, LinearOperator::identity().scaled(r));
                g.set(1, 1, LinearOperator::identity().scaled(-r));
            }
        }
        Ok(g)
    }

    /// The skew structure matrix of each form.
    pub fn structure(&self, form: Form) -> Result<OperatorMatrix> {
        let r = self.rate();
        let mut b = OperatorMatrix::zeros(2);
        match form {
            Form::Canonical => {
                b.set(0, 1, LinearOperator::identity());
                b.set(1, 0, LinearOperator::identity().scaled(-1.0));
            }
            Form::Direct | Form::Alternate => {
                let x = self.x_op()?;
                let s = if form == Form::Direct { -r } else { r };
                b.set(0, 0, x.clone());
                b.set(1, 1, x);
                b.set(0, 1, LinearOperator::identity().scaled(s));
                b.set(1, 0, LinearOperator::identity().scaled(-s));
            }
        }
        Ok(b)
    }

    /// The `n`-th conserved density of each form:
    ///
    /// - canonical: `½ ũ L̂ⁿ ũ - (1/2ε) ū L̂ⁿ⁺¹ ū`
    /// - direct: `½ ū X²ⁿ ū - ½ ũ X²ⁿ ũ`
    /// - alternate: `ū X²ⁿ ũ`
    pub fn density(&self, form: Form, n: u32) -> Result<QuadraticDensity> {
        match form {
            Form::Canonical => {
                let lh = self.l_hat();
                QuadraticDensity::new()
                    .term(1, 1, 0.5, lh.power(n))?
                    .term(0, 0, -0.5 / self.epsilon, lh.power(n + 1))
            }
            Form::Direct => {
                let x2n = self.x_op()?.power(2 * n);
                QuadraticDensity::new()
                    .term(0, 0, 0.5, x2n.clone())?
                    .term(1, 1, -0.5, x2n)
            }
            Form::Alternate => QuadraticDensity::new().term(0, 1, 1.0, self.x_op()?.power(2 * n)),
        }
    }

    /// Second component at `t = 0` that makes `ū_t(0) = w0` in the given form.
    pub fn matched_tilde(&self, form: Form, u0: &Field, w0: &Field) -> Result<Field> {
        u0.check_grid(w0)?;
        let scale = u0.sup_norm().max(w0.sup_norm()).max(1.0);
        match form {
            Form::Canonical => Ok(w0.clone()),
            Form::Direct => {
                let rest = w0.sub(&self.x_op()?.apply(u0)?)?;
                if self.a == 0.0 {
                    if rest.sup_norm() > 1e-12 * scale {
                        return Err(Error::InvalidParameter(
                            "with a = 0 the direct form forces u_t(0) = X u(0)".into(),
                        ));
                    }
                    return Ok(Field::zeros(*u0.grid()));
                }
                Ok(rest.scale(1.0 / self.rate()))
            }
            Form::Alternate => {
                let rhs = w0.axpy(-self.rate(), u0)?;
                solve_multiplier(&self.x_op()?, &rhs, scale)
            }
        }
    }

    pub fn evolve(&self, form: Form, u_bar: &Field, u_tilde: &Field, t: f64) -> Result<(Field, Field)> {
        let state = Bundle::pair(u_bar.clone(), u_tilde.clone())?;
        split(propagate_linear(&state, &self.generator(form)?, t)?)
    }

    pub fn evolve_damped(&self, u: &Field, u_t: &Field, t: f64) -> Result<(Field, Field)> {
        let state = Bundle::pair(u.clone(), u_t.clone())?;
        split(propagate_linear(&state, &self.damped_generator(), t)?)
    }
}

fn split(b: Bundle) -> Result<(Field, Field)> {
    let mut c = b.into_components();
    if c.len() != 2 {
        return Err(Error::Dimension("expected two components".into()));
    }
    let second = c.pop().expect("two");
    let first = c.pop().expect("two");
    Ok((first, second))
}

/// `||P - Q||`: on Fourier symbols for multipliers, otherwise the Frobenius
/// norm of the dense difference relative to `max(||Q||, 1)`.
fn operator_distance(p: &LinearOperator, q: &LinearOperator, grid: &PeriodicGrid) -> Result<f64> {
    if p.is_multiplier() && q.is_multiplier() {
        let mut worst = 0.0_f64;
        let mut size = 1.0_f64;
        for m in spectral::modes(grid) {
            let (sp, sq) = (p.symbol(&m).expect("multiplier"), q.symbol(&m).expect("multiplier"));
            worst = worst.max((sp - sq).norm());
            size = size.max(sq.norm());
        }
        return Ok(worst / size);
    }
    let (mp, mq) = (p.to_dense(grid)?, q.to_dense(grid)?);
    Ok((&mp - &mq).norm() / mq.norm().max(1.0))
}

/// Solves `X y = rhs` for a Fourier multiplier `X`, taking `y` with no
/// component in the kernel of `X`.
fn solve_multiplier(x: &LinearOperator, rhs: &Field, scale: f64) -> Result<Field> {
    if !x.is_multiplier() {
        return Err(Error::Unsupported(
            "matched data for the alternate form needs X to be a Fourier multiplier".into(),
        ));
    }
    let grid = *rhs.grid();
    let n = grid.len() as f64;
    let coeffs = spectral::forward(rhs);
    let modes = spectral::modes(&grid);
    let mut sol = Vec::with_capacity(coeffs.len());
    for (c, m) in coeffs.iter().zip(&modes) {
        let s = x.symbol(m).expect("multiplier");
        if s.norm() < 1e-12 {
            if c.norm() / n > 1e-12 * scale {
                return Err(Error::InvalidParameter(
                    "u_t(0) - (a/ε) u(0) has a component in the kernel of X".into(),
                ));
            }
            sol.push(C64::new(0.0, 0.0));
        } else {
            sol.push(c / s);
        }
    }
    Ok(spectral::inverse_real(&grid, sol))
}

/// `F = (F⁺ + F⁻)/2`, `G = (F⁺ - F⁻)/2`
pub fn fg_transform(f_plus: &Field, f_minus: &Field) -> Result<(Field, Field)> {
    f_plus.check_grid(f_minus)?;
    Ok((
        f_plus.zip_with(f_minus, |p, m| 0.5 * (p + m))?,
        f_plus.zip_with(f_minus, |p, m| 0.5 * (p - m))?,
    ))
}

/// `(F⁺, F⁻) = (F + G, F - G)`
pub fn fg_inverse(f: &Field, g: &Field) -> Result<(Field, Field)> {
    Ok((f.add(g)?, f.sub(g)?))
}

/// `F_t = v ∂G`, `G_t = v ∂F - 2a G`
pub fn fg_generator(v: f64, a: f64) -> OperatorMatrix {
    let d = LinearOperator::derivative(1).scaled(v);
    let mut g = OperatorMatrix::zeros(2);
    g.set(0, 1, d.clone());
    g.set(1, 0, d);
    g.set(1, 1, LinearOperator::identity().scaled(-2.0 * a));
    g
}

pub fn evolve_fg(f: &Field, g: &Field, v: f64, a: f64, t: f64) -> Result<(Field, Field)> {
    let state = Bundle::pair(f.clone(), g.clone())?;
    split(exact_propagate(&state, &fg_generator(v, a), t)?)
}

/// `u_t = D ∂²u`, solved exactly.
pub fn heat_propagate(phi: &Field, diffusivity: f64, t: f64) -> Result<Field> {
    let mut g = OperatorMatrix::zeros(1);
    g.set(0, 0, LinearOperator::derivative(2).scaled(diffusivity));
    let out = exact_propagate(&Bundle::new(vec![phi.clone()])?, &g, t)?;
    Ok(out.into_components().pop().expect("one component"))
}

/// Sup-norm gap at time `t` between the telegrapher solution with
/// `v = scale`, `a = scale²/(2D)`, `F(0) = φ`, `G(0) = 0`, and the heat
/// equation with diffusivity `D`.
pub fn diffusion_limit_compare(diffusivity: f64, scale: f64, phi: &Field, t: f64) -> Result<f64> {
    if !(diffusivity > 0.0 && scale > 0.0) {
        return Err(Error::InvalidParameter("D and scale must be positive".into()));
    }
    let v = scale;
    let a = scale * scale / (2.0 * diffusivity);
    let (f, _) = evolve_fg(phi, &Field::zeros(*phi.grid()), v, a, t)?;
    f.sup_distance(&heat_propagate(phi, diffusivity, t)?)
}

/// Central estimates of `(u(t), u_t(t), u_tt(t))` from samples at `t ± h`.
pub fn time_derivatives<T>(trajectory: T, t: f64, h: f64) -> Result<(Field, Field, Field)>
where
    T: Fn(f64) -> Result<Field>,
{
    let (um, u0, up) = (trajectory(t - h)?, trajectory(t)?, trajectory(t + h)?);
    let first = up.sub(&um)?.scale(0.5 / h);
    let second = up.sub(&u0.scale(2.0))?.add(&um)?.scale(1.0 / (h * h));
    Ok((u0, first, second))
}

/// [`time_derivatives`] with one Richardson step, combining `h` and `h/2`.
pub fn time_derivatives_richardson<T>(trajectory: T, t: f64, h: f64) -> Result<(Field, Field, Field)>
where
    T: Fn(f64) -> Result<Field>,
{
    let (u0, d1, d2) = time_derivatives(&trajectory, t, h)?;
    let (_, e1, e2) = time_derivatives(&trajectory, t, 0.5 * h)?;
    let combine = |fine: &Field, coarse: &Field| fine.scale(4.0 / 3.0).axpy(-1.0 / 3.0, coarse);
    Ok((u0, combine(&e1, &d1)?, combine(&e2, &d2)?))
}

/// Sup norm of `F_tt + 2a F_t - v² ∂²F` from second differences of the
/// `F` component of the `(F, G)` flow.
pub fn telegrapher_residual(f0: &Field, g0: &Field, v: f64, a: f64, t: f64, h: f64) -> Result<f64> {
    let traj = |s: f64| evolve_fg(f0, g0, v, a, s).map(|p| p.0);
    let (f, ft, ftt) = time_derivatives(traj, t, h)?;
    let lap = LinearOperator::derivative(2).scaled(v * v).apply(&f)?;
    Ok(ftt.axpy(2.0 * a, &ft)?.sub(&lap)?.sup_norm())
}

/// Sup norm of `ε ū_tt - L̂ ū` along the `ū` component of `form`, relative
/// to `max(sup|L̂ ū|, sup|ū|)`.
pub fn scalar_residual(
    sys: &TelegrapherSystem,
    form: Form,
    u_bar: &Field,
    u_tilde: &Field,
    t: f64,
    h: f64,
    richardson: bool,
) -> Result<f64> {
    let traj = |s: f64| sys.evolve(form, u_bar, u_tilde, s).map(|p| p.0);
    let (u, _, utt) = if richardson {
        time_derivatives_richardson(traj, t, h)?
    } else {
        time_derivatives(traj, t, h)?
    };
    let lu = sys.l_hat().apply(&u)?;
    let size = lu.sup_norm().max(u.sup_norm());
    Ok(utt.scale(sys.epsilon()).sub(&lu)?.sup_norm() / size)
}

/// `(u, u_t) ↦ (ū, ū_t) = (u e^{rt}, (u_t + r u) e^{rt})` with `r = a/ε`.
pub fn rescale_second_order(u: &Field, u_t: &Field, t: f64, sys: &TelegrapherSystem) -> Result<(Field, Field)> {
    let r = sys.rate();
    let f = rescale_factor(t, r, Direction::Forward)?;
    Ok((u.scale(f), u_t.axpy(r, u)?.scale(f)))
}

/// Inverse of [`rescale_second_order`].
pub fn unrescale_second_order(
    u_bar: &Field,
    u_bar_t: &Field,
    t: f64,
    sys: &TelegrapherSystem,
) -> Result<(Field, Field)> {
    let r = sys.rate();
    let f = rescale_factor(t, r, Direction::Inverse)?;
    Ok((u_bar.scale(f), u_bar_t.axpy(-r, u_bar)?.scale(f)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::poisson_bracket;
    use nalgebra::DMatrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn grid() -> PeriodicGrid {
        PeriodicGrid::new_1d(64, 1.0).unwrap()
    }

    #[test]
    fn fg_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = Field::random_band_limited(grid(), 5, false, &mut rng);
        let m = Field::random_band_limited(grid(), 5, false, &mut rng);
        let (f, g) = fg_transform(&p, &m).unwrap();
        let (p2, m2) = fg_inverse(&f, &g).unwrap();
        assert!(p2.sup_distance(&p).unwrap() < 1e-14);
        assert!(m2.sup_distance(&m).unwrap() < 1e-14);
        let (_, g_same) = fg_transform(&p, &p).unwrap();
        assert_eq!(g_same.sup_norm(), 0.0);
    }

    #[test]
    fn standing_wave_without_damping() {
        // a = 0, F = sin(kx), G = 0  =>  F = sin(kx) cos(vkt), G = cos(kx) sin(vkt)
        let (v, k, t) = (1.3, 2.0 * PI, 0.41);
        let f = Field::from_fn(grid(), |x, _| (k * x).sin()).unwrap();
        let (ft, gt) = evolve_fg(&f, &Field::zeros(grid()), v, 0.0, t).unwrap();
        let f_exact = Field::from_fn(grid(), |x, _| (k * x).sin() * (v * k * t).cos()).unwrap();
        let g_exact = Field::from_fn(grid(), |x, _| (k * x).cos() * (v * k * t).sin()).unwrap();
        assert!(ft.sup_distance(&f_exact).unwrap() < 1e-12);
        assert!(gt.sup_distance(&g_exact).unwrap() < 1e-12);
    }

    #[test]
    fn constant_f_is_stationary() {
        let f = Field::constant(grid(), 2.0);
        let (ft, gt) = evolve_fg(&f, &Field::zeros(grid()), 1.0, 3.0, 2.0).unwrap();
        assert!(ft.sup_distance(&f).unwrap() < 1e-14);
        assert!(gt.sup_norm() < 1e-14);
    }

    #[test]
    fn heat_reference_decays_modes() {
        let (d, t, k) = (0.7, 0.05, 4.0 * PI);
        let f = Field::from_fn(grid(), |x, _| (k * x).cos()).unwrap();
        let out = heat_propagate(&f, d, t).unwrap();
        let exact = f.scale((-d * k * k * t).exp());
        assert!(out.sup_distance(&exact).unwrap() < 1e-12);
        assert_eq!(diffusion_limit_compare(1.0, 2.0, &f, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn zero_damping_rescaling_is_identity() {
        let sys = TelegrapherSystem::wave(1.0, 1.0, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let u = Field::random_band_limited(grid(), 4, false, &mut rng);
        let w = Field::random_band_limited(grid(), 4, false, &mut rng);
        let (ub, wb) = rescale_second_order(&u, &w, 3.0, &sys).unwrap();
        assert_eq!(ub, u);
        assert_eq!(wb, w);
        assert_eq!(sys.shift_identity_defect(&grid()).unwrap(), 0.0);
    }

    #[test]
    fn free_drift_when_l_hat_vanishes() {
        let sys = TelegrapherSystem::new(1.0, 0.0, LinearOperator::zero().with_adjointness(Adjointness::SelfAdjoint)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u = Field::random_band_limited(grid(), 4, false, &mut rng);
        let w = Field::random_band_limited(grid(), 4, false, &mut rng);
        let (ut, _) = sys.evolve(Form::Canonical, &u, &w, 1.7).unwrap();
        assert!(ut.sup_distance(&u.axpy(1.7, &w).unwrap()).unwrap() < 1e-13);
    }

    #[test]
    fn skew_forms_need_a_root() {
        let l = LinearOperator::derivative(2);
        let sys = TelegrapherSystem::new(1.0, 0.5, l).unwrap();
        assert!(matches!(sys.generator(Form::Direct), Err(Error::Unsupported(_))));
        assert!(sys.generator(Form::Canonical).is_ok());
    }

    #[test]
    fn root_is_checked() {
        let sys = TelegrapherSystem::wave(2.0, 0.5, 1.0).unwrap();
        sys.verify(&grid()).unwrap();
        let mut bad = sys.clone();
        bad.l = LinearOperator::derivative(2).scaled(3.0);
        assert!(matches!(bad.verify(&grid()), Err(Error::Structure(_))));
    }

    #[test]
    fn damped_single_mode_matches_oscillator() {
        // L = -ω² on one mode: ε u'' + 2a u' + ω² u = 0, i.e. k = a/ε, b = ω²/ε
        let (eps, a, omega) = (0.5, 0.2, 1.5);
        let l = LinearOperator::identity().scaled(-omega * omega);
        let sys = TelegrapherSystem::new(eps, a, l).unwrap();
        let g = PeriodicGrid::new_1d(4, 1.0).unwrap();
        let (x0, v0, t) = (1.0, -0.3, 2.3);
        let (u, w) = sys
            .evolve_damped(&Field::constant(g, x0), &Field::constant(g, v0), t)
            .unwrap();
        let params = crate::oscillator::OscillatorParams::new(a / eps, omega * omega / eps, x0, v0).unwrap();
        let (x, xd) = crate::oscillator::evolve_damped(&params, t);
        assert!((u.values()[0] - x).abs() < 1e-13);
        assert!((w.values()[0] - xd).abs() < 1e-13);
    }

    #[test]
    fn brackets_vanish_for_all_forms() {
        let sys = TelegrapherSystem::wave(1.0, 1.0, 0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let s = Bundle::pair(
            Field::random_band_limited(grid(), 6, false, &mut rng),
            Field::random_band_limited(grid(), 6, false, &mut rng),
        )
        .unwrap();
        for form in Form::ALL {
            let b = sys.structure(form).unwrap();
            for n in 0..3 {
                for m in 0..3 {
                    let br = poisson_bracket(&sys.density(form, n).unwrap(), &sys.density(form, m).unwrap(), &b, &s).unwrap();
                    assert!(br.relative() < 1e-12, "{form:?} {n} {m} {br:?}");
                }
            }
        }
    }

    #[test]
    fn generators_are_hamiltonian_vector_fields() {
        let sys = TelegrapherSystem::wave(1.0, 0.8, 0.6).unwrap().with_sign(-1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let s = Bundle::pair(
            Field::random_band_limited(grid(), 6, false, &mut rng),
            Field::random_band_limited(grid(), 6, false, &mut rng),
        )
        .unwrap();
        for form in Form::ALL {
            let via_h = crate::density::hamiltonian_vector_field(
                &sys.structure(form).unwrap(),
                &sys.density(form, 0).unwrap(),
                &s,
            )
            .unwrap();
            let direct = sys.generator(form).unwrap().apply(&s).unwrap();
            assert!(via_h.sup_distance(&direct).unwrap() < 1e-10 * direct.sup_norm());
        }
    }

    #[test]
    fn dense_selfadjoint_l_is_accepted() {
        let g = PeriodicGrid::new_1d(8, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let m = DMatrix::from_fn(8, 8, |_, _| rand::Rng::random_range(&mut rng, -1.0..1.0));
        let sym = (&m + m.transpose()) * 0.5;
        let sys = TelegrapherSystem::new(1.0, 0.3, LinearOperator::dense(sym, Adjointness::SelfAdjoint)).unwrap();
        sys.verify(&g).unwrap();
        assert!(sys.shift_identity_defect(&g).unwrap() < 1e-12);
    }
}
