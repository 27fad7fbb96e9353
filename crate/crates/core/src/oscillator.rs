//! The damped harmonic oscillator `ẍ + 2kẋ + bx = 0`.
//!
//! With `x = X e^{-kt}` the friction disappears and `Ẍ + (b - k²)X = 0`,
//! a conservative system with energy `H = P²/2 + (b - k²)X²/2`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::expm::exp_complex;
use crate::rescale::{rescale_factor, Direction};
use crate::spectral::C64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillatorParams {
    pub k: f64,
    pub b: f64,
    pub x0: f64,
    pub xdot0: f64,
}

impl OscillatorParams {
    pub fn new(k: f64, b: f64, x0: f64, xdot0: f64) -> Result<Self> {
        if k < 0.0 || [k, b, x0, xdot0].iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "need finite parameters with k >= 0, got k={k}, b={b}"
            )));
        }
        Ok(OscillatorParams { k, b, x0, xdot0 })
    }

    /// Stiffness `b - k²` of the rescaled oscillator.
    pub fn rescaled_stiffness(&self) -> f64 {
        self.b - self.k * self.k
    }
}

fn flow(m: [f64; 4], y: (f64, f64), t: f64) -> (f64, f64) {
    let mc = DMatrix::from_iterator(2, 2, [m[0], m[2], m[1], m[3]].map(|v| C64::new(v, 0.0)));
    let e = exp_complex(&mc, t);
    (
        (e[(0, 0)] * y.0 + e[(0, 1)] * y.1).re,
        (e[(1, 0)] * y.0 + e[(1, 1)] * y.1).re,
    )
}

/// `(x(t), ẋ(t))`
pub fn evolve_damped(p: &OscillatorParams, t: f64) -> (f64, f64) {
    flow([0.0, 1.0, -p.b, -2.0 * p.k], (p.x0, p.xdot0), t)
}

/// Solution of `Ẍ + (b - k²)X = 0` from the rescaled initial data
/// `X(0) = x0`, `P(0) = ẋ0 + k x0`.
pub fn evolve_conservative(p: &OscillatorParams, t: f64) -> (f64, f64) {
    flow(
        [0.0, 1.0, -p.rescaled_stiffness(), 0.0],
        (p.x0, p.xdot0 + p.k * p.x0),
        t,
    )
}

/// `H(P, X) = P²/2 + (b - k²)X²/2`
pub fn rescaled_energy(p: &OscillatorParams, x: f64, momentum: f64) -> f64 {
    0.5 * momentum * momentum + 0.5 * p.rescaled_stiffness() * x * x
}

/// `(ẋ² + b x²)/2`
pub fn damped_energy(p: &OscillatorParams, x: f64, xdot: f64) -> f64 {
    0.5 * xdot * xdot + 0.5 * p.b * x * x
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RescaledState {
    pub x: f64,
    pub momentum: f64,
    pub energy: f64,
}

/// `X = x e^{kt}`, `P = (ẋ + kx) e^{kt}` and `H(P, X)` at time `t`.
pub fn rescale_oscillator(p: &OscillatorParams, t: f64) -> Result<RescaledState> {
    let f = rescale_factor(t, p.k, Direction::Forward)?;
    let (x, xdot) = evolve_damped(p, t);
    let (big_x, momentum) = (x * f, (xdot + p.k * x) * f);
    Ok(RescaledState {
        x: big_x,
        momentum,
        energy: rescaled_energy(p, big_x, momentum),
    })
}
