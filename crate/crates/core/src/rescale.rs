//! Exponential time rescaling `F = f e^{-rate t}` and its inverse.

use crate::error::{Error, Result};
use crate::grid::Bundle;

/// Largest exponent accepted before the rescaling factor is considered an
/// overflow.
pub const EXPONENT_LIMIT: f64 = 700.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Dissipative variables to rescaled ones: multiply by `e^{+rate t}`.
    Forward,
    /// Rescaled variables back to dissipative ones: multiply by `e^{-rate t}`.
    Inverse,
}

pub fn rescale_factor(t: f64, rate: f64, direction: Direction) -> Result<f64> {
    let exponent = match direction {
        Direction::Forward => rate * t,
        Direction::Inverse => -rate * t,
    };
    if !exponent.is_finite() || exponent.abs() > EXPONENT_LIMIT {
        return Err(Error::Overflow {
            exponent,
            limit: EXPONENT_LIMIT,
        });
    }
    Ok(exponent.exp())
}

/// Multiplies every component by the rescaling factor at time `t`.
pub fn rescale(state: &Bundle, t: f64, rate: f64, direction: Direction) -> Result<Bundle> {
    Ok(state.scale(rescale_factor(t, rate, direction)?))
}
