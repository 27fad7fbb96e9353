//! Numerical laboratory for random evolutions that become Hamiltonian after
//! an exponential rescaling in time.
//!
//! The crate is organized bottom-up:
//!
//! - [`grid`], [`spectral`], [`operator`], [`propagate`], [`density`]: the
//!   periodic field machinery everything else is built from.
//! - [`walk1d`]: the two-velocity persistent random walk and its rescaled
//!   Hamiltonian form.
//! - [`telegrapher`]: damped second-order equations and their first-order
//!   Hamiltonian representations.
//! - [`multiwalk`]: many-velocity walks and the question of when they admit
//!   a Hamiltonian form.
//! - [`oscillator`]: the damped harmonic oscillator.

pub mod convergence;
pub mod density;
pub mod error;
pub mod expm;
pub mod grid;
pub mod linalg;
pub mod multiwalk;
pub mod operator;
pub mod oscillator;
pub mod propagate;
pub mod report;
pub mod rescale;
pub mod spectral;
pub mod telegrapher;
pub mod walk1d;

pub use error::{Error, Result};
pub use grid::{Bundle, Field, PeriodicGrid};
pub use operator::{Adjointness, LinearOperator, OperatorMatrix};
