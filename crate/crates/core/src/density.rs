//! Quadratic conserved densities, their functional gradients, and the
//! Poisson bracket of two densities under a constant-coefficient
//! Hamiltonian matrix.
//!
//! On a periodic grid two densities differing by a total derivative have the
//! same integral, so densities are compared through `integrate`.

use crate::error::{Error, Result};
use crate::grid::{Bundle, Field};
use crate::operator::{Adjointness, LinearOperator, OperatorMatrix};

/// Rectangle rule, which on a periodic grid coincides with the trapezoid rule.
pub fn integrate(f: &Field) -> f64 {
    f.values().iter().sum::<f64>() * f.grid().cell_volume()
}

/// Discrete inner product `∫ f g`.
pub fn inner(f: &Field, g: &Field) -> Result<f64> {
    f.check_grid(g)?;
    Ok(f.values().iter().zip(g.values()).map(|(a, b)| a * b).sum::<f64>()
        * f.grid().cell_volume())
}

/// One term `coefficient * f_left * O(f_right)` of a quadratic density,
/// optionally multiplied pointwise by a weight field.
#[derive(Debug, Clone)]
pub struct QuadraticTerm {
    pub left: usize,
    pub right: usize,
    pub coefficient: f64,
    pub op: LinearOperator,
    pub weight: Option<Field>,
}

/// A density that is a sum of quadratic terms in the components of a bundle.
///
/// Only selfadjoint operators are accepted, so that
/// `∫ f_a O(f_b) = ∫ f_b O(f_a)` and the gradient has a closed form.
#[derive(Debug, Clone, Default)]
pub struct QuadraticDensity {
    terms: Vec<QuadraticTerm>,
}

impl QuadraticDensity {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `coefficient * f_left * O(f_right)`.
    pub fn term(mut self, left: usize, right: usize, coefficient: f64, op: LinearOperator) -> Result<Self> {
        if op.adjointness() != Adjointness::SelfAdjoint {
            return Err(Error::Unsupported(format!(
                "quadratic density terms need a selfadjoint operator, got {:?}",
                op.adjointness()
            )));
        }
        self.terms.push(QuadraticTerm {
            left,
            right,
            coefficient,
            op,
            weight: None,
        });
        Ok(self)
    }

    /// Adds `coefficient * w(x) * f_left * f_right`.
    pub fn weighted_term(mut self, left: usize, right: usize, coefficient: f64, weight: Field) -> Self {
        self.terms.push(QuadraticTerm {
            left,
            right,
            coefficient,
            op: LinearOperator::identity(),
            weight: Some(weight),
        });
        self
    }

    /// `½ Σ_i w_i f_i O(f_i)`
    pub fn diagonal(weights: &[f64], op: &LinearOperator) -> Result<Self> {
        weights
            .iter()
            .enumerate()
            .try_fold(Self::new(), |d, (i, &w)| d.term(i, i, 0.5 * w, op.clone()))
    }

    pub fn terms(&self) -> &[QuadraticTerm] {
        &self.terms
    }

    pub fn components_needed(&self) -> usize {
        self.terms
            .iter()
            .map(|t| t.left.max(t.right) + 1)
            .max()
            .unwrap_or(0)
    }

    fn check_state(&self, state: &Bundle) -> Result<()> {
        if self.components_needed() > state.len() {
            return Err(Error::Dimension(format!(
                "density uses {} components, state has {}",
                self.components_needed(),
                state.len()
            )));
        }
        for t in &self.terms {
            if let Some(w) = &t.weight {
                w.check_grid(state.component(0))?;
            }
        }
        Ok(())
    }

    fn right_factor(t: &QuadraticTerm, f: &Field) -> Result<Field> {
        match &t.weight {
            Some(w) => w.mul(f),
            None => t.op.apply(f),
        }
    }

    /// The pointwise density (before integration).
    pub fn pointwise(&self, state: &Bundle) -> Result<Field> {
        self.check_state(state)?;
        let mut acc = Field::zeros(*state.grid());
        for t in &self.terms {
            let r = Self::right_factor(t, state.component(t.right))?;
            let prod = state.component(t.left).mul(&r)?;
            acc = acc.axpy(t.coefficient, &prod)?;
        }
        Ok(acc)
    }

    /// `∫ H dx`
    pub fn value(&self, state: &Bundle) -> Result<f64> {
        self.check_state(state)?;
        let mut total = 0.0;
        for t in &self.terms {
            let r = Self::right_factor(t, state.component(t.right))?;
            total += t.coefficient * inner(state.component(t.left), &r)?;
        }
        Ok(total)
    }

    /// Variational derivative `δH/δf_i` for every component of `state`.
    pub fn gradient(&self, state: &Bundle) -> Result<Bundle> {
        self.check_state(state)?;
        let grid = *state.grid();
        let mut grads = vec![Field::zeros(grid); state.len()];
        for t in &self.terms {
            let toward_left = Self::right_factor(t, state.component(t.right))?;
            let toward_right = Self::right_factor(t, state.component(t.left))?;
            grads[t.left] = grads[t.left].axpy(t.coefficient, &toward_left)?;
            grads[t.right] = grads[t.right].axpy(t.coefficient, &toward_right)?;
        }
        Bundle::new(grads)
    }
}

/// Variational derivative of `density` at `state`.
pub fn functional_gradient(density: &QuadraticDensity, state: &Bundle) -> Result<Bundle> {
    density.gradient(state)
}

/// The Hamiltonian vector field `B (δH/δf)`.
pub fn hamiltonian_vector_field(
    structure: &OperatorMatrix,
    density: &QuadraticDensity,
    state: &Bundle,
) -> Result<Bundle> {
    structure.apply(&density.gradient(state)?)
}

/// A bracket value together with its Cauchy–Schwarz scale
/// `||δH_a|| * ||B δH_b||`, against which roundoff should be judged.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BracketValue {
    pub value: f64,
    pub scale: f64,
}

impl BracketValue {
    pub fn relative(&self) -> f64 {
        if self.scale == 0.0 {
            self.value.abs()
        } else {
            self.value.abs() / self.scale
        }
    }
}

/// `{H_a, H_b} = ∫ Σ_ij (δH_a/δf_i) B_ij (δH_b/δf_j) dx`
pub fn poisson_bracket(
    h_a: &QuadraticDensity,
    h_b: &QuadraticDensity,
    structure: &OperatorMatrix,
    state: &Bundle,
) -> Result<BracketValue> {
    if structure.size() != state.len() {
        return Err(Error::Dimension(format!(
            "structure matrix of size {} for {} components",
            structure.size(),
            state.len()
        )));
    }
    structure.verify_skew(state.grid())?;
    let grad_a = h_a.gradient(state)?;
    let flow_b = hamiltonian_vector_field(structure, h_b, state)?;
    let value = grad_a
        .components()
        .iter()
        .zip(flow_b.components())
        .map(|(a, b)| inner(a, b))
        .sum::<Result<f64>>()?;
    Ok(BracketValue {
        value,
        scale: grad_a.l2_norm() * flow_b.l2_norm(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::PeriodicGrid;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn grid() -> PeriodicGrid {
        PeriodicGrid::new_1d(64, 1.0).unwrap()
    }

    #[test]
    fn integral_of_constant_and_sine_squared() {
        let g = grid();
        assert!((integrate(&Field::constant(g, 1.0)) - 1.0).abs() < 1e-15);
        let s2 = Field::from_fn(g, |x, _| (2.0 * PI * x).sin().powi(2)).unwrap();
        assert!((integrate(&s2) - 0.5).abs() < 1e-15);
        let g3 = PeriodicGrid::new_1d(16, 3.0).unwrap();
        assert!((integrate(&Field::constant(g3, 1.0)) - 3.0).abs() < 1e-15);
    }

    #[test]
    fn derivative_has_zero_integral() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let f = Field::random_band_limited(grid(), 10, false, &mut rng);
        let df = LinearOperator::derivative(1).apply(&f).unwrap();
        assert!(integrate(&df).abs() <= 1e-12 * f.l2_norm());
    }

    #[test]
    fn identity_density_gradient_is_the_field() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let f = Field::random_band_limited(grid(), 5, false, &mut rng);
        let state = Bundle::new(vec![f.clone()]).unwrap();
        let h = QuadraticDensity::diagonal(&[1.0], &LinearOperator::identity()).unwrap();
        let grad = h.gradient(&state).unwrap();
        assert!(grad.component(0).sup_distance(&f).unwrap() < 1e-15);
    }

    #[test]
    fn non_selfadjoint_terms_are_unsupported() {
        let err = QuadraticDensity::new()
            .term(0, 0, 1.0, LinearOperator::derivative(1))
            .unwrap_err();
        assert!(matches!(err, Error::Unsupported(_)));
    }

    #[test]
    fn bracket_of_a_density_with_itself_vanishes() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let state = Bundle::pair(
            Field::random_band_limited(g, 6, false, &mut rng),
            Field::random_band_limited(g, 6, false, &mut rng),
        )
        .unwrap();
        let mut b = OperatorMatrix::zeros(2);
        b.set(0, 0, LinearOperator::derivative(1).scaled(0.7));
        b.set(1, 1, LinearOperator::derivative(3));
        b.set(0, 1, LinearOperator::identity().scaled(1.5));
        b.set(1, 0, LinearOperator::identity().scaled(-1.5));
        let h = QuadraticDensity::new()
            .term(0, 0, 0.5, LinearOperator::derivative(2))
            .unwrap()
            .term(0, 1, 0.3, LinearOperator::identity())
            .unwrap();
        let br = poisson_bracket(&h, &h, &b, &state).unwrap();
        assert!(br.relative() < 1e-13, "{br:?}");
    }

    #[test]
    fn canonical_bracket_hand_evaluated() {
        // B = [[0,1],[-1,0]], H_a = f1²/2, H_b = f2²/2  =>  {H_a,H_b} = ∫ f1 f2
        let g = grid();
        let f1 = Field::from_fn(g, |x, _| 1.0 + (2.0 * PI * x).cos()).unwrap();
        let f2 = Field::from_fn(g, |x, _| 2.0 + (2.0 * PI * x).cos()).unwrap();
        let state = Bundle::pair(f1, f2).unwrap();
        let mut b = OperatorMatrix::zeros(2);
        b.set(0, 1, LinearOperator::identity());
        b.set(1, 0, LinearOperator::identity().scaled(-1.0));
        let ha = QuadraticDensity::new().term(0, 0, 0.5, LinearOperator::identity()).unwrap();
        let hb = QuadraticDensity::new().term(1, 1, 0.5, LinearOperator::identity()).unwrap();
        // ∫ (1+cos)(2+cos) = 2 + 1/2
        let br = poisson_bracket(&ha, &hb, &b, &state).unwrap();
        assert!((br.value - 2.5).abs() < 1e-14);
    }

    #[test]
    fn non_skew_structure_is_rejected() {
        let g = grid();
        let state = Bundle::zeros(g, 2);
        let mut b = OperatorMatrix::zeros(2);
        b.set(0, 1, LinearOperator::identity());
        b.set(1, 0, LinearOperator::identity());
        let h = QuadraticDensity::diagonal(&[1.0, 1.0], &LinearOperator::identity()).unwrap();
        assert!(matches!(poisson_bracket(&h, &h, &b, &state), Err(Error::Structure(_))));
    }
}
