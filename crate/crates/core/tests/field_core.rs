mod common;

use std::f64::consts::PI;

use common::{random_bundle, rel_sup};
use nalgebra::DMatrix;
use proptest::prelude::*;
use randevol_core::density::{functional_gradient, inner, integrate, poisson_bracket, QuadraticDensity};
use randevol_core::multiwalk::{fit_hamiltonian, RescaledGenerator};
use randevol_core::propagate::{dense_propagate, exact_propagate, rk4_propagate};
use randevol_core::telegrapher::{Form, TelegrapherSystem};
use randevol_core::walk1d::{density_hn, unrescaled_generator, WalkParams};
use randevol_core::{Adjointness, Bundle, Error, Field, LinearOperator, OperatorMatrix, PeriodicGrid};

fn grid() -> PeriodicGrid {
    PeriodicGrid::new_1d(32, 1.0).unwrap()
}

#[test]
fn spectral_derivative_matches_dense_fourier_matrix() {
    // oracle: D_jk = Σ_m (i k_m) e^{i k_m (x_j - x_k)} / n over |m| < n/2
    let g = grid();
    let n = g.len();
    let k0 = 2.0 * PI / g.length(0);
    let dense = DMatrix::from_fn(n, n, |j, k| {
        let dx = (j as f64 - k as f64) * g.spacing(0);
        (1..(n / 2) as i64)
            .map(|m| {
                let km = k0 * m as f64;
                -2.0 * km * (km * dx).sin()
            })
            .sum::<f64>()
            / n as f64
    });
    let f = random_bundle(g, 1, 8, false, 1).component(0).clone();
    let spectral = LinearOperator::derivative(1).apply(&f).unwrap();
    let by_matrix = &dense * nalgebra::DVector::from_column_slice(f.values());
    for (a, b) in spectral.values().iter().zip(by_matrix.iter()) {
        assert!((a - b).abs() <= 1e-10);
    }
}

#[test]
fn declared_adjointness_matches_measurement() {
    let g = grid();
    let ops = [
        LinearOperator::derivative(1),
        LinearOperator::derivative(2),
        LinearOperator::derivative(3).scaled(0.4),
        LinearOperator::derivative(2).shifted(1.5),
        LinearOperator::derivative(1).scaled(2.0).power(2),
        LinearOperator::identity(),
    ];
    for op in ops {
        assert!(op.verify_adjointness(&g).unwrap() <= 1e-12, "{op:?}");
    }
    let g2 = PeriodicGrid::new_2d([8, 8], [1.0, 2.0]).unwrap();
    assert!(LinearOperator::directional(&[1.0, -0.5]).verify_adjointness(&g2).unwrap() <= 1e-12);
}

#[test]
fn exact_propagation_is_a_group() {
    let params = WalkParams::new(1.0, 0.7, 1.0 / 32.0).unwrap();
    let gen = unrescaled_generator(&params);
    let state = random_bundle(grid(), 2, 8, false, 2);
    let (t1, t2) = (0.37, 1.21);
    let once = exact_propagate(&state, &gen, t1 + t2).unwrap();
    let twice = exact_propagate(&exact_propagate(&state, &gen, t1).unwrap(), &gen, t2).unwrap();
    assert!(rel_sup(&twice, &once) <= 1e-12);
    let back = exact_propagate(&once, &gen, -(t1 + t2)).unwrap();
    assert!(rel_sup(&back, &state) <= 1e-12);
}

#[test]
fn dense_and_spectral_propagators_agree() {
    let params = WalkParams::new(1.3, 0.4, 1.0 / 32.0).unwrap();
    let gen = unrescaled_generator(&params);
    let state = random_bundle(grid(), 2, 6, false, 3);
    let a = exact_propagate(&state, &gen, 0.9).unwrap();
    let b = dense_propagate(&state, &gen, 0.9).unwrap();
    assert!(rel_sup(&a, &b) <= 1e-10);
}

#[test]
fn hyperbolic_rotation_at_zero_mode() {
    let g = grid();
    let a = 0.8;
    let gen = OperatorMatrix::from_constants(&DMatrix::from_row_slice(2, 2, &[0.0, a, a, 0.0]));
    let state = Bundle::pair(Field::constant(g, 1.0), Field::constant(g, 0.5)).unwrap();
    let t = 1.7;
    let out = exact_propagate(&state, &gen, t).unwrap();
    let (c, s) = ((a * t).cosh(), (a * t).sinh());
    assert!((out.component(0).values()[3] - (c + 0.5 * s)).abs() <= 1e-12);
    assert!((out.component(1).values()[3] - (s + 0.5 * c)).abs() <= 1e-12);
}

#[test]
fn rk4_is_fourth_order() {
    let params = WalkParams::new(1.0, 0.7, 1.0 / 32.0).unwrap();
    let gen = unrescaled_generator(&params);
    let state = random_bundle(grid(), 2, 3, false, 4);
    let exact = exact_propagate(&state, &gen, 1.0).unwrap();
    let errs: Vec<f64> = [0.02, 0.01]
        .iter()
        .map(|&dt| {
            rk4_propagate(&state, |y| gen.apply(y), 1.0, dt)
                .unwrap()
                .sup_distance(&exact)
                .unwrap()
        })
        .collect();
    assert!(errs[0] / errs[1] >= 15.0, "{errs:?}");
}

#[test]
fn non_multiplier_generator_is_unsupported_spectrally() {
    let g = grid();
    let weight = Field::from_fn(g, |x, _| 1.0 + 0.5 * (2.0 * PI * x).sin()).unwrap();
    let mut gen = OperatorMatrix::zeros(1);
    gen.set(0, 0, LinearOperator::pointwise(&weight));
    let state = random_bundle(g, 1, 3, false, 5);
    assert!(matches!(exact_propagate(&state, &gen, 1.0), Err(Error::Unsupported(_))));
}

fn registered_densities() -> Vec<(QuadraticDensity, usize)> {
    let mut out: Vec<(QuadraticDensity, usize)> = (0..=3).map(|n| (density_hn(n), 2)).collect();
    let sys = TelegrapherSystem::wave(1.0, 0.8, 0.5).unwrap();
    for form in Form::ALL {
        for n in 0..=2 {
            out.push((sys.density(form, n).unwrap(), 2));
        }
    }
    let cert = fit_hamiltonian(&RescaledGenerator::beta0(2, 1.0), 0).unwrap();
    out.push((cert.density(), 4));
    out.push((cert.density_n(2), 4));
    let sigma = Field::from_fn(grid(), |x, _| 0.75 + 0.2 * (2.0 * PI * x).cos()).unwrap();
    out.push((
        QuadraticDensity::new()
            .weighted_term(0, 0, 0.5, sigma.clone())
            .weighted_term(1, 1, -0.5, sigma),
        2,
    ));
    out
}

#[test]
fn functional_gradients_match_finite_differences() {
    for (h, count) in registered_densities() {
        for seed in 0..20 {
            let state = random_bundle(grid(), count, 6, false, 100 + seed);
            let dir = random_bundle(grid(), count, 6, false, 200 + seed);
            let eps = 1e-4;
            let up = h.value(&state.axpy(eps, &dir).unwrap()).unwrap();
            let down = h.value(&state.axpy(-eps, &dir).unwrap()).unwrap();
            let fd = (up - down) / (2.0 * eps);
            let grad = functional_gradient(&h, &state).unwrap();
            let analytic: f64 = grad
                .components()
                .iter()
                .zip(dir.components())
                .map(|(a, b)| inner(a, b).unwrap())
                .sum();
            let size = grad.l2_norm() * dir.l2_norm() * grid().cell_volume();
            assert!((fd - analytic).abs() <= 1e-6 * size.max(analytic.abs()), "seed {seed}");
        }
    }
}

#[test]
fn bracket_examples() {
    let g = grid();
    let b = OperatorMatrix::from_constants(&DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]));
    let ha = QuadraticDensity::new().term(0, 0, 0.5, LinearOperator::identity()).unwrap();
    let hb = QuadraticDensity::new().term(1, 1, 0.5, LinearOperator::identity()).unwrap();
    let state = random_bundle(g, 2, 5, false, 6);
    let br = poisson_bracket(&ha, &hb, &b, &state).unwrap();
    let direct = integrate(&state.component(0).mul(state.component(1)).unwrap());
    assert!((br.value - direct).abs() <= 1e-13);
    let self_br = poisson_bracket(&density_hn(2), &density_hn(2), &b, &state).unwrap();
    assert!(self_br.relative() <= 1e-13);
    let not_skew = OperatorMatrix::from_constants(&DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));
    assert!(matches!(poisson_bracket(&ha, &hb, &not_skew, &state), Err(Error::Structure(_))));
}

#[test]
fn integral_examples() {
    let g = grid();
    assert!((integrate(&Field::constant(g, 1.0)) - 1.0).abs() <= 1e-15);
    let s2 = Field::from_fn(g, |x, _| (2.0 * PI * x).sin().powi(2)).unwrap();
    assert!((integrate(&s2) - 0.5).abs() <= 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn derivatives_integrate_to_zero(seed in any::<u64>(), order in 1u32..5) {
        let f = random_bundle(grid(), 1, 10, false, seed).component(0).clone();
        let df = LinearOperator::derivative(order).apply(&f).unwrap();
        let scale = if order == 1 { f.l2_norm() } else { df.l2_norm() };
        prop_assert!(integrate(&df).abs() <= 1e-12 * scale.max(1.0));
    }

    #[test]
    fn skew_structure_brackets_are_antisymmetric(seed in any::<u64>(), n in 0u32..3, m in 0u32..3) {
        let params = WalkParams::new(1.0, 0.6, 1.0 / 32.0).unwrap();
        let b = randevol_core::walk1d::structure_matrix(&params);
        let state = random_bundle(grid(), 2, 6, false, seed);
        let ab = poisson_bracket(&density_hn(n), &density_hn(m), &b, &state).unwrap();
        let ba = poisson_bracket(&density_hn(m), &density_hn(n), &b, &state).unwrap();
        prop_assert!((ab.value + ba.value).abs() <= 1e-10 * ab.scale.max(1e-300));
    }

    #[test]
    fn dense_operators_keep_their_declared_adjointness(seed in any::<u64>()) {
        let mut r = common::rng(seed);
        let m = DMatrix::from_fn(8, 8, |_, _| rand::Rng::random_range(&mut r, -1.0..1.0));
        let g = PeriodicGrid::new_1d(8, 1.0).unwrap();
        let sym = LinearOperator::dense(&m + m.transpose(), Adjointness::SelfAdjoint);
        let skew = LinearOperator::dense(&m - m.transpose(), Adjointness::SkewAdjoint);
        prop_assert!(sym.verify_adjointness(&g).unwrap() <= 1e-12);
        prop_assert!(skew.verify_adjointness(&g).unwrap() <= 1e-12);
    }
}
