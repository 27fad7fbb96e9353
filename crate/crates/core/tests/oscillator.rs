use proptest::prelude::*;
use randevol_core::oscillator::*;

#[test]
fn rescaled_energy_is_constant() {
    let p = OscillatorParams::new(0.3, 2.0, 1.0, -0.4).unwrap();
    let h0 = rescale_oscillator(&p, 0.0).unwrap().energy;
    for i in 0..=200 {
        let t = 0.1 * i as f64;
        let h = rescale_oscillator(&p, t).unwrap().energy;
        assert!((h - h0).abs() <= 1e-10 * h0.abs(), "t = {t}");
    }
}

#[test]
fn unrescaled_energy_never_increases() {
    for (k, b) in [(0.3, 2.0), (1.5, 2.0), (0.7, 0.49), (0.2, 0.0)] {
        let p = OscillatorParams::new(k, b, 1.0, 0.8).unwrap();
        let mut prev = damped_energy(&p, p.x0, p.xdot0);
        for i in 1..=400 {
            let (x, v) = evolve_damped(&p, 0.05 * i as f64);
            let e = damped_energy(&p, x, v);
            assert!(e <= prev + 1e-14 * prev.abs().max(1e-300), "k={k} b={b} step {i}");
            prev = e;
        }
    }
}

#[test]
fn critical_rescaling_is_free_motion() {
    let p = OscillatorParams::new(0.8, 0.64, 0.5, 0.3).unwrap();
    let s0 = rescale_oscillator(&p, 0.0).unwrap();
    for t in [0.5, 2.0, 7.0] {
        let s = rescale_oscillator(&p, t).unwrap();
        assert!((s.x - (s0.x + s0.momentum * t)).abs() <= 1e-10 * (1.0 + t));
        assert!((s.energy - s0.energy).abs() <= 1e-10 * s0.energy);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn rescaling_conjugates_damped_and_conservative(
        k in 0.0f64..2.0,
        b in -1.0f64..4.0,
        x0 in -2.0f64..2.0,
        v0 in -2.0f64..2.0,
        t in 0.0f64..10.0,
    ) {
        let p = OscillatorParams::new(k, b, x0, v0).unwrap();
        let s = rescale_oscillator(&p, t).unwrap();
        let (x, momentum) = evolve_conservative(&p, t);
        let size = x.abs().max(momentum.abs()).max(1.0);
        prop_assert!((s.x - x).abs() <= 1e-10 * size);
        prop_assert!((s.momentum - momentum).abs() <= 1e-10 * size);
    }
}
