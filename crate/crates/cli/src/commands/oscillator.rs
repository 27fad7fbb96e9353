use std::fmt::Write as _;

use anyhow::Result;
use randevol_core::oscillator::*;

use crate::config::{non_negative, positive};
use crate::{num, Command, Settings, Summary};

pub fn run(s: &Settings) -> Result<Summary> {
    let k = non_negative("a", s.a.unwrap_or(0.3))?;
    let b = s.b.unwrap_or(2.0);
    let t_final = positive("t-final", s.t_final.unwrap_or(20.0))?;
    let dt = positive("dt", s.dt.unwrap_or(0.1))?;
    let tol = s.tol()?;
    let p = OscillatorParams::new(k, b, 1.0, -0.4)?;

    let mut summary = Summary::new(
        Command::Oscillator,
        &[
            ("k", k.to_string()),
            ("b", b.to_string()),
            ("t_final", t_final.to_string()),
            ("dt", dt.to_string()),
        ],
    );
    let steps = (t_final / dt).round().max(1.0) as usize;
    let h0 = rescale_oscillator(&p, 0.0)?.energy;
    let mut csv = String::from("t,x,xdot,X,P,H,damped_energy\n");
    let (mut drift, mut conj, mut rise) = (0.0_f64, 0.0_f64, 0.0_f64);
    let mut prev = damped_energy(&p, p.x0, p.xdot0);
    for i in 0..=steps {
        let t = t_final * i as f64 / steps as f64;
        let (x, xdot) = evolve_damped(&p, t);
        let r = rescale_oscillator(&p, t)?;
        let (cx, cp) = evolve_conservative(&p, t);
        let e = damped_energy(&p, x, xdot);
        drift = drift.max(if h0 == 0.0 { (r.energy - h0).abs() } else { (r.energy - h0).abs() / h0.abs() });
        let size = cx.abs().max(cp.abs()).max(1.0);
        conj = conj.max((r.x - cx).abs().max((r.momentum - cp).abs()) / size);
        rise = rise.max((e - prev) / prev.abs().max(f64::MIN_POSITIVE));
        prev = e;
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{}",
            num(t),
            num(x),
            num(xdot),
            num(r.x),
            num(r.momentum),
            num(r.energy),
            num(e)
        );
    }
    summary.at_most("rescaled energy drift", drift, tol);
    summary.at_most("damped vs conservative conjugacy", conj, tol);
    if k > 0.0 && b >= 0.0 {
        summary.at_most("unrescaled energy never rises (relative)", rise.max(0.0), 1e-14);
    }
    summary.attach("oscillator.csv", csv);
    Ok(summary)
}
