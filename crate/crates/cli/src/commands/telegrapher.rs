use std::f64::consts::PI;
use std::fmt::Write as _;

use anyhow::Result;
use randevol_core::convergence::observed_order;
use randevol_core::report::{DensityReport, Frame};
use randevol_core::telegrapher::*;
use randevol_core::{Bundle, Field, PeriodicGrid};

use super::{energy_scale, grid_1d, linspace, wave};
use crate::config::{non_negative, positive};
use crate::{num, Command, Settings, Summary};

const DIFFUSION_SCALES: [f64; 4] = [2.0, 4.0, 8.0, 16.0];

fn form_name(form: Form) -> &'static str {
    match form {
        Form::Canonical => "canonical",
        Form::Direct => "direct",
        Form::Alternate => "alternate",
    }
}

pub fn run(s: &Settings) -> Result<Summary> {
    let v = positive("v", s.v.unwrap_or(1.0))?;
    let eps = positive("epsilon", s.epsilon.unwrap_or(1.0))?;
    let a = non_negative("a", s.a.unwrap_or(0.5))?;
    let points = s.grid_n.unwrap_or(64);
    let length = positive("length", s.length.unwrap_or(2.0 * PI))?;
    let t_final = positive("t-final", s.t_final.unwrap_or(6.0))?;
    let h = positive("dt", s.dt.unwrap_or(0.01))?;
    let max_n = s.densities.unwrap_or(3);
    let tol = s.tol()?;
    let grid = grid_1d(points, length)?;
    let sys = TelegrapherSystem::wave(v, eps, a)?;
    sys.verify(&grid)?;

    let mut summary = Summary::new(
        Command::Telegrapher,
        &[
            ("v", v.to_string()),
            ("epsilon", eps.to_string()),
            ("a", a.to_string()),
            ("grid_n", points.to_string()),
            ("length", length.to_string()),
            ("t_final", t_final.to_string()),
            ("dt", h.to_string()),
            ("densities", max_n.to_string()),
        ],
    );
    // zero-mean data so every form accepts it (the alternate form inverts X)
    let u0 = wave(grid, &[(1.0, 1.0, 0.0), (0.4, 2.0, PI / 2.0)])?;
    let w0 = wave(grid, &[(0.7, 1.0, PI / 2.0), (-0.2, 3.0, 0.0)])?;
    let (u0, w0) = if a == 0.0 {
        let w = sys.x_op()?.apply(&u0)?;
        (u0, w)
    } else {
        (u0, w0)
    };

    let times = linspace(0.0, t_final, 13);
    let mut traj: Vec<Vec<Field>> = Vec::new();
    for form in Form::ALL {
        let tilde = sys.matched_tilde(form, &u0, &w0)?;
        traj.push(
            times
                .iter()
                .map(|&t| Ok(sys.evolve(form, &u0, &tilde, t)?.0))
                .collect::<Result<Vec<_>>>()?,
        );
    }
    let mut gap = 0.0_f64;
    for k in 0..times.len() {
        let size = traj[0][k].sup_norm().max(1.0);
        for other in &traj[1..] {
            gap = gap.max(other[k].sup_distance(&traj[0][k])? / size);
        }
    }
    summary.at_most("three forms share u-bar (relative sup)", gap, tol);

    let t_res = 0.5 * t_final;
    let steps = [4.0 * h, 2.0 * h, h];
    for form in Form::ALL {
        let tilde = sys.matched_tilde(form, &u0, &w0)?;
        let errs = steps
            .iter()
            .map(|&hh| scalar_residual(&sys, form, &u0, &tilde, t_res, hh, false))
            .collect::<randevol_core::Result<Vec<f64>>>()?;
        let order = observed_order(&steps, &errs)?;
        summary.near(&format!("{} residual order", form_name(form)), order, 2.0, 0.2);
    }
    let errs = steps
        .iter()
        .map(|&hh| telegrapher_residual(&u0, &w0, v, a, t_res, hh))
        .collect::<randevol_core::Result<Vec<f64>>>()?;
    summary.near("damped telegrapher residual order", observed_order(&steps, &errs)?, 2.0, 0.2);

    conservation(&mut summary, &sys, &u0, &w0, t_final, max_n, tol)?;
    diffusion(&mut summary)?;
    Ok(summary)
}

fn conservation(
    summary: &mut Summary,
    sys: &TelegrapherSystem,
    u0: &Field,
    w0: &Field,
    t_final: f64,
    max_n: u32,
    tol: f64,
) -> Result<()> {
    let state = Bundle::pair(u0.clone(), w0.clone())?;
    let k_max = 3.0 * 2.0 * PI / state.grid().length(0);
    let times = linspace(0.0, t_final, 21);
    for form in Form::ALL {
        let densities = (0..=max_n)
            .map(|n| sys.density(form, n))
            .collect::<randevol_core::Result<Vec<_>>>()?;
        let mut values = Vec::new();
        for &t in &times {
            let (u, w) = sys.evolve(form, u0, w0, t)?;
            let b = Bundle::pair(u, w)?;
            values.push(densities.iter().map(|d| d.value(&b)).collect::<randevol_core::Result<Vec<_>>>()?);
        }
        let mut worst = 0.0_f64;
        for (n, init) in values[0].iter().enumerate() {
            let scale = init.abs().max(energy_scale(&state) * k_max.powi(2 * n as i32));
            for row in &values {
                worst = worst.max((row[n] - init).abs() / scale);
            }
        }
        summary.at_most(&format!("{} density drift (state scale)", form_name(form)), worst, tol);
        let mut report = DensityReport::new((0..=max_n).map(|n| format!("H{n}")).collect())
            .with_meta("module", "telegrapher")
            .with_meta("form", form_name(form))
            .with_meta("epsilon", sys.epsilon())
            .with_meta("a", sys.a());
        report.push_series(Frame::Rescaled, &times, &values)?;
        summary.attach(format!("telegrapher_{}_density.csv", form_name(form)), report.to_csv_string());
    }
    Ok(())
}

/// Gaussian on a wide period so wrap-around stays negligible; `D = 1`, `t = 0.1`.
fn diffusion(summary: &mut Summary) -> Result<()> {
    let length = 20.0;
    let grid = PeriodicGrid::new_1d(256, length)?;
    let phi = Field::from_fn(grid, |x, _| (-(x - length / 2.0).powi(2)).exp())?;
    let mut csv = String::from("scale,sup_gap\n");
    let mut gaps = Vec::new();
    for scale in DIFFUSION_SCALES {
        let g = diffusion_limit_compare(1.0, scale, &phi, 0.1)?;
        let _ = writeln!(csv, "{},{}", num(scale), num(g));
        gaps.push(g);
    }
    summary.attach("telegrapher_diffusion.csv", csv);
    let decreasing = gaps.windows(2).all(|w| w[1] < w[0]);
    let listed: Vec<String> = gaps.iter().map(|g| format!("{g:.3e}")).collect();
    summary.holds("diffusion gap strictly decreases", decreasing, listed.join(" > "));
    Ok(())
}
