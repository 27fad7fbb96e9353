use anyhow::{bail, Result};
use randevol_core::multiwalk::io::certificate_to_string;
use randevol_core::multiwalk::*;
use randevol_core::report::{DensityReport, Frame};
use randevol_core::Bundle;

use super::{energy_scale, grid_1d, linspace, rel_sup, wave};
use crate::config::{non_negative, positive};
use crate::{Command, Settings, Summary};

/// Velocities `v, 2v, .., N̄v` followed by their negatives, paired `i ↔ i + N̄`.
fn line_model(v: f64, n_bar: usize, lambda: f64) -> Result<VelocityModel> {
    let mut velocities: Vec<Vec<f64>> = (1..=n_bar).map(|m| vec![m as f64 * v]).collect();
    velocities.extend((1..=n_bar).map(|m| vec![-(m as f64) * v]));
    Ok(VelocityModel::paired(velocities, lambda)?)
}

pub fn run(s: &Settings) -> Result<Summary> {
    let v = positive("v", s.v.unwrap_or(1.0))?;
    let lambda = non_negative("a", s.a.unwrap_or(0.5))?;
    let n_bar = s.n_bar.unwrap_or(2);
    if !(1..=4).contains(&n_bar) {
        bail!("--n-bar must be between 1 and 4, got {n_bar}");
    }
    let points = s.grid_n.unwrap_or(256);
    let length = positive("length", s.length.unwrap_or(8.0))?;
    let t_final = positive("t-final", s.t_final.unwrap_or(20.0))?;
    let max_n = s.densities.unwrap_or(3);
    let tol = s.tol()?;
    let fit_seed = s.seed()?.unwrap_or(0);
    let grid = grid_1d(points, length)?;
    let model = line_model(v, n_bar, lambda)?;

    let mut summary = Summary::new(
        Command::Multiwalk,
        &[
            ("v", v.to_string()),
            ("lambda", lambda.to_string()),
            ("n_bar", n_bar.to_string()),
            ("grid_n", points.to_string()),
            ("length", length.to_string()),
            ("t_final", t_final.to_string()),
            ("densities", max_n.to_string()),
        ],
    );
    let f0 = Bundle::new(
        (0..model.n())
            .map(|i| wave(grid, &[(1.0, (i + 1) as f64, 0.3 * i as f64), (0.25, (i + 3) as f64, 1.0)]))
            .collect::<Result<Vec<_>>>()?,
    )?;
    let times = linspace(0.0, t_final, 11);

    let m0 = total_mass(&f0);
    let mass_scale = f0.components().iter().map(|c| c.map(f64::abs).values().iter().sum::<f64>()).sum::<f64>()
        * grid.cell_volume();
    let mut conj = 0.0_f64;
    let mut mass = 0.0_f64;
    for &t in &times {
        let unrescaled = evolve_continuum(&f0, &model, t)?;
        mass = mass.max((total_mass(&unrescaled) - m0).abs() / mass_scale.max(1.0));
        let lhs = rescale_multi(&unrescaled, t, lambda)?;
        conj = conj.max(rel_sup(&lhs, &evolve_rescaled(&f0, &model, t)?)?);
    }
    summary.at_most("rescaling conjugacy (relative sup)", conj, tol);
    summary.at_most("mass conservation", mass, tol);

    let cert = match fit_hamiltonian(&model.rescaled(), fit_seed) {
        Ok(c) => c,
        Err(obstruction) => {
            summary.holds("hamiltonian certificate", false, obstruction.to_string());
            return Ok(summary);
        }
    };
    let cs: Vec<String> = cert.c().iter().map(|c| format!("{c}")).collect();
    summary.holds("hamiltonian certificate", true, format!("c = ({})", cs.join(", ")));
    summary.attach("multiwalk_certificate.txt", certificate_to_string(&cert));

    let densities: Vec<_> = (0..=max_n).map(|n| cert.density_n(n)).collect();
    let k_max = 2.0 * std::f64::consts::PI * (model.n() + 2) as f64 / length;
    let c_max = cert.c().iter().fold(0.0_f64, |m, c| m.max(c.abs()));
    let mut values = Vec::new();
    let mut agree = 0.0_f64;
    let mut drift = 0.0_f64;
    for &t in &times {
        let f = hamiltonian_evolve(&f0, &cert, &model, t)?;
        agree = agree.max(rel_sup(&f, &evolve_rescaled(&f0, &model, t)?)?);
        values.push(densities.iter().map(|d| d.value(&f)).collect::<randevol_core::Result<Vec<_>>>()?);
        let row = values.last().expect("just pushed");
        for (n, (h, h0)) in row.iter().zip(&values[0]).enumerate() {
            // modes with k·v = 0 grow, so judge against the current state's energy
            let scale = h0.abs().max(c_max * energy_scale(&f) * k_max.powi(2 * n as i32));
            drift = drift.max((h - h0).abs() / scale);
        }
    }
    summary.at_most("hamiltonian flow matches rescaled flow", agree, tol);
    summary.at_most("density drift (state scale)", drift, tol);
    let mut report = DensityReport::new((0..=max_n).map(|n| format!("H{n}")).collect())
        .with_meta("module", "multiwalk")
        .with_meta("n_bar", n_bar)
        .with_meta("lambda", lambda);
    report.push_series(Frame::Rescaled, &times, &values)?;
    summary.attach("multiwalk_density.csv", report.to_csv_string());
    Ok(summary)
}
