use std::f64::consts::PI;
use std::fmt::Write as _;

use anyhow::{bail, Result};
use randevol_core::convergence::observed_order;
use randevol_core::report::Frame;
use randevol_core::rescale::{rescale, Direction};
use randevol_core::walk1d::*;
use randevol_core::{Bundle, Field, PeriodicGrid};

use super::{grid_1d, linspace, rel_sup, wave};
use crate::config::{non_negative, positive};
use crate::{num, Command, Settings, Summary};

const MC_SITES: usize = 20;

fn smooth_phi(length: f64) -> impl Fn(f64) -> f64 + Sync + Copy {
    move |x: f64| (2.0 * PI * x / length).sin() + 0.4 * (6.0 * PI * x / length).cos()
}

fn initial_pair(grid: PeriodicGrid) -> Result<Bundle> {
    let plus = wave(grid, &[(1.0, 1.0, 0.0), (0.5, 2.0, PI / 2.0)])?;
    let minus = wave(grid, &[(0.8, 1.0, PI / 2.0), (-0.3, 3.0, 0.0)])?;
    Ok(Bundle::pair(plus, minus)?)
}

pub fn run(s: &Settings) -> Result<Summary> {
    let v = positive("v", s.v.unwrap_or(1.0))?;
    let a = non_negative("a", s.a.unwrap_or(0.5))?;
    let points = s.grid_n.unwrap_or(256);
    let length = positive("length", s.length.unwrap_or(1.0))?;
    let dt = positive("dt", s.dt.unwrap_or(length / (v * points as f64)))?;
    let t_final = positive("t-final", s.t_final.unwrap_or(2.0))?;
    let max_n = s.densities.unwrap_or(3);
    let samples = s.samples.unwrap_or(1000);
    let tol = s.tol()?;
    let seed = if samples > 0 { Some(s.require_seed()?) } else { None };
    if !points.is_multiple_of(4) {
        bail!("--grid-n must be a multiple of 4 for the convergence levels, got {points}");
    }
    let params = WalkParams::new(v, a, dt)?;
    let grid = grid_1d(points, length)?;
    params.check_lattice(&grid)?;

    let mut summary = Summary::new(
        Command::Walk1d,
        &[
            ("v", v.to_string()),
            ("a", a.to_string()),
            ("grid_n", points.to_string()),
            ("length", length.to_string()),
            ("dt", dt.to_string()),
            ("t_final", t_final.to_string()),
            ("densities", max_n.to_string()),
            ("samples", samples.to_string()),
            ("seed", seed.map_or("none".into(), |x| x.to_string())),
        ],
    );
    let f0 = initial_pair(grid)?;

    let mut conj = 0.0_f64;
    for t in linspace(0.0, t_final, 11) {
        let lhs = rescale(&evolve_unrescaled(&f0, t, &params)?, t, a, Direction::Forward)?;
        conj = conj.max(rel_sup(&lhs, &evolve_hamiltonian(&f0, t, &params)?)?);
    }
    summary.at_most("rescaling conjugacy (relative sup)", conj, tol);

    let times = linspace(0.0, t_final, 21);
    let report = density_report(&f0, &params, &times, max_n)?
        .with_meta("t_final", t_final)
        .with_meta("grid_n", points);
    summary.at_most("rescaled density drift", report.max_drift(Frame::Rescaled), tol);
    if a == 0.0 {
        summary.at_most("unrescaled density drift", report.max_drift(Frame::Unrescaled), tol);
    } else {
        let times = linspace(1.0 / a, 5.0 / a, 25);
        let values = times
            .iter()
            .map(|&t| conserved_density(&evolve_unrescaled(&f0, t, &params)?, 0))
            .collect::<randevol_core::Result<Vec<f64>>>()?;
        let rate = decay_exponent(&times, &values)?;
        summary.info(format!("unrescaled H0 decay exponent {rate:.12} (expected {})", -2.0 * a));
        summary.at_most("decay exponent relative error", (rate + 2.0 * a).abs() / (2.0 * a), 1e-6);
    }
    summary.attach("walk1d_density.csv", report.to_csv_string());

    convergence(&mut summary, &params, points, length, t_final, tol)?;

    if let Some(seed) = seed {
        monte_carlo(&mut summary, &params, grid, t_final, samples, seed)?;
    }
    Ok(summary)
}

/// Recursion against the PDE on three nested lattices ending at `params.dt`.
fn convergence(
    summary: &mut Summary,
    params: &WalkParams,
    points: usize,
    length: f64,
    t_final: f64,
    tol: f64,
) -> Result<()> {
    let mut steps = Vec::new();
    let mut errors = Vec::new();
    let mut csv = String::from("points,dt,steps,sup_error\n");
    for level in [points / 4, points / 2, points] {
        let dt = length / (params.v * level as f64);
        let p = WalkParams::new(params.v, params.a, dt)?;
        let grid = p.lattice_grid(level)?;
        let phi = Field::from_fn(grid, |x, _| smooth_phi(length)(x))?;
        let n = (t_final / dt).round().max(1.0) as usize;
        let (rp, rm) = expectation_recursion(&phi, n, &p)?;
        let pde = evolve_unrescaled(&Bundle::pair(phi.clone(), phi)?, n as f64 * dt, &p)?;
        let err = rp
            .sup_distance(pde.component(0))?
            .max(rm.sup_distance(pde.component(1))?);
        let _ = writeln!(csv, "{level},{},{n},{}", num(dt), num(err));
        steps.push(dt);
        errors.push(err);
    }
    summary.attach("walk1d_convergence.csv", csv);
    if params.a == 0.0 {
        // transport by whole lattice sites: recursion and PDE agree exactly
        summary.at_most("recursion vs PDE (pure transport)", errors[2], tol);
    } else {
        let order = observed_order(&steps, &errors)?;
        summary.near("recursion -> PDE observed order", order, 1.0, 0.2);
    }
    Ok(())
}

/// Sampled walks against the recursion at evenly spaced sites.
fn monte_carlo(
    summary: &mut Summary,
    params: &WalkParams,
    grid: PeriodicGrid,
    t_final: f64,
    samples: usize,
    seed: u64,
) -> Result<()> {
    let phi_fn = smooth_phi(grid.length(0));
    let phi = Field::from_fn(grid, |x, _| phi_fn(x))?;
    let n = (t_final / params.dt).round().max(1.0) as usize;
    let (rp, rm) = expectation_recursion(&phi, n, params)?;
    let mut csv = String::from("site,x,recursion_plus,mc_plus,stderr_plus,recursion_minus,mc_minus,stderr_minus\n");
    let mut covered = 0;
    for k in 0..MC_SITES {
        let site = k * grid.len() / MC_SITES;
        let x = grid.coordinates(site)[0];
        // each site gets its own seed so sites are independent
        let est = monte_carlo_expectation(phi_fn, x, n, params, samples, seed.wrapping_add(k as u64))?;
        let (ep, em) = (rp.values()[site], rm.values()[site]);
        // 4 standard errors; the floor only matters when a = 0 and the walk is deterministic
        let inside = |mc: f64, exact: f64, se: f64| (mc - exact).abs() <= 4.0 * se + 1e-12 * (1.0 + exact.abs());
        if inside(est.plus, ep, est.stderr_plus) && inside(est.minus, em, est.stderr_minus) {
            covered += 1;
        }
        let _ = writeln!(
            csv,
            "{site},{},{},{},{},{},{},{}",
            num(x),
            num(ep),
            num(est.plus),
            num(est.stderr_plus),
            num(em),
            num(est.minus),
            num(est.stderr_minus)
        );
    }
    summary.attach("walk1d_mc.csv", csv);
    let fraction = covered as f64 / MC_SITES as f64;
    summary.holds(
        "Monte Carlo within 4 standard errors",
        fraction >= 0.95,
        format!("{covered} of {MC_SITES} sites (need 95%)"),
    );
    Ok(())
}
