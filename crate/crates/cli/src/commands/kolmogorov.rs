use std::fmt::Write as _;

use anyhow::{anyhow, bail, Result};
use nalgebra::{DMatrix, DVector};
use randevol_core::multiwalk::io::{matrix_to_string, read_matrix};
use randevol_core::multiwalk::kolmogorov::{column_sums, kolmogorov_beta};
use randevol_core::multiwalk::{kolmogorov_evolve, row_sum_defect, KolmogorovDirection};

use crate::config::positive;
use crate::{num, Command, Settings, Summary};

fn default_alpha() -> DMatrix<f64> {
    DMatrix::from_row_slice(3, 3, &[-1.0, 0.6, 0.4, 0.2, -0.5, 0.3, 0.7, 0.1, -0.8])
}

/// RK4 for the row vector equation `Ḟᵗ = Fᵗ β`.
fn integrate_sums(f0: Vec<f64>, beta: &DMatrix<f64>, t: f64, dt: f64) -> Vec<f64> {
    let steps = (t / dt).ceil().max(1.0) as usize;
    let h = t / steps as f64;
    let mut f = DVector::from_vec(f0).transpose();
    for _ in 0..steps {
        let k1 = &f * beta;
        let k2 = (&f + &k1 * (h / 2.0)) * beta;
        let k3 = (&f + &k2 * (h / 2.0)) * beta;
        let k4 = (&f + &k3 * h) * beta;
        f += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    }
    f.iter().copied().collect()
}

/// `α` comes from `--beta-file` (rows summing to zero) or a built-in 3-state
/// chain; every state gets the same rate `--a`.
pub fn run(s: &Settings) -> Result<Summary> {
    let alpha = match &s.beta_file {
        Some(path) => read_matrix(path).map_err(|e| anyhow!("{}: {e}", path.display()))?,
        None => default_alpha(),
    };
    if !alpha.is_square() {
        bail!("the generator must be square, got {}x{}", alpha.nrows(), alpha.ncols());
    }
    let defect = row_sum_defect(&alpha, 0.0);
    if defect > 1e-12 * alpha.amax().max(1.0) {
        bail!("generator rows must sum to zero (defect {defect:.3e})");
    }
    let rate = s.a.unwrap_or(0.0);
    if !rate.is_finite() {
        bail!("--a must be finite");
    }
    let t_final = positive("t-final", s.t_final.unwrap_or(1.7))?;
    let dt = positive("dt", s.dt.unwrap_or(1e-3))?;
    let tol = s.tol()?;
    let n = alpha.nrows();
    let beta = kolmogorov_beta(&alpha, &vec![rate; n])?;

    let mut summary = Summary::new(
        Command::Kolmogorov,
        &[
            ("states", n.to_string()),
            ("rate", rate.to_string()),
            ("t_final", t_final.to_string()),
            ("dt", dt.to_string()),
        ],
    );
    let p0 = DMatrix::identity(n, n);
    let mut csv = String::from("t,state,column_sum,reference\n");
    let mut worst = 0.0_f64;
    let mut stochastic = 0.0_f64;
    for i in 0..=10 {
        let t = t_final * i as f64 / 10.0;
        let p = kolmogorov_evolve(&p0, &beta, t, KolmogorovDirection::Inverse)?;
        let sums = column_sums(&p);
        let reference = if t == 0.0 { column_sums(&p0) } else { integrate_sums(column_sums(&p0), &beta, t, dt) };
        for (j, (a, b)) in sums.iter().zip(&reference).enumerate() {
            worst = worst.max((a - b).abs());
            let _ = writeln!(csv, "{},{j},{},{}", num(t), num(*a), num(*b));
        }
        for row in p.row_iter() {
            stochastic = stochastic.max((row.sum() - 1.0).abs());
            stochastic = stochastic.max(-row.min());
        }
        if i == 10 {
            summary.attach("kolmogorov_p.txt", matrix_to_string(&p));
        }
    }
    summary.at_most("column sums follow the forward equation", worst, tol);
    if rate == 0.0 {
        summary.at_most("rows stay stochastic", stochastic, tol);
    }
    let direct = kolmogorov_evolve(&p0, &beta.transpose(), t_final, KolmogorovDirection::Direct)?;
    let inverse = kolmogorov_evolve(&p0, &beta, t_final, KolmogorovDirection::Inverse)?;
    summary.at_most("direct and inverse equations are transposes", (direct - inverse.transpose()).amax(), tol);
    summary.attach("kolmogorov_sums.csv", csv);
    Ok(summary)
}
