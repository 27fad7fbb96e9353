use std::fmt::Write as _;

use anyhow::{bail, Result};
use randevol_core::multiwalk::{ham_dim, tangent_rank_at_beta0, total_dim};

use crate::{Command, Settings, Summary};

/// Counts for `N ∈ {2, 4, 6}`, plus `N = 2·n_bar` when `--n-bar` is given.
pub fn run(s: &Settings) -> Result<Summary> {
    let mut sizes = vec![2usize, 4, 6];
    if let Some(n_bar) = s.n_bar {
        if !(1..=8).contains(&n_bar) {
            bail!("--n-bar must be between 1 and 8, got {n_bar}");
        }
        if !sizes.contains(&(2 * n_bar)) {
            sizes.push(2 * n_bar);
        }
    }
    let mut summary = Summary::new(Command::Dims, &[]);
    let mut csv = String::from("N,total,ham,rank_plus_1\n");
    summary.info(format!("{:>3} {:>6} {:>6} {:>7}", "N", "total", "ham", "rank+1"));
    for n in sizes {
        let total = total_dim(n);
        let ham = ham_dim(n)?;
        let rank = tangent_rank_at_beta0(n / 2)?;
        summary.info(format!("{n:>3} {total:>6} {ham:>6} {:>7}", rank + 1));
        let _ = writeln!(csv, "{n},{total},{ham},{}", rank + 1);
        let expected = 2 * ((n / 2) * (n / 2) - n / 2);
        summary.holds(
            &format!("N={n} tangent rank"),
            rank == expected && rank + 1 == ham,
            format!("rank {rank}, expected {expected}; rank+1 {} vs ham {ham}", rank + 1),
        );
    }
    summary.attach("dims.csv", csv);
    Ok(summary)
}
