//! Command-line settings, the `key=value` config file and seed lookup.

use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use clap::Args;

pub const SEED_ENV: &str = "RANDEVOL_SEED";

/// Every flag is optional; each subcommand supplies its own defaults.
#[derive(Debug, Clone, Default, PartialEq, Args)]
pub struct Settings {
    /// Grid points per axis.
    #[arg(long)]
    pub grid_n: Option<usize>,
    /// Period of the spatial domain.
    #[arg(long, allow_hyphen_values = true)]
    pub length: Option<f64>,
    /// Speed.
    #[arg(long, allow_hyphen_values = true)]
    pub v: Option<f64>,
    /// Switching intensity (the friction rate for `oscillator`).
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<f64>,
    /// Oscillator stiffness.
    #[arg(long, allow_hyphen_values = true)]
    pub b: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub t_final: Option<f64>,
    /// Time step; its role depends on the subcommand.
    #[arg(long)]
    pub dt: Option<f64>,
    /// Monte Carlo samples per site; 0 disables sampling.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Highest density order `n` to track.
    #[arg(long)]
    pub densities: Option<u32>,
    /// Output directory for CSV files and the summary.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Matrix file (see the README for the format).
    #[arg(long)]
    pub beta_file: Option<PathBuf>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// Number of velocity pairs.
    #[arg(long)]
    pub n_bar: Option<usize>,
    /// Where `fit` writes the certificate.
    #[arg(long)]
    pub cert_out: Option<PathBuf>,
    /// Worker threads for Monte Carlo sampling (default: all cores).
    #[arg(long)]
    pub threads: Option<usize>,
}

/// Parses `value` into `slot` unless the command line already set it.
fn fill<T>(slot: &mut Option<T>, value: &str, line: usize, key: &str) -> Result<()>
where
    T: FromStr,
    T::Err: Display,
{
    let parsed = value
        .parse::<T>()
        .map_err(|e| anyhow!("config line {line}: bad value {value:?} for {key}: {e}"))?;
    if slot.is_none() {
        *slot = Some(parsed);
    }
    Ok(())
}

impl Settings {
    /// Merges a config file underneath the command-line values.
    pub fn merge_config_text(&mut self, text: &str) -> Result<()> {
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.trim();
            if content.is_empty() || content.starts_with('#') {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                bail!("config line {line}: expected key=value, got {content:?}");
            };
            let key = key.trim().replace('_', "-");
            let value = value.trim();
            match key.as_str() {
                "grid-n" => fill(&mut self.grid_n, value, line, &key)?,
                "length" => fill(&mut self.length, value, line, &key)?,
                "v" => fill(&mut self.v, value, line, &key)?,
                "a" => fill(&mut self.a, value, line, &key)?,
                "b" => fill(&mut self.b, value, line, &key)?,
                "epsilon" => fill(&mut self.epsilon, value, line, &key)?,
                "t-final" => fill(&mut self.t_final, value, line, &key)?,
                "dt" => fill(&mut self.dt, value, line, &key)?,
                "samples" => fill(&mut self.samples, value, line, &key)?,
                "seed" => fill(&mut self.seed, value, line, &key)?,
                "densities" => fill(&mut self.densities, value, line, &key)?,
                "out" => fill(&mut self.out, value, line, &key)?,
                "beta-file" => fill(&mut self.beta_file, value, line, &key)?,
                "tol" => fill(&mut self.tol, value, line, &key)?,
                "n-bar" => fill(&mut self.n_bar, value, line, &key)?,
                "cert-out" => fill(&mut self.cert_out, value, line, &key)?,
                "threads" => fill(&mut self.threads, value, line, &key)?,
                _ => bail!("config line {line}: unknown key {key:?}"),
            }
        }
        Ok(())
    }

    pub fn merge_config_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        self.merge_config_text(&text)
            .with_context(|| format!("in config {}", path.display()))
    }

    /// `--seed`, then the config file, then the environment.
    pub fn seed(&self) -> Result<Option<u64>> {
        if let Some(s) = self.seed {
            return Ok(Some(s));
        }
        match std::env::var(SEED_ENV) {
            Ok(text) => text
                .trim()
                .parse::<u64>()
                .map(Some)
                .map_err(|e| anyhow!("{SEED_ENV}={text:?} is not a seed: {e}")),
            Err(_) => Ok(None),
        }
    }

    pub fn require_seed(&self) -> Result<u64> {
        self.seed()?
            .ok_or_else(|| anyhow!("this run samples randomly: pass --seed, set seed= in the config, or set {SEED_ENV}"))
    }

    pub fn tol(&self) -> Result<f64> {
        positive("tol", self.tol.unwrap_or(1e-10))
    }
}

pub fn positive(name: &str, x: f64) -> Result<f64> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        bail!("--{name} must be positive and finite, got {x}")
    }
}

pub fn non_negative(name: &str, x: f64) -> Result<f64> {
    if x >= 0.0 && x.is_finite() {
        Ok(x)
    } else {
        bail!("--{name} must be non-negative and finite, got {x}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn command_line_wins_over_config() {
        let mut s = Settings {
            a: Some(0.25),
            ..Settings::default()
        };
        s.merge_config_text("# comment\n\na = 0.75\ngrid_n=128\nt-final=3.5\n").unwrap();
        assert_eq!(s.a, Some(0.25));
        assert_eq!(s.grid_n, Some(128));
        assert_eq!(s.t_final, Some(3.5));
    }

    #[test]
    fn errors_name_the_line() {
        let err = Settings::default().merge_config_text("v=1\n\nspeed=2\n").unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
        let err = Settings::default().merge_config_text("v=fast\n").unwrap_err();
        assert!(err.to_string().contains("line 1"), "{err}");
        let err = Settings::default().merge_config_text("# x\nv 1\n").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn config_values_are_validated_even_when_overridden() {
        let mut s = Settings {
            seed: Some(3),
            ..Settings::default()
        };
        assert!(s.merge_config_text("seed=-1\n").is_err());
    }
}
