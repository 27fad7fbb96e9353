//! Experiment runner behind the `randevol` binary.
//!
//! Every subcommand builds a [`Summary`]: parameter lines, one line per
//! check and the files to write. Nothing in a summary depends on timing or
//! on the thread count, so identical settings give identical bytes.

pub mod commands;
pub mod config;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Parser, ValueEnum};

pub use config::Settings;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Two-velocity walk: discrete model against the continuum, plus a density report.
    Walk1d,
    /// Second-order forms of the damped wave equation and its diffusion limit.
    Telegrapher,
    /// Multi-velocity evolution with its Hamiltonian certificate.
    Multiwalk,
    /// Read a beta matrix and emit a certificate or an obstruction.
    Fit,
    /// Dimension table for N = 2, 4, 6.
    Dims,
    /// Forward/backward equations for the switching process.
    Kolmogorov,
    /// Damped oscillator and its conservative rescaling.
    Oscillator,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Walk1d => "walk1d",
            Command::Telegrapher => "telegrapher",
            Command::Multiwalk => "multiwalk",
            Command::Fit => "fit",
            Command::Dims => "dims",
            Command::Kolmogorov => "kolmogorov",
            Command::Oscillator => "oscillator",
        }
    }
}

/// Exit status: 0 all checks passed, 1 a check failed, 2 invalid input.
#[derive(Debug, Parser)]
#[command(name = "randevol", version, about = "Random evolutions, rescaling and conserved densities")]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    /// Flat key=value file; command-line flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub settings: Settings,
}

/// Formats a float so that it reads back exactly.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Summary {
    lines: Vec<String>,
    failures: usize,
    files: Vec<(String, String)>,
}

impl Summary {
    pub fn new(command: Command, params: &[(&str, String)]) -> Self {
        let mut s = Summary::default();
        let mut head = format!("randevol {}", command.name());
        for (k, v) in params {
            let _ = write!(head, " {k}={v}");
        }
        s.lines.push(head);
        s
    }

    pub fn info(&mut self, text: impl Into<String>) {
        self.lines.push(text.into());
    }

    /// Passes when `value <= tol`; NaN fails.
    pub fn at_most(&mut self, name: &str, value: f64, tol: f64) -> bool {
        let ok = value <= tol;
        self.record(ok, format!("{name}: {value:.6e} <= {tol:.1e}"))
    }

    /// Passes when `|value - target| <= width`.
    pub fn near(&mut self, name: &str, value: f64, target: f64, width: f64) -> bool {
        let ok = (value - target).abs() <= width;
        self.record(ok, format!("{name}: {value:.6} in {target} +/- {width}"))
    }

    pub fn holds(&mut self, name: &str, ok: bool, detail: impl Into<String>) -> bool {
        let detail = detail.into();
        self.record(ok, format!("{name}: {detail}"))
    }

    fn record(&mut self, ok: bool, text: String) -> bool {
        if !ok {
            self.failures += 1;
        }
        self.lines.push(format!("{} {text}", if ok { "PASS" } else { "FAIL" }));
        ok
    }

    pub fn attach(&mut self, name: impl Into<String>, contents: impl Into<String>) {
        self.files.push((name.into(), contents.into()));
    }

    pub fn passed(&self) -> bool {
        self.failures == 0
    }

    pub fn failures(&self) -> usize {
        self.failures
    }

    pub fn files(&self) -> &[(String, String)] {
        &self.files
    }

    pub fn text(&self) -> String {
        let mut out = String::new();
        for l in &self.lines {
            out.push_str(l);
            out.push('\n');
        }
        let _ = writeln!(
            out,
            "{}: {} failed check(s)",
            if self.passed() { "ok" } else { "FAILED" },
            self.failures
        );
        out
    }

    /// Writes every attached file plus `summary.txt` into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        for (name, contents) in &self.files {
            let path = dir.join(name);
            std::fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        }
        let path = dir.join("summary.txt");
        std::fs::write(&path, self.text()).with_context(|| format!("writing {}", path.display()))
    }
}

pub fn execute(command: Command, settings: &Settings) -> Result<Summary> {
    match command {
        Command::Walk1d => commands::walk1d::run(settings),
        Command::Telegrapher => commands::telegrapher::run(settings),
        Command::Multiwalk => commands::multiwalk::run(settings),
        Command::Fit => commands::fit::run(settings),
        Command::Dims => commands::dims::run(settings),
        Command::Kolmogorov => commands::kolmogorov::run(settings),
        Command::Oscillator => commands::oscillator::run(settings),
    }
}

/// Merges the config file, runs the subcommand on a pool of the requested
/// size and writes the output directory.
pub fn run(cli: Cli) -> Result<Summary> {
    let mut settings = cli.settings;
    if let Some(path) = &cli.config {
        settings.merge_config_file(path)?;
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = settings.threads {
        anyhow::ensure!(n > 0, "--threads must be at least 1");
        pool = pool.num_threads(n);
    }
    let pool = pool.build().context("building the thread pool")?;
    let summary = pool.install(|| execute(cli.command, &settings))?;
    if let Some(dir) = &settings.out {
        summary.write_to(dir)?;
    }
    Ok(summary)
}
