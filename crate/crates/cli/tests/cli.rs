use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use randevol_core::multiwalk::dims::gamma0;
use randevol_core::multiwalk::io::read_certificate;
use randevol_core::report::DensityReport;

fn randevol(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_randevol"))
        .args(args)
        .env_remove("RANDEVOL_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn bundled_beta0() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data/beta0_n4.txt")
}

#[test]
fn dims_prints_the_table() {
    let o = randevol(&["dims"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("  4     13      5       5"), "{text}");
    assert!(text.contains("  6     31     13      13"), "{text}");
}

#[test]
fn fit_writes_the_block_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let cert_path = dir.path().join("cert.txt");
    let beta = bundled_beta0();
    let o = randevol(&[
        "fit",
        "--beta-file",
        beta.to_str().unwrap(),
        "--cert-out",
        cert_path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let cert = read_certificate(&cert_path).unwrap();
    assert_eq!(cert.gamma(), &gamma0(2));
    assert_eq!(cert.c(), &[-1.0, -1.0, 1.0, 1.0]);
    assert_eq!(cert.lambda(), 1.0);
}

#[test]
fn fit_reports_the_diagonal_obstruction() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("beta.txt");
    std::fs::write(&path, "3 3\n0.2 0.3 0.5\n0.5 0 0.5\n0.5 0.5 0\n").unwrap();
    let out = dir.path().join("out");
    let o = randevol(&["fit", "--beta-file", path.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("diagonal obstruction"), "{}", stdout(&o));
    assert!(std::fs::read_to_string(out.join("obstruction.txt")).unwrap().contains("beta[0][0]"));
}

#[test]
fn malformed_inputs_exit_2_with_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let beta = dir.path().join("beta.txt");
    std::fs::write(&beta, "# header\n2 2\n0 1\n1 nan\n").unwrap();
    let o = randevol(&["fit", "--beta-file", beta.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 4"), "{}", stderr(&o));

    let config = dir.path().join("run.cfg");
    std::fs::write(&config, "# walk\nv = 1\n\ngrid-n = many\n").unwrap();
    let o = randevol(&["walk1d", "--config", config.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("config line 4"), "{}", stderr(&o));

    let o = randevol(&["walk1d", "--grid-n", "6", "--samples", "0"]);
    assert_eq!(o.status.code(), Some(2));
    let o = randevol(&["walk1d", "--no-such-flag"]);
    assert_eq!(o.status.code(), Some(2));
    let o = randevol(&["fit"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn stochastic_runs_need_a_seed_from_somewhere() {
    let o = randevol(&["walk1d"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("RANDEVOL_SEED"));

    let from_env = Command::new(env!("CARGO_BIN_EXE_randevol"))
        .args(["walk1d", "--grid-n", "64"])
        .env("RANDEVOL_SEED", "11")
        .output()
        .unwrap();
    assert_eq!(from_env.status.code(), Some(0), "{}", stderr(&from_env));
    assert!(stdout(&from_env).contains("seed=11"));

    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.cfg");
    std::fs::write(&config, "seed=5\ngrid_n=64\n").unwrap();
    let from_config = randevol(&["walk1d", "--config", config.to_str().unwrap()]);
    assert!(stdout(&from_config).contains("seed=5"));
    let flag_wins = randevol(&["walk1d", "--config", config.to_str().unwrap(), "--seed", "9"]);
    assert!(stdout(&flag_wins).contains("seed=9"));
}

#[test]
fn pure_transport_report_has_no_drift() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("w");
    let o = randevol(&["walk1d", "--a", "0", "--samples", "0", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let text = std::fs::read_to_string(out.join("walk1d_density.csv")).unwrap();
    let report = DensityReport::read_csv(text.as_bytes()).unwrap();
    assert!(!report.rows.is_empty());
    for row in &report.rows {
        assert!(row.max_drift <= 1e-12, "t = {}: {}", row.t, row.max_drift);
    }
    // written reports read back and re-serialize to the same bytes
    assert_eq!(report.to_csv_string(), text);
}

#[test]
fn every_subcommand_passes_with_defaults() {
    let beta = bundled_beta0();
    let runs: Vec<Vec<&str>> = vec![
        vec!["walk1d", "--seed", "3"],
        vec!["telegrapher"],
        vec!["multiwalk"],
        vec!["fit", "--beta-file", beta.to_str().unwrap()],
        vec!["dims"],
        vec!["kolmogorov"],
        vec!["kolmogorov", "--a", "0.2"],
        vec!["oscillator"],
        vec!["oscillator", "--a", "0.8", "--b", "0.64"],
    ];
    for args in runs {
        let o = randevol(&args);
        assert_eq!(o.status.code(), Some(0), "{args:?}\n{}{}", stdout(&o), stderr(&o));
    }
}

#[test]
fn a_violated_tolerance_exits_1() {
    let o = randevol(&["oscillator", "--tol", "1e-30"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL rescaled energy drift"));
}
