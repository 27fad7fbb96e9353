use anyhow::{anyhow, Result};
use randevol_core::multiwalk::io::{certificate_to_string, read_matrix, write_certificate};
use randevol_core::multiwalk::{fit_hamiltonian, RescaledGenerator};

use crate::{Command, Settings, Summary};

/// A representable `β` yields a certificate (exit 0); an obstruction is a
/// failed check (exit 1); an unreadable or malformed file is invalid input.
pub fn run(s: &Settings) -> Result<Summary> {
    let path = s
        .beta_file
        .as_ref()
        .ok_or_else(|| anyhow!("fit needs --beta-file PATH"))?;
    let tol = s.tol()?;
    let seed = s.seed()?.unwrap_or(0);
    let beta = read_matrix(path).map_err(|e| anyhow!("{}: {e}", path.display()))?;
    let generator = RescaledGenerator::infer_lambda(beta)?;
    generator.validate()?;

    let mut summary = Summary::new(
        Command::Fit,
        &[
            ("n", generator.n().to_string()),
            ("lambda", generator.lambda.to_string()),
            ("seed", seed.to_string()),
        ],
    );
    match fit_hamiltonian(&generator, seed) {
        Ok(cert) => {
            let text = certificate_to_string(&cert);
            summary.info(text.trim_end());
            summary.at_most("certificate reproduces beta", cert.reconstruction_defect(&generator.beta), tol);
            if let Some(out) = &s.cert_out {
                write_certificate(out, &cert)?;
            }
            summary.attach("certificate.txt", text);
        }
        Err(obstruction) => {
            summary.holds("representable", false, obstruction.to_string());
            summary.attach("obstruction.txt", format!("{obstruction}\n"));
        }
    }
    Ok(summary)
}
