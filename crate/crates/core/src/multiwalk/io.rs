//! Plain-text matrices and certificates.
//!
//! A matrix file starts with `N M` and then holds `N` rows of `M`
//! space-separated numbers. A certificate file is
//!
//! ```text
//! certificate N
//! lambda <value>
//! gamma_upper
//! <row 0: Γ_01 .. Γ_0,N-1>
//! ...
//! <row N-2: Γ_N-2,N-1>
//! c
//! <c_0 .. c_N-1>
//! ```
//!
//! Blank lines and lines starting with `#` are ignored.

use std::path::Path;

use nalgebra::DMatrix;

use super::fit::HamiltonianCertificate;
use crate::error::{Error, Result};

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Content lines with their 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_numbers(line: usize, s: &str) -> Result<Vec<f64>> {
    s.split_whitespace()
        .map(|tok| {
            tok.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| parse_err(line, format!("not a finite number: {tok:?}")))
        })
        .collect()
}

pub fn matrix_to_string(m: &DMatrix<f64>) -> String {
    let mut out = format!("{} {}\n", m.nrows(), m.ncols());
    for row in m.row_iter() {
        let cells: Vec<String> = row.iter().map(|&x| fmt(x)).collect();
        out.push_str(&cells.join(" "));
        out.push('\n');
    }
    out
}

pub fn parse_matrix(text: &str) -> Result<DMatrix<f64>> {
    let mut lines = content_lines(text);
    let (line, header) = lines.next().ok_or_else(|| parse_err(1, "empty matrix file"))?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse::<usize>().map_err(|_| parse_err(line, format!("bad dimension {t:?}"))))
        .collect::<Result<_>>()?;
    let [rows, cols] = dims[..] else {
        return Err(parse_err(line, "header must be \"N M\""));
    };
    let mut data = Vec::with_capacity(rows * cols);
    let mut last = line;
    for r in 0..rows {
        let (line, s) = lines
            .next()
            .ok_or_else(|| parse_err(last + 1, format!("expected {rows} rows, found {r}")))?;
        let values = parse_numbers(line, s)?;
        if values.len() != cols {
            return Err(parse_err(line, format!("expected {cols} entries, found {}", values.len())));
        }
        data.extend(values);
        last = line;
    }
    if let Some((line, _)) = lines.next() {
        return Err(parse_err(line, "trailing content after matrix"));
    }
    Ok(DMatrix::from_row_slice(rows, cols, &data))
}

pub fn read_matrix(path: &Path) -> Result<DMatrix<f64>> {
    parse_matrix(&std::fs::read_to_string(path)?)
}

pub fn write_matrix(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    std::fs::write(path, matrix_to_string(m))?;
    Ok(())
}

pub fn certificate_to_string(cert: &HamiltonianCertificate) -> String {
    let n = cert.n();
    let mut out = format!("certificate {n}\nlambda {}\ngamma_upper\n", fmt(cert.lambda()));
    for i in 0..n.saturating_sub(1) {
        let cells: Vec<String> = (i + 1..n).map(|j| fmt(cert.gamma()[(i, j)])).collect();
        out.push_str(&cells.join(" "));
        out.push('\n');
    }
    out.push_str("c\n");
    let cells: Vec<String> = cert.c().iter().map(|&x| fmt(x)).collect();
    out.push_str(&cells.join(" "));
    out.push('\n');
    out
}

fn expect_keyword<'a>(
    lines: &mut impl Iterator<Item = (usize, &'a str)>,
    keyword: &str,
    last: usize,
) -> Result<(usize, &'a str)> {
    let (line, s) = lines
        .next()
        .ok_or_else(|| parse_err(last + 1, format!("missing {keyword:?}")))?;
    let rest = s
        .strip_prefix(keyword)
        .ok_or_else(|| parse_err(line, format!("expected {keyword:?}")))?;
    Ok((line, rest.trim()))
}

pub fn parse_certificate(text: &str) -> Result<HamiltonianCertificate> {
    let mut lines = content_lines(text);
    let (line, rest) = expect_keyword(&mut lines, "certificate", 0)?;
    let n: usize = rest
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| parse_err(line, format!("bad size {rest:?}")))?;
    let (line, rest) = expect_keyword(&mut lines, "lambda", line)?;
    let lambda = match parse_numbers(line, rest)?[..] {
        [x] => x,
        _ => return Err(parse_err(line, "lambda takes one value")),
    };
    let (mut last, _) = expect_keyword(&mut lines, "gamma_upper", line)?;
    let mut upper = DMatrix::zeros(n, n);
    for i in 0..n - 1 {
        let (line, s) = lines
            .next()
            .ok_or_else(|| parse_err(last + 1, "missing Gamma row"))?;
        let row = parse_numbers(line, s)?;
        if row.len() != n - 1 - i {
            return Err(parse_err(line, format!("Gamma row {i} needs {} entries", n - 1 - i)));
        }
        for (k, x) in row.into_iter().enumerate() {
            upper[(i, i + 1 + k)] = x;
        }
        last = line;
    }
    let (line, _) = expect_keyword(&mut lines, "c", last)?;
    let (line, s) = lines.next().ok_or_else(|| parse_err(line + 1, "missing c values"))?;
    let c = parse_numbers(line, s)?;
    if c.len() != n {
        return Err(parse_err(line, format!("c needs {n} entries")));
    }
    HamiltonianCertificate::from_upper(&upper, c, lambda).map_err(|e| parse_err(line, e.to_string()))
}

pub fn read_certificate(path: &Path) -> Result<HamiltonianCertificate> {
    parse_certificate(&std::fs::read_to_string(path)?)
}

pub fn write_certificate(path: &Path, cert: &HamiltonianCertificate) -> Result<()> {
    std::fs::write(path, certificate_to_string(cert))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reads_hand_written_matrix() {
        let m = parse_matrix("# beta\n2 3\n1 2 3\n\n-4 5.5 6e-1\n").unwrap();
        assert_eq!(m, DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, -4.0, 5.5, 0.6]));
    }

    #[test]
    fn errors_carry_line_numbers() {
        assert_eq!(
            parse_matrix("2 2\n1 2\n3 x\n"),
            Err(Error::Parse {
                line: 3,
                message: "not a finite number: \"x\"".into()
            })
        );
        assert!(matches!(parse_matrix("2 2\n1 2 3\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_matrix("2 2\n1 2\n"), Err(Error::Parse { line: 3, .. })));
        assert!(matches!(parse_matrix("1 1\n1\n2\n"), Err(Error::Parse { line: 3, .. })));
        assert!(matches!(parse_matrix("2\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_matrix(""), Err(Error::Parse { .. })));
    }

    #[test]
    fn certificate_round_trip() {
        let upper = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, -0.5, 0.0, 0.0, 0.25, 0.0, 0.0, 0.0]);
        let cert = HamiltonianCertificate::from_upper(&upper, vec![-1.0, 2.0, 0.5], 1.5).unwrap();
        let text = certificate_to_string(&cert);
        assert_eq!(parse_certificate(&text).unwrap(), cert);
    }

    #[test]
    fn certificate_rejects_zero_weight() {
        let text = "certificate 2\nlambda 1\ngamma_upper\n1\nc\n1 0\n";
        assert!(matches!(parse_certificate(text), Err(Error::Parse { line: 6, .. })));
    }

    proptest! {
        #[test]
        fn matrix_round_trip_is_exact(rows in 1usize..5, cols in 1usize..5, seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let m = DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1e3..1e3) * 10f64.powi(rng.random_range(-8..8)));
            prop_assert_eq!(parse_matrix(&matrix_to_string(&m)).unwrap(), m);
        }
    }
}
