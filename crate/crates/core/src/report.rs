//! Conserved-density time series and their CSV form.
//!
//! The CSV dialect is comma-separated with a header row, preceded by
//! `# key=value` metadata lines. Floats are written with 17 significant
//! digits so that a written report reads back bit-for-bit.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// Which variables a row was measured in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Frame {
    Rescaled,
    Unrescaled,
}

impl Frame {
    pub fn as_str(&self) -> &'static str {
        match self {
            Frame::Rescaled => "rescaled",
            Frame::Unrescaled => "unrescaled",
        }
    }

    pub fn parse(s: &str) -> Option<Frame> {
        match s {
            "rescaled" => Some(Frame::Rescaled),
            "unrescaled" => Some(Frame::Unrescaled),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityRow {
    pub t: f64,
    pub frame: Frame,
    pub values: Vec<f64>,
    /// Running maximum over this frame's history and over all densities of
    /// `|H(t) - H(0)| / |H(0)|` (absolute when `H(0) = 0`).
    pub max_drift: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DensityReport {
    pub metadata: Vec<(String, String)>,
    pub labels: Vec<String>,
    pub rows: Vec<DensityRow>,
}

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn relative_drift(value: f64, initial: f64) -> f64 {
    if initial == 0.0 {
        (value - initial).abs()
    } else {
        (value - initial).abs() / initial.abs()
    }
}

impl DensityReport {
    pub fn new(labels: Vec<String>) -> Self {
        DensityReport {
            metadata: Vec::new(),
            labels,
            rows: Vec::new(),
        }
    }

    pub fn with_meta(mut self, key: &str, value: impl ToString) -> Self {
        self.metadata.push((key.to_string(), value.to_string()));
        self
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.metadata
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    /// Appends a series for one frame. Times must increase.
    pub fn push_series(&mut self, frame: Frame, times: &[f64], values: &[Vec<f64>]) -> Result<()> {
        if times.len() != values.len() {
            return Err(Error::Dimension(format!(
                "{} times for {} value rows",
                times.len(),
                values.len()
            )));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter("report times must increase".into()));
        }
        let Some(initial) = values.first() else {
            return Ok(());
        };
        let mut running = 0.0_f64;
        for (&t, row) in times.iter().zip(values) {
            if row.len() != self.labels.len() {
                return Err(Error::Dimension(format!(
                    "row has {} values for {} labels",
                    row.len(),
                    self.labels.len()
                )));
            }
            for (v, v0) in row.iter().zip(initial) {
                running = running.max(relative_drift(*v, *v0));
            }
            self.rows.push(DensityRow {
                t,
                frame,
                values: row.clone(),
                max_drift: running,
            });
        }
        Ok(())
    }

    /// Largest drift seen in `frame`.
    pub fn max_drift(&self, frame: Frame) -> f64 {
        self.rows
            .iter()
            .filter(|r| r.frame == frame)
            .fold(0.0, |m, r| m.max(r.max_drift))
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        for (k, v) in &self.metadata {
            writeln!(out, "# {k}={v}")?;
        }
        let mut header = vec!["t".to_string(), "frame".to_string()];
        header.extend(self.labels.iter().cloned());
        header.push("max_drift".to_string());
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&header).map_err(csv_err)?;
        for row in &self.rows {
            let mut rec = vec![fmt_f64(row.t), row.frame.as_str().to_string()];
            rec.extend(row.values.iter().map(|&v| fmt_f64(v)));
            rec.push(fmt_f64(row.max_drift));
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("utf8")
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut metadata = Vec::new();
        let mut body = String::new();
        let mut header_line = 0;
        for (idx, line) in input.lines().enumerate() {
            let line = line?;
            if let Some(meta) = line.strip_prefix('#') {
                let meta = meta.trim();
                let (k, v) = meta.split_once('=').ok_or_else(|| Error::Parse {
                    line: idx + 1,
                    message: format!("metadata line without '=': {meta}"),
                })?;
                metadata.push((k.to_string(), v.to_string()));
                header_line = idx + 1;
            } else {
                body.push_str(&line);
                body.push('\n');
            }
        }
        let mut r = csv::Reader::from_reader(body.as_bytes());
        let header = r.headers().map_err(csv_err)?.clone();
        let n = header.len();
        if n < 3 || &header[0] != "t" || &header[1] != "frame" || &header[n - 1] != "max_drift" {
            return Err(Error::Parse {
                line: header_line + 1,
                message: "expected header t,frame,...,max_drift".into(),
            });
        }
        let labels = header.iter().skip(2).take(n - 3).map(str::to_string).collect();
        let mut rows = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let line = header_line + 2 + i;
            let rec = rec.map_err(csv_err)?;
            let num = |s: &str| {
                s.parse::<f64>().map_err(|e| Error::Parse {
                    line,
                    message: format!("bad number {s:?}: {e}"),
                })
            };
            let frame = Frame::parse(&rec[1]).ok_or_else(|| Error::Parse {
                line,
                message: format!("unknown frame {:?}", &rec[1]),
            })?;
            rows.push(DensityRow {
                t: num(&rec[0])?,
                frame,
                values: (2..n - 1).map(|j| num(&rec[j])).collect::<Result<_>>()?,
                max_drift: num(&rec[n - 1])?,
            });
        }
        Ok(DensityReport {
            metadata,
            labels,
            rows,
        })
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}
