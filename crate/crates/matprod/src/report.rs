//! Deterministic JSON and CSV emission.
//!
//! JSON numbers carry 17 significant digits (bit-reproducible), CSV 12
//! (readable plot tables); identical inputs produce byte-identical files.

use crate::error::{Error, Result};
use crate::sampling::SpectralSample;
use num_complex::Complex64;
use std::io::{BufRead, Write};

/// JSON number with 17 significant digits.
pub fn json_num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        // JSON has no infinities; emit null.
        "null".to_string()
    }
}

/// CSV number with 12 significant digits.
pub fn csv_num(x: f64) -> String {
    format!("{x:.11e}")
}

/// Minimal ordered JSON object writer.
#[derive(Default)]
pub struct JsonObject {
    parts: Vec<String>,
}

impl JsonObject {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn raw(mut self, key: &str, value: String) -> Self {
        self.parts.push(format!("\"{key}\":{value}"));
        self
    }

    pub fn num(self, key: &str, value: f64) -> Self {
        let v = json_num(value);
        self.raw(key, v)
    }

    pub fn int(self, key: &str, value: u64) -> Self {
        self.raw(key, value.to_string())
    }

    pub fn str(self, key: &str, value: &str) -> Self {
        self.raw(key, format!("\"{}\"", value.replace('\\', "\\\\").replace('"', "\\\"")))
    }

    pub fn arr(self, key: &str, values: &[f64]) -> Self {
        let body = values.iter().map(|v| json_num(*v)).collect::<Vec<_>>().join(",");
        self.raw(key, format!("[{body}]"))
    }

    pub fn mat(self, key: &str, rows: &[Vec<f64>]) -> Self {
        let body = rows
            .iter()
            .map(|r| {
                let inner = r.iter().map(|v| json_num(*v)).collect::<Vec<_>>().join(",");
                format!("[{inner}]")
            })
            .collect::<Vec<_>>()
            .join(",");
        self.raw(key, format!("[{body}]"))
    }

    pub fn null(self, key: &str) -> Self {
        self.raw(key, "null".to_string())
    }

    pub fn finish(self) -> String {
        format!("{{{}}}\n", self.parts.join(","))
    }
}

/// CSV dump of product-chain draws: one row per realization with columns
/// sv_1..sv_n, re_ev_1, im_ev_1, .., re_ev_n, im_ev_n, r_1..r_n, log_scale.
pub fn write_sample_csv<W: Write>(out: &mut W, samples: &[SpectralSample]) -> Result<()> {
    let n = samples
        .first()
        .map(|s| s.sq_singular_values.len())
        .ok_or_else(|| Error::ParameterOutOfRange("no samples to write".into()))?;
    let mut header = Vec::new();
    for j in 1..=n {
        header.push(format!("sv_{j}"));
    }
    for j in 1..=n {
        header.push(format!("re_ev_{j}"));
        header.push(format!("im_ev_{j}"));
    }
    for j in 1..=n {
        header.push(format!("r_{j}"));
    }
    header.push("log_scale".to_string());
    writeln!(out, "{}", header.join(","))?;
    for s in samples {
        let mut row = Vec::with_capacity(4 * n + 1);
        for v in &s.sq_singular_values {
            row.push(csv_num(*v));
        }
        for z in &s.eigenvalues {
            row.push(csv_num(z.re));
            row.push(csv_num(z.im));
        }
        for v in &s.r_diag {
            row.push(csv_num(*v));
        }
        row.push(csv_num(s.log_scale));
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

/// One parsed row of a sample dump.
#[derive(Debug, Clone)]
pub struct SampleRow {
    pub sq_singular_values: Vec<f64>,
    pub eigenvalues: Vec<Complex64>,
    pub r_diag: Vec<f64>,
    pub log_scale: f64,
}

/// Read a sample dump produced by [`write_sample_csv`].
pub fn read_sample_csv<R: BufRead>(input: R) -> Result<Vec<SampleRow>> {
    let mut lines = input.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Semantic("empty sample file".into()))??;
    let cols: Vec<&str> = header.trim().split(',').collect();
    let n = cols.iter().filter(|c| c.starts_with("sv_")).count();
    let expected = 4 * n + 1;
    if n == 0 || cols.len() != expected || cols[expected - 1] != "log_scale" {
        return Err(Error::Semantic(format!(
            "unrecognized sample header: {header}"
        )));
    }
    let mut out = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let vals: Vec<f64> = line
            .trim()
            .split(',')
            .map(|v| {
                v.parse::<f64>().map_err(|_| Error::Semantic(format!(
                    "bad number '{v}' on data line {}",
                    lineno + 1
                )))
            })
            .collect::<Result<_>>()?;
        if vals.len() != expected {
            return Err(Error::Semantic(format!(
                "row {} has {} fields, expected {expected}",
                lineno + 1,
                vals.len()
            )));
        }
        let sq_singular_values = vals[0..n].to_vec();
        let eigenvalues = (0..n)
            .map(|j| Complex64::new(vals[n + 2 * j], vals[n + 2 * j + 1]))
            .collect();
        let r_diag = vals[3 * n..4 * n].to_vec();
        out.push(SampleRow {
            sq_singular_values,
            eigenvalues,
            r_diag,
            log_scale: vals[4 * n],
        });
    }
    Ok(out)
}
