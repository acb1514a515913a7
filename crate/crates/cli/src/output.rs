//! CSV and JSON writers with round-trip number formatting.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use ffsheets_core::numerics::Matrix;

use crate::CliError;

/// 17 significant digits, `.` decimal; `nan`, `inf` and `-inf` spelled out.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

/// Column names `re_s_i_j, im_s_i_j` for an `n × n` matrix, 1-based.
pub fn matrix_columns(n: usize) -> Vec<String> {
    let mut cols = Vec::with_capacity(2 * n * n);
    for i in 1..=n {
        for j in 1..=n {
            cols.push(format!("re_s_{i}_{j}"));
            cols.push(format!("im_s_{i}_{j}"));
        }
    }
    cols
}

pub fn matrix_fields(m: &Matrix) -> Vec<String> {
    m.as_slice().iter().flat_map(|z| [num(z.re), num(z.im)]).collect()
}

pub fn nan_fields(n: usize) -> Vec<String> {
    vec![num(f64::NAN); 2 * n * n]
}

/// Accumulates CSV rows in memory.
#[derive(Debug, Clone)]
pub struct Csv {
    text: String,
    width: usize,
}

impl Csv {
    pub fn new(header: &[String]) -> Self {
        let mut text = header.join(",");
        text.push('\n');
        Csv {
            text,
            width: header.len(),
        }
    }

    pub fn row(&mut self, fields: &[String]) {
        debug_assert_eq!(fields.len(), self.width);
        let _ = writeln!(self.text, "{}", fields.join(","));
    }

    pub fn write(&self, path: &Path) -> Result<PathBuf, CliError> {
        write_text(path, &self.text)
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<PathBuf, CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    Ok(path.to_path_buf())
}

pub fn write_json(path: &Path, value: &serde_json::Value) -> Result<PathBuf, CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("a JSON value serializes");
    text.push('\n');
    write_text(path, &text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, -1.0 / 3.0, 1e-300, 6.02214076e23, std::f64::consts::PI] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(f64::INFINITY), "inf");
        assert_eq!(num(0.0), "0.0000000000000000e0");
    }
}
