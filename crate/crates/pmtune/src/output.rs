//! CSV and JSON writers. Floats are written with 17 significant digits so
//! that files round-trip exactly and can be compared byte for byte.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{RunError, RunResult};

/// `{:.16e}`: 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// A table cell.
#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(u64),
    Bool(bool),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Self::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Self::Int(v as u64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Self::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Self::Text(v.to_owned())
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Self::Float(v) => fmt_f64(*v),
            Self::Int(v) => v.to_string(),
            Self::Bool(v) => v.to_string(),
            Self::Text(s) => s.clone(),
        }
    }
}

/// Rows that can be written as CSV.
pub trait CsvRow {
    fn header() -> &'static [&'static str];
    fn cells(&self) -> Vec<Cell>;
}

/// In-memory CSV rendering, used for writing and for comparing runs.
pub fn render_csv<R: CsvRow>(rows: &[R]) -> RunResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(R::header())?;
    for r in rows {
        w.write_record(r.cells().iter().map(Cell::render))?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| RunError::io("<csv buffer>", e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("CSV output is UTF-8"))
}

/// Output directory of one run.
#[derive(Clone, Debug)]
pub struct OutputDir {
    root: PathBuf,
}

impl OutputDir {
    pub fn create(root: impl Into<PathBuf>) -> RunResult<Self> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(|e| RunError::io(&root, e))?;
        Ok(Self { root })
    }

    pub fn path(&self) -> &Path {
        &self.root
    }

    pub fn write_csv<R: CsvRow>(&self, name: &str, rows: &[R]) -> RunResult<PathBuf> {
        self.write_text(name, &render_csv(rows)?)
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> RunResult<PathBuf> {
        let mut s =
            serde_json::to_string_pretty(value).map_err(|e| RunError::config(e.to_string()))?;
        s.push('\n');
        self.write_text(name, &s)
    }

    fn write_text(&self, name: &str, text: &str) -> RunResult<PathBuf> {
        let p = self.root.join(name);
        fs::write(&p, text).map_err(|e| RunError::io(&p, e))?;
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct R(f64, usize);

    impl CsvRow for R {
        fn header() -> &'static [&'static str] {
            &["x", "n"]
        }
        fn cells(&self) -> Vec<Cell> {
            vec![self.0.into(), self.1.into()]
        }
    }

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 123456.789, f64::MIN_POSITIVE] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
    }

    #[test]
    fn csv_has_header() {
        let s = render_csv(&[R(0.5, 3)]).unwrap();
        assert_eq!(s, "x,n\n5.0000000000000000e-1,3\n");
    }
}
