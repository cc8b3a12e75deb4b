//! Deterministic CSV and JSON emission.
//!
//! Floats are printed with 12 significant digits in scientific form
//! (`.` decimal separator, `e` exponent), so identical runs produce
//! byte-identical files. Every CSV starts with a `#` units comment and
//! a header row.

use std::fmt::Write as _;
use std::path::Path;

use raclab_core::Result;

pub fn fmt_float(x: f64) -> String {
    format!("{x:.11e}")
}

#[derive(Debug, Clone)]
pub enum Cell {
    U(u64),
    F(f64),
    B(bool),
}

pub struct Csv {
    buf: String,
}

impl Csv {
    pub fn new(units_comment: &str, header: &[&str]) -> Self {
        let mut buf = String::new();
        let _ = writeln!(buf, "# {units_comment}");
        let _ = writeln!(buf, "{}", header.join(","));
        Self { buf }
    }

    pub fn row(&mut self, cells: &[Cell]) {
        let line: Vec<String> = cells
            .iter()
            .map(|c| match c {
                Cell::U(v) => v.to_string(),
                Cell::F(v) => fmt_float(*v),
                Cell::B(v) => u8::from(*v).to_string(),
            })
            .collect();
        let _ = writeln!(self.buf, "{}", line.join(","));
    }

    pub fn into_string(self) -> String {
        self.buf
    }

    pub fn write(self, path: &Path) -> Result<()> {
        std::fs::write(path, self.buf)?;
        Ok(())
    }
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}
