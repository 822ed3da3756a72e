//! CSV and JSON writers. Floats are written with 17 significant digits so
//! files round-trip bit-exactly.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

use crate::config::RunConfig;

pub fn fmt_f(x: f64) -> String {
    format!("{x:.16e}")
}

/// A CSV table held in memory until written.
pub struct Csv {
    text: String,
}

pub enum Cell {
    F(f64),
    U(u64),
    B(bool),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::F(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::U(v as u64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::U(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::B(v)
    }
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Self { text: format!("{}\n", header.join(",")) }
    }

    pub fn row(&mut self, cells: Vec<Cell>) {
        let mut first = true;
        for c in cells {
            if !first {
                self.text.push(',');
            }
            first = false;
            match c {
                Cell::F(v) => self.text.push_str(&fmt_f(v)),
                Cell::U(v) => {
                    let _ = write!(self.text, "{v}");
                }
                Cell::B(v) => self.text.push_str(if v { "true" } else { "false" }),
            }
        }
        self.text.push('\n');
    }

    pub fn write(&self, dir: &Path, name: &str) -> Result<PathBuf> {
        let path = dir.join(name);
        std::fs::write(&path, &self.text).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}

#[derive(Serialize)]
struct Report<'a, R: Serialize> {
    version: &'a str,
    command: &'a str,
    seed: u64,
    config: &'a RunConfig,
    pass: Option<bool>,
    result: &'a R,
}

/// Writes `<dir>/<command>.json` with the toolkit version and full config echoed.
pub fn write_report<R: Serialize>(dir: &Path, command: &str, cfg: &RunConfig, pass: Option<bool>, result: &R) -> Result<PathBuf> {
    let report = Report { version: ipsd_core::VERSION, command, seed: cfg.seed(), config: cfg, pass, result };
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    let path = dir.join(format!("{command}.json"));
    std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

/// `0, step, 2 step, ...` up to and including `horizon` (within rounding).
pub fn grid(horizon: f64, step: f64) -> Vec<f64> {
    if !(step > 0.0) || !(horizon >= 0.0) {
        return vec![horizon.max(0.0)];
    }
    let n = (horizon / step + 1e-9).floor() as usize;
    let mut g: Vec<f64> = (0..=n).map(|i| i as f64 * step).collect();
    if (g[n] - horizon).abs() > 1e-9 * horizon.max(1.0) {
        g.push(horizon);
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, 1e-300, -2.5e17, f64::MIN_POSITIVE] {
            assert_eq!(fmt_f(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn grid_includes_horizon() {
        assert_eq!(grid(1.0, 0.25), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(grid(1.0, 0.3).last(), Some(&1.0));
        assert_eq!(grid(0.0, 0.1), vec![0.0]);
    }
}
