//! CSV emission. Every result file has the header
//! `M,N,eps_mean,eps_stderr,trials,seed` and a sidecar `<path>.meta` holding
//! the run file that produced it.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::monte_carlo::SweepResult;

pub const CSV_HEADER: &str = "M,N,eps_mean,eps_stderr,trials,seed";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResultRow {
    pub m: u64,
    pub n_photons: f64,
    pub eps_mean: f64,
    pub eps_stderr: f64,
    /// Zero for analytic rows.
    pub trials: u64,
    pub seed: u64,
}

impl SweepResult {
    pub fn result_rows(&self) -> Vec<ResultRow> {
        self.rows
            .iter()
            .map(|r| ResultRow {
                m: r.m,
                n_photons: r.n_photons,
                eps_mean: r.eps_mean(),
                eps_stderr: r.eps_stderr(),
                trials: r.count.trials,
                seed: r.seed,
            })
            .collect()
    }
}

/// CSV body for `rows`.
pub fn render_csv(rows: &[ResultRow]) -> String {
    let mut s = String::with_capacity(64 * (rows.len() + 1));
    s.push_str(CSV_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&format!(
            "{},{:.16e},{:.16e},{:.16e},{},{}\n",
            r.m, r.n_photons, r.eps_mean, r.eps_stderr, r.trials, r.seed
        ));
    }
    s
}

/// Reads a results CSV back.
pub fn parse_csv(text: &str) -> Result<Vec<ResultRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == CSV_HEADER => {}
        other => {
            return Err(Error::Config(format!(
                "expected header '{CSV_HEADER}', got '{}'",
                other.unwrap_or("")
            )))
        }
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, line)| {
            let bad = || Error::Config(format!("row {}: malformed '{line}'", i + 1));
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 6 {
                return Err(bad());
            }
            Ok(ResultRow {
                m: f[0].parse().map_err(|_| bad())?,
                n_photons: f[1].parse().map_err(|_| bad())?,
                eps_mean: f[2].parse().map_err(|_| bad())?,
                eps_stderr: f[3].parse().map_err(|_| bad())?,
                trials: f[4].parse().map_err(|_| bad())?,
                seed: f[5].parse().map_err(|_| bad())?,
            })
        })
        .collect()
}

pub fn meta_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".meta");
    PathBuf::from(name)
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    let mut file = fs::File::create(path).map_err(|e| io_err(path, e))?;
    file.write_all(contents.as_bytes())
        .map_err(|e| io_err(path, e))
}

/// Writes `rows` to `path` and `meta` to `path.meta`.
pub fn write_results(path: &Path, rows: &[ResultRow], meta: &str) -> Result<()> {
    write_file(path, &render_csv(rows))?;
    let mut sidecar = format!("# piecemeal {}\n", env!("CARGO_PKG_VERSION"));
    sidecar.push_str(meta);
    write_file(&meta_path(path), &sidecar)
}

pub fn emit_results(result: &SweepResult, path: &Path, meta: &str) -> Result<()> {
    write_results(path, &result.result_rows(), meta)
}
