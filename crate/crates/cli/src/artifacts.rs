//! CSV and JSON artifacts.
//!
//! Floats are written with Rust's shortest round-trip decimal formatting and
//! rows end in `\n`, so identical runs produce identical bytes.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use csv::{ReaderBuilder, Terminator, Writer, WriterBuilder};
use hmfg_core::kernels::VertexKernelGrid;
use hmfg_core::{MeanFieldEnsemble, PolicyEnsemble};
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::CliError;

pub fn num(x: f64) -> String {
    format!("{x}")
}

fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub struct CsvOut {
    path: std::path::PathBuf,
    writer: Writer<File>,
}

impl CsvOut {
    pub fn create(path: &Path, header: &[&str]) -> Result<Self, CliError> {
        let writer = WriterBuilder::new()
            .terminator(Terminator::Any(b'\n'))
            .from_path(path)
            .map_err(|e| csv_error(path, e))?;
        let mut out = CsvOut {
            path: path.to_path_buf(),
            writer,
        };
        out.row(header.iter().map(|s| s.to_string()))?;
        Ok(out)
    }

    pub fn row<I: IntoIterator<Item = String>>(&mut self, fields: I) -> Result<(), CliError> {
        let fields: Vec<String> = fields.into_iter().collect();
        self.writer
            .write_record(&fields)
            .map_err(|e| csv_error(&self.path, e))
    }

    pub fn finish(mut self) -> Result<(), CliError> {
        self.writer.flush().map_err(|e| CliError::io(&self.path, e))
    }
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    CliError::input(path, e.to_string())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T, pretty: bool) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(file);
    let written = if pretty {
        serde_json::to_writer_pretty(&mut w, value)
    } else {
        serde_json::to_writer(&mut w, value)
    };
    written.map_err(|e| CliError::input(path, e.to_string()))?;
    w.write_all(b"\n")
        .and_then(|_| w.flush())
        .map_err(|e| CliError::io(path, e))
}

pub fn write_mean_field(path: &Path, mf: &MeanFieldEnsemble) -> Result<(), CliError> {
    let mut out = CsvOut::create(path, &["alpha_index", "t", "state", "probability"])?;
    for i in 0..mf.resolution() {
        for t in 0..=mf.horizon() {
            for (x, &p) in mf.get(i, t).iter().enumerate() {
                out.row([i.to_string(), t.to_string(), x.to_string(), num(p)])?;
            }
        }
    }
    out.finish()
}

pub fn write_policy(path: &Path, policy: &PolicyEnsemble) -> Result<(), CliError> {
    let mut out = CsvOut::create(
        path,
        &["alpha_index", "t", "state", "action", "probability"],
    )?;
    for i in 0..policy.resolution() {
        for t in 0..policy.horizon() {
            for x in 0..policy.n_states() {
                for (u, &p) in policy.probs(i, t, x).iter().enumerate() {
                    out.row([
                        i.to_string(),
                        t.to_string(),
                        x.to_string(),
                        u.to_string(),
                        num(p),
                    ])?;
                }
            }
        }
    }
    out.finish()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsRow {
    pub iteration: usize,
    pub exploitability: f64,
    pub mf_distance_to_previous: Option<f64>,
}

pub fn write_diagnostics(path: &Path, rows: &[DiagnosticsRow]) -> Result<(), CliError> {
    let mut out = CsvOut::create(
        path,
        &["iteration", "exploitability", "mf_distance_to_previous"],
    )?;
    for r in rows {
        out.row([
            r.iteration.to_string(),
            num(r.exploitability),
            opt_num(r.mf_distance_to_previous),
        ])?;
    }
    out.finish()
}

pub fn write_convergence(
    path: &Path,
    rows: &[hmfg_core::simulate::DeltaMuRow],
) -> Result<(), CliError> {
    let mut out = CsvOut::create(path, &["N", "realization", "delta_mu"])?;
    for row in rows {
        for (r, &v) in row.values.iter().enumerate() {
            out.row([row.n.to_string(), r.to_string(), num(v)])?;
        }
    }
    out.finish()
}

/// Two-sided 95% interval `mean +- t_{0.975, r-1} * stderr`.
pub fn confidence_interval(mean: f64, stderr: f64, realizations: usize) -> (f64, f64) {
    let t = StudentsT::new(0.0, 1.0, (realizations - 1) as f64)
        .expect("at least two realizations")
        .inverse_cdf(0.975);
    (mean - t * stderr, mean + t * stderr)
}

pub fn write_convergence_summary(
    path: &Path,
    rows: &[hmfg_core::simulate::DeltaMuRow],
) -> Result<(), CliError> {
    let mut out = CsvOut::create(path, &["N", "mean", "stderr", "ci95_low", "ci95_high"])?;
    for row in rows {
        let (lo, hi) = confidence_interval(row.mean, row.stderr, row.values.len());
        out.row([
            row.n.to_string(),
            num(row.mean),
            num(row.stderr),
            num(lo),
            num(hi),
        ])?;
    }
    out.finish()
}

/// One row per flattened grid index: `i_0, .., i_{k-1}, value`.
pub fn write_grid(path: &Path, grid: &VertexKernelGrid) -> Result<(), CliError> {
    let header: Vec<String> = (0..grid.k())
        .map(|a| format!("i_{a}"))
        .chain(["value".into()])
        .collect();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut out = CsvOut::create(path, &header)?;
    for (off, &v) in grid.values().iter().enumerate() {
        out.row(
            grid.unravel(off)
                .iter()
                .map(|i| i.to_string())
                .chain([num(v)]),
        )?;
    }
    out.finish()
}

/// Reads numeric CSV rows, checking the header.
fn read_rows(path: &Path, header: &[&str]) -> Result<Vec<Vec<f64>>, CliError> {
    let mut reader = ReaderBuilder::new()
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let found = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    for name in header {
        if !found.iter().any(|h| h == *name) {
            return Err(CliError::input(path, format!("missing column `{name}`")));
        }
    }
    let columns: Vec<usize> = header
        .iter()
        .map(|n| found.iter().position(|h| h == *n).unwrap())
        .collect();
    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let row = columns
            .iter()
            .map(|&c| {
                record[c].parse::<f64>().map_err(|_| {
                    CliError::input(
                        path,
                        format!("row {}: `{}` is not a number", line + 1, &record[c]),
                    )
                })
            })
            .collect::<Result<Vec<f64>, _>>()?;
        rows.push(row);
    }
    Ok(rows)
}

fn index(path: &Path, value: f64, bound: usize, what: &str) -> Result<usize, CliError> {
    if value.fract() != 0.0 || value < 0.0 || value >= bound as f64 {
        return Err(CliError::input(
            path,
            format!("{what} {value} out of range 0..{bound}"),
        ));
    }
    Ok(value as usize)
}

/// Reads a `policy.csv` of the given shape; every entry must be present.
pub fn read_policy(
    path: &Path,
    m: usize,
    horizon: usize,
    n_states: usize,
    n_actions: usize,
) -> Result<PolicyEnsemble, CliError> {
    let rows = read_rows(
        path,
        &["alpha_index", "t", "state", "action", "probability"],
    )?;
    let mut data = vec![f64::NAN; m * horizon * n_states * n_actions];
    for row in rows {
        let i = index(path, row[0], m, "alpha_index")?;
        let t = index(path, row[1], horizon, "t")?;
        let x = index(path, row[2], n_states, "state")?;
        let u = index(path, row[3], n_actions, "action")?;
        data[((i * horizon + t) * n_states + x) * n_actions + u] = row[4];
    }
    if data.iter().any(|v| v.is_nan()) {
        return Err(CliError::input(path, "policy table is incomplete"));
    }
    PolicyEnsemble::from_fn(m, horizon, n_states, n_actions, |i, t, x| {
        let at = ((i * horizon + t) * n_states + x) * n_actions;
        data[at..at + n_actions].to_vec()
    })
    .map_err(|e| CliError::input(path, e.to_string()))
}

pub fn read_mean_field(
    path: &Path,
    m: usize,
    horizon: usize,
    n_states: usize,
) -> Result<MeanFieldEnsemble, CliError> {
    let rows = read_rows(path, &["alpha_index", "t", "state", "probability"])?;
    let mut data = vec![f64::NAN; m * (horizon + 1) * n_states];
    for row in rows {
        let i = index(path, row[0], m, "alpha_index")?;
        let t = index(path, row[1], horizon + 1, "t")?;
        let x = index(path, row[2], n_states, "state")?;
        data[(i * (horizon + 1) + t) * n_states + x] = row[3];
    }
    if data.iter().any(|v| v.is_nan()) {
        return Err(CliError::input(path, "mean field table is incomplete"));
    }
    MeanFieldEnsemble::from_fn(m, horizon, n_states, |i, t| {
        let at = (i * (horizon + 1) + t) * n_states;
        data[at..at + n_states].to_vec()
    })
    .map_err(|e| CliError::input(path, e.to_string()))
}

pub fn read_diagnostics(path: &Path) -> Result<Vec<(usize, f64)>, CliError> {
    read_rows(path, &["iteration", "exploitability"])?
        .into_iter()
        .map(|r| Ok((index(path, r[0], usize::MAX, "iteration")?, r[1])))
        .collect()
}
