//! CSV readers and writers.
//!
//! Every file has a header row and one row per record. Floats are written in
//! their shortest round-trip form so that re-reading a file reproduces the
//! in-memory values exactly.
//!
//! | file           | columns                                   |
//! |----------------|-------------------------------------------|
//! | rounds         | `t,p,q,q_it,q_nt,lambda,eps2`             |
//! | revisions      | `k,omega_hat,sigma_bar`                   |
//! | kesten         | `k,x`                                     |
//! | ensemble series| `path,` + revisions or kesten columns     |
//! | acf            | `lag,acf`                                 |
//! | cdf            | `level,survival`                          |
//! | summary        | `metric,value`                            |

use std::fs::{self, File};
use std::io::Write;
use std::path::Path;

use kyle_core::engine::{RevisionSeries, RoundSeries};
use kyle_core::stats::AcfReport;

use crate::config::KeyValues;
use crate::error::{Result, SimError};

pub const ROUND_COLUMNS: [&str; 7] = ["t", "p", "q", "q_it", "q_nt", "lambda", "eps2"];
pub const REVISION_COLUMNS: [&str; 3] = ["k", "omega_hat", "sigma_bar"];
pub const KESTEN_COLUMNS: [&str; 2] = ["k", "x"];

fn writer(path: &Path) -> Result<csv::Writer<File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| SimError::io(dir, e))?;
    }
    csv::Writer::from_path(path).map_err(|e| SimError::csv(path, e))
}

fn finish(mut w: csv::Writer<File>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| SimError::io(path, e))
}

/// Writes rows produced by `row(i)` for `i in 0..n` under `header`.
fn write_table<F>(path: &Path, header: &[&str], n: usize, mut row: F) -> Result<()>
where
    F: FnMut(usize, &mut Vec<String>),
{
    let mut w = writer(path)?;
    w.write_record(header).map_err(|e| SimError::csv(path, e))?;
    let mut buf = Vec::with_capacity(header.len());
    for i in 0..n {
        buf.clear();
        row(i, &mut buf);
        w.write_record(&buf).map_err(|e| SimError::csv(path, e))?;
    }
    finish(w, path)
}

pub fn write_rounds(path: &Path, rounds: &RoundSeries) -> Result<()> {
    write_table(path, &ROUND_COLUMNS, rounds.len(), |t, row| {
        row.push(t.to_string());
        for col in [
            &rounds.price,
            &rounds.excess_demand,
            &rounds.informed_demand,
            &rounds.noise_demand,
            &rounds.impact,
            &rounds.noise_variance,
        ] {
            row.push(col[t].to_string());
        }
    })
}

/// Revision series; `k` counts from 1.
pub fn write_revisions(path: &Path, revisions: &RevisionSeries) -> Result<()> {
    write_table(path, &REVISION_COLUMNS, revisions.sigma_bar.len(), |k, row| {
        row.push((k + 1).to_string());
        row.push(revisions.omega_hat[k].to_string());
        row.push(revisions.sigma_bar[k].to_string());
    })
}

/// Kesten path; `k` counts from 1.
pub fn write_kesten(path: &Path, x: &[f64]) -> Result<()> {
    write_table(path, &KESTEN_COLUMNS, x.len(), |k, row| {
        row.push((k + 1).to_string());
        row.push(x[k].to_string());
    })
}

/// Revision series of several ensemble members, prefixed by the member index.
pub fn write_ensemble_revisions(path: &Path, members: &[&RevisionSeries]) -> Result<()> {
    let rows: Vec<(usize, usize)> = members
        .iter()
        .enumerate()
        .flat_map(|(i, m)| (0..m.sigma_bar.len()).map(move |k| (i, k)))
        .collect();
    write_table(path, &["path", "k", "omega_hat", "sigma_bar"], rows.len(), |j, row| {
        let (i, k) = rows[j];
        row.push(i.to_string());
        row.push((k + 1).to_string());
        row.push(members[i].omega_hat[k].to_string());
        row.push(members[i].sigma_bar[k].to_string());
    })
}

/// Kesten paths of several ensemble members, prefixed by the member index.
pub fn write_ensemble_kesten(path: &Path, members: &[&[f64]]) -> Result<()> {
    let rows: Vec<(usize, usize)> = members
        .iter()
        .enumerate()
        .flat_map(|(i, m)| (0..m.len()).map(move |k| (i, k)))
        .collect();
    write_table(path, &["path", "k", "x"], rows.len(), |j, row| {
        let (i, k) = rows[j];
        row.push(i.to_string());
        row.push((k + 1).to_string());
        row.push(members[i][k].to_string());
    })
}

pub fn write_acf(path: &Path, acf: &AcfReport) -> Result<()> {
    write_table(path, &["lag", "acf"], acf.lags.len(), |i, row| {
        row.push(acf.lags[i].to_string());
        row.push(acf.values[i].to_string());
    })
}

pub fn write_cdf(path: &Path, levels: &[f64], survival: &[f64]) -> Result<()> {
    write_table(path, &["level", "survival"], levels.len(), |i, row| {
        row.push(levels[i].to_string());
        row.push(survival[i].to_string());
    })
}

/// Writes string rows under an arbitrary header.
pub fn write_rows(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    write_table(path, &header, rows.len(), |i, row| row.extend(rows[i].iter().cloned()))
}

pub fn write_summary(path: &Path, report: &KeyValues) -> Result<()> {
    write_table(path, &["metric", "value"], report.0.len(), |i, row| {
        row.push(report.0[i].0.clone());
        row.push(report.0[i].1.clone());
    })
}

/// Writes a plain-text file, creating parent directories.
pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| SimError::io(dir, e))?;
    }
    let mut f = File::create(path).map_err(|e| SimError::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| SimError::io(path, e))
}

/// A CSV file held as named numeric columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn read(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path).map_err(|e| SimError::csv(path, e))?;
        let header: Vec<String> = r
            .headers()
            .map_err(|e| SimError::csv(path, e))?
            .iter()
            .map(str::to_string)
            .collect();
        let mut rows = Vec::new();
        for (line, rec) in r.records().enumerate() {
            let rec = rec.map_err(|e| SimError::csv(path, e))?;
            let row = rec
                .iter()
                .map(|f| {
                    f.parse::<f64>().map_err(|_| {
                        SimError::config(format!("{}: row {}: {f:?} is not a number", path.display(), line + 2))
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        Ok(Table { header, rows })
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    /// Column values split by the `path` column when present, in order of
    /// first appearance.
    pub fn column_by_path(&self, name: &str) -> Option<Vec<Vec<f64>>> {
        let values = self.column(name)?;
        let Some(paths) = self.column("path") else {
            return Some(vec![values]);
        };
        let mut out: Vec<(f64, Vec<f64>)> = Vec::new();
        for (p, v) in paths.into_iter().zip(values) {
            match out.iter_mut().find(|(id, _)| *id == p) {
                Some((_, series)) => series.push(v),
                None => out.push((p, vec![v])),
            }
        }
        Some(out.into_iter().map(|(_, s)| s).collect())
    }
}
