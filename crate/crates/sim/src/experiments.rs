//! Declarative ensemble experiments.
//!
//! A spec is a flat `key = value` file:
//!
//! ```text
//! name = fig3_top
//! kind = simulation            # or kesten
//! n_paths = 20
//! outputs = series, summary    # any of series, summary, acf, cdf, traces
//! budget_secs = 60
//! grid.tau_rev = 100, 400, 800
//! revisions = 210              # every other key sets the base configuration
//! ```
//!
//! The grid expands to the cartesian product of its value lists, first key
//! outermost. Each cell gets a seed derived from the experiment name, the
//! cell index and the base seed, so cells are independent and reruns are
//! identical. Output layout under `<out>/<name>/`:
//!
//! | file                       | content                                         |
//! |----------------------------|-------------------------------------------------|
//! | `cell-NNN/series.csv`      | per-path revision (`path,k,omega_hat,sigma_bar`) or Kesten (`path,k,x`) series |
//! | `cell-NNN/summary.csv`     | `metric,value` report of the cell               |
//! | `cell-NNN/acf.csv`         | `lag,acf` of the excess variance                |
//! | `cell-NNN/cdf.csv`         | `level,survival` of `σ/⟨σ⟩`                      |
//! | `cell-NNN/price_cdf.csv`   | `level,survival` of `\|p\|/⟨\|p\|⟩`, path 0       |
//! | `cell-NNN/rounds.csv`      | round-level traces of path 0                    |
//! | `summary.csv`              | one row per cell: grid values, status, headline numbers |
//! | `manifest.json`            | spec, cells, seeds, config hashes, statuses, runtimes |

use std::path::{Path, PathBuf};
use std::time::Instant;

use kyle_core::agents::NoiseMode;
use kyle_core::engine::{SimulationConfig, DEFAULT_SEED_STRIDE};
use kyle_core::kesten::{
    mf_excess_variance, mf_excess_variance_cost_averse, mf_excess_variance_risk_averse, KestenConfig, KestenVariant,
};
use kyle_core::stats::{survival_curve, HILL_DEFAULT_FRACTION};
use rayon::prelude::*;
use rayon::ThreadPool;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::analysis::{analyze, Analysis, AnalysisOptions};
use crate::config::{parse_f64, parse_u64, parse_usize, Configurable, KestenJob, KeyValues, SimJob};
use crate::ensemble::{par_kesten_paths, par_simulate_paths};
use crate::error::{Result, SimError};
use crate::io;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Output {
    Series,
    Summary,
    Acf,
    Cdf,
    Traces,
}

impl Output {
    fn name(self) -> &'static str {
        match self {
            Output::Series => "series",
            Output::Summary => "summary",
            Output::Acf => "acf",
            Output::Cdf => "cdf",
            Output::Traces => "traces",
        }
    }

    fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "series" => Output::Series,
            "summary" => Output::Summary,
            "acf" => Output::Acf,
            "cdf" => Output::Cdf,
            "traces" => Output::Traces,
            _ => return Err(SimError::config(format!("unknown output {s:?}"))),
        })
    }
}

/// Base configuration of every cell.
#[derive(Debug, Clone, PartialEq)]
pub enum BaseConfig {
    Simulation(SimJob),
    Kesten(KestenJob),
}

impl BaseConfig {
    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match self {
            BaseConfig::Simulation(j) => j.set(key, value),
            BaseConfig::Kesten(j) => j.set(key, value),
        }
    }

    fn entries(&self) -> KeyValues {
        match self {
            BaseConfig::Simulation(j) => j.entries(),
            BaseConfig::Kesten(j) => j.entries(),
        }
    }

    fn seed(&self) -> u64 {
        match self {
            BaseConfig::Simulation(j) => j.config.seed,
            BaseConfig::Kesten(j) => j.seed,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            BaseConfig::Simulation(_) => "simulation",
            BaseConfig::Kesten(_) => "kesten",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub name: String,
    pub base: BaseConfig,
    /// Grid keys with their values, in expansion order.
    pub grid: Vec<(String, Vec<String>)>,
    pub n_paths: usize,
    pub outputs: Vec<Output>,
    pub analysis: AnalysisOptions,
    pub seed_stride: u64,
    /// Declared wall-clock budget; exceeding it is reported, not fatal.
    pub budget_secs: f64,
    /// Free-text note on how the preset is reduced from full scale.
    pub scaling: String,
}

impl ExperimentSpec {
    pub fn new(name: &str, base: BaseConfig) -> Self {
        ExperimentSpec {
            name: name.to_string(),
            base,
            grid: Vec::new(),
            n_paths: 1,
            outputs: vec![Output::Series, Output::Summary],
            analysis: AnalysisOptions::default(),
            seed_stride: DEFAULT_SEED_STRIDE,
            budget_secs: f64::INFINITY,
            scaling: String::new(),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let kv = KeyValues::parse(text)?;
        let get = |k: &str| kv.0.iter().find(|(key, _)| key == k).map(|(_, v)| v.as_str());
        let name = get("name").ok_or_else(|| SimError::config("experiment spec needs a name"))?;
        if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
            return Err(SimError::config(format!(
                "experiment name {name:?} must be [A-Za-z0-9_-]+"
            )));
        }
        let base = match get("kind").unwrap_or("simulation") {
            "simulation" => BaseConfig::Simulation(SimJob::default()),
            "kesten" => BaseConfig::Kesten(KestenJob::default()),
            other => {
                return Err(SimError::config(format!(
                    "kind: expected simulation or kesten, got {other:?}"
                )))
            }
        };
        let mut spec = ExperimentSpec::new(name, base);
        for (k, v) in &kv.0 {
            if k != "name" && k != "kind" {
                spec.set_base(k, v)?;
            }
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::io(path, e))?;
        Self::parse(&text)
    }

    /// Sets a spec key, a `grid.<key>` list or a base configuration key.
    pub fn set_base(&mut self, k: &str, v: &str) -> Result<()> {
        match k {
            "name" | "kind" => return Err(SimError::config(format!("{k} cannot be overridden"))),
            "n_paths" => self.n_paths = parse_usize(k, v)?,
            "outputs" => self.outputs = split_list(v).iter().map(|s| Output::parse(s)).collect::<Result<_>>()?,
            "acf_max_lag" => self.analysis.acf_max_lag = parse_usize(k, v)?,
            "cdf_points" => self.analysis.cdf_points = parse_usize(k, v)?,
            "seed_stride" => self.seed_stride = parse_u64(k, v)?,
            "budget_secs" => self.budget_secs = parse_f64(k, v)?,
            "scaling" => self.scaling = v.to_string(),
            _ => match k.strip_prefix("grid.") {
                Some(key) => {
                    let values = split_list(v);
                    if values.is_empty() {
                        return Err(SimError::config(format!("{k}: empty value list")));
                    }
                    match self.grid.iter_mut().find(|(g, _)| g == key) {
                        Some(entry) => entry.1 = values,
                        None => self.grid.push((key.to_string(), values)),
                    }
                }
                None => {
                    self.base.set(k, v)?;
                    // A fixed value replaces a grid axis over the same key.
                    self.grid.retain(|(g, _)| g != k);
                }
            },
        }
        Ok(())
    }

    /// The spec as `key = value` lines, with the base configuration resolved
    /// at its own values (derived keys such as `timescale_ratio` appear as
    /// the fields they set).
    pub fn render(&self) -> String {
        let mut kv = vec![
            ("name".to_string(), self.name.clone()),
            ("kind".to_string(), self.base.kind().to_string()),
            ("n_paths".to_string(), self.n_paths.to_string()),
            (
                "outputs".to_string(),
                self.outputs.iter().map(|o| o.name()).collect::<Vec<_>>().join(", "),
            ),
            ("acf_max_lag".to_string(), self.analysis.acf_max_lag.to_string()),
            ("cdf_points".to_string(), self.analysis.cdf_points.to_string()),
            ("seed_stride".to_string(), self.seed_stride.to_string()),
            ("budget_secs".to_string(), self.budget_secs.to_string()),
        ];
        if !self.scaling.is_empty() {
            kv.push(("scaling".to_string(), self.scaling.clone()));
        }
        kv.extend(self.base.entries().0);
        kv.extend(self.grid.iter().map(|(k, v)| (format!("grid.{k}"), v.join(", "))));
        KeyValues(kv).render()
    }

    /// Checks the path count and that every grid value is accepted by the
    /// base configuration.
    pub fn validate(&self) -> Result<()> {
        if self.n_paths == 0 {
            return Err(SimError::config("n_paths must be at least 1"));
        }
        for (key, values) in &self.grid {
            for v in values {
                self.base.clone().set(key, v)?;
            }
        }
        Ok(())
    }

    /// Grid assignments of every cell; one empty assignment for an empty grid.
    pub fn cells(&self) -> Vec<Vec<(String, String)>> {
        let mut cells: Vec<Vec<(String, String)>> = vec![Vec::new()];
        for (key, values) in &self.grid {
            cells = cells
                .into_iter()
                .flat_map(|cell| {
                    values.iter().map(move |v| {
                        let mut c = cell.clone();
                        c.push((key.clone(), v.clone()));
                        c
                    })
                })
                .collect();
        }
        cells
    }

    pub fn wants(&self, o: Output) -> bool {
        self.outputs.contains(&o)
    }
}

fn split_list(v: &str) -> Vec<String> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

/// First eight bytes of a SHA-256 digest of the experiment name, cell index
/// and base seed.
pub fn cell_seed(name: &str, index: usize, base_seed: u64) -> u64 {
    let digest = Sha256::digest(format!("{name}/{index}/{base_seed}").as_bytes());
    u64::from_le_bytes(digest[..8].try_into().expect("digest is 32 bytes"))
}

fn hex_digest(text: &str) -> String {
    Sha256::digest(text.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum CellStatus {
    Ok,
    /// More than half of the paths diverged.
    Diverged,
    Failed(String),
}

impl CellStatus {
    pub fn label(&self) -> &'static str {
        match self {
            CellStatus::Ok => "ok",
            CellStatus::Diverged => "diverged",
            CellStatus::Failed(_) => "failed",
        }
    }
}

#[derive(Debug, Clone)]
pub struct CellRecord {
    pub index: usize,
    pub id: String,
    pub params: Vec<(String, String)>,
    pub seed: u64,
    /// SHA-256 of the resolved configuration rendered as `key = value` lines.
    pub config_hash: String,
    pub status: CellStatus,
    pub runtime_secs: f64,
    pub diverged_paths: usize,
    pub files: Vec<String>,
    /// Mean-field excess variance, when a closed form applies and is stable.
    pub mf_excess_variance: Option<f64>,
    pub analysis: Option<Analysis>,
    pub report: KeyValues,
}

#[derive(Debug, Clone)]
pub struct Manifest {
    pub name: String,
    pub kind: &'static str,
    pub dir: PathBuf,
    pub n_paths: usize,
    pub cells: Vec<CellRecord>,
    pub runtime_secs: f64,
    pub budget_secs: f64,
}

impl Manifest {
    pub fn diverged_cells(&self) -> usize {
        self.cells.iter().filter(|c| c.status == CellStatus::Diverged).count()
    }

    /// More than half of the cells diverged.
    pub fn divergence_dominated(&self) -> bool {
        2 * self.diverged_cells() > self.cells.len()
    }

    pub fn within_budget(&self) -> bool {
        self.runtime_secs <= self.budget_secs
    }

    pub fn to_json(&self, spec: &ExperimentSpec) -> Value {
        let kv_obj = |kv: &[(String, String)]| {
            Value::Object(kv.iter().map(|(k, v)| (k.clone(), Value::String(v.clone()))).collect())
        };
        let cells: Vec<Value> = self
            .cells
            .iter()
            .map(|c| {
                json!({
                    "index": c.index,
                    "id": c.id,
                    "params": kv_obj(&c.params),
                    "seed": c.seed.to_string(),
                    "config_hash": c.config_hash,
                    "status": c.status.label(),
                    "error": match &c.status { CellStatus::Failed(m) => Value::String(m.clone()), _ => Value::Null },
                    "runtime_secs": c.runtime_secs,
                    "diverged_paths": c.diverged_paths,
                    "files": c.files,
                    "summary": kv_obj(&c.report.0),
                })
            })
            .collect();
        json!({
            "name": self.name,
            "kind": self.kind,
            "n_paths": self.n_paths,
            "seed_stride": spec.seed_stride.to_string(),
            "outputs": spec.outputs.iter().map(|o| o.name()).collect::<Vec<_>>(),
            "grid": spec.grid.iter().map(|(k, v)| json!({"key": k, "values": v})).collect::<Vec<_>>(),
            "base_config": kv_obj(&spec.base.entries().0),
            "scaling": spec.scaling,
            "budget_secs": if spec.budget_secs.is_finite() { json!(spec.budget_secs) } else { Value::Null },
            "runtime_secs": self.runtime_secs,
            "within_budget": self.within_budget(),
            "diverged_cells": self.diverged_cells(),
            "cells": cells,
        })
    }
}

/// Runs every cell of `spec` on `pool` and writes the outputs under
/// `out/<name>/`. Cell failures are recorded, not returned.
pub fn run_experiment(spec: &ExperimentSpec, out: &Path, pool: &ThreadPool) -> Result<Manifest> {
    spec.validate()?;
    let dir = out.join(&spec.name);
    std::fs::create_dir_all(&dir).map_err(|e| SimError::io(&dir, e))?;
    let start = Instant::now();
    let cells = spec.cells();
    let records: Vec<CellRecord> = pool.install(|| {
        cells
            .par_iter()
            .enumerate()
            .map(|(i, params)| run_cell(spec, &dir, pool, i, params))
            .collect()
    });
    let manifest = Manifest {
        name: spec.name.clone(),
        kind: spec.base.kind(),
        dir: dir.clone(),
        n_paths: spec.n_paths,
        cells: records,
        runtime_secs: start.elapsed().as_secs_f64(),
        budget_secs: spec.budget_secs,
    };
    write_overview(spec, &manifest, &dir.join("summary.csv"))?;
    let json = serde_json::to_string_pretty(&manifest.to_json(spec)).expect("manifest serializes");
    io::write_text(&dir.join("manifest.json"), &(json + "\n"))?;
    Ok(manifest)
}

/// Headline columns of the experiment-level summary.
const OVERVIEW_METRICS: [&str; 4] = [
    "mean_excess_variance",
    "se_excess_variance",
    "mean_excess_volatility",
    "hill_mu_0.01",
];

fn write_overview(spec: &ExperimentSpec, m: &Manifest, path: &Path) -> Result<()> {
    let mut header: Vec<String> = vec!["cell".into()];
    header.extend(spec.grid.iter().map(|(k, _)| k.clone()));
    header.extend(["status", "diverged_paths", "mf_excess_variance"].map(String::from));
    header.extend(OVERVIEW_METRICS.map(String::from));
    let rows: Vec<Vec<String>> = m
        .cells
        .iter()
        .map(|c| {
            let mut row = vec![c.index.to_string()];
            row.extend(c.params.iter().map(|(_, v)| v.clone()));
            row.push(c.status.label().to_string());
            row.push(c.diverged_paths.to_string());
            row.push(c.mf_excess_variance.map_or_else(|| "nan".into(), |v| v.to_string()));
            for metric in OVERVIEW_METRICS {
                let v = c.report.0.iter().find(|(k, _)| k == metric).map(|(_, v)| v.clone());
                row.push(v.unwrap_or_else(|| "nan".into()));
            }
            row
        })
        .collect();
    io::write_rows(path, &header, &rows)
}

fn run_cell(
    spec: &ExperimentSpec,
    dir: &Path,
    pool: &ThreadPool,
    index: usize,
    params: &[(String, String)],
) -> CellRecord {
    let start = Instant::now();
    let id = format!("cell-{index:03}");
    let seed = cell_seed(&spec.name, index, spec.base.seed());
    let mut record = CellRecord {
        index,
        id: id.clone(),
        params: params.to_vec(),
        seed,
        config_hash: String::new(),
        status: CellStatus::Ok,
        runtime_secs: 0.0,
        diverged_paths: 0,
        files: Vec::new(),
        mf_excess_variance: None,
        analysis: None,
        report: KeyValues::default(),
    };
    let mut base = spec.base.clone();
    let result = (|| {
        base.set("seed", &seed.to_string())?;
        for (k, v) in params {
            base.set(k, v)?;
        }
        record.config_hash = hex_digest(&base.entries().render());
        let cell_dir = dir.join(&id);
        match &base {
            BaseConfig::Simulation(job) => simulation_cell(spec, job, &cell_dir, pool, &mut record),
            BaseConfig::Kesten(job) => kesten_cell(spec, job, &cell_dir, pool, &mut record),
        }
    })();
    if let Err(e) = result {
        record.status = CellStatus::Failed(e.to_string());
    } else if 2 * record.diverged_paths > spec.n_paths {
        record.status = CellStatus::Diverged;
    }
    record.runtime_secs = start.elapsed().as_secs_f64();
    record
}

fn simulation_mf(c: &SimulationConfig) -> Option<f64> {
    let eps2 = c.conditions.noise_variance();
    let eps2_hat = c.beliefs0.noise_vol_belief.powi(2);
    let xi_hat = c.beliefs0.cost_aversion_belief;
    let xi = match c.noise_profile.mode {
        NoiseMode::Passive => 0.0,
        NoiseMode::CostAverse => c.noise_profile.tracking_error,
    };
    let mf = if c.beliefs0.sharpe_target > 0.0 {
        mf_excess_variance_risk_averse(eps2, eps2_hat, c.beliefs0.sharpe_target)
    } else if xi > 0.0 || xi_hat > 0.0 {
        mf_excess_variance_cost_averse(eps2, eps2_hat, xi, xi_hat)
    } else {
        mf_excess_variance(eps2, eps2_hat)
    };
    mf.ok()
}

fn kesten_mf(c: &KestenConfig) -> Option<f64> {
    match c.variant {
        KestenVariant::Baseline => mf_excess_variance(c.eps2, c.eps2_hat),
        KestenVariant::RiskAverse { sharpe } => mf_excess_variance_risk_averse(c.eps2, c.eps2_hat, sharpe),
        KestenVariant::CostAverse { xi, xi_hat } => mf_excess_variance_cost_averse(c.eps2, c.eps2_hat, xi, xi_hat),
    }
    .ok()
}

fn finish_cell(spec: &ExperimentSpec, cell_dir: &Path, record: &mut CellRecord, series: &[Vec<f64>]) -> Result<()> {
    let mut report = vec![
        ("n_paths".to_string(), spec.n_paths.to_string()),
        ("diverged_paths".to_string(), record.diverged_paths.to_string()),
        (
            "mf_excess_variance".to_string(),
            record
                .mf_excess_variance
                .map_or_else(|| "nan".into(), |v| v.to_string()),
        ),
    ];
    let analysis = if series.iter().any(|s| !s.is_empty()) {
        Some(analyze(series, &spec.analysis)?)
    } else {
        None
    };
    if let Some(a) = &analysis {
        report.extend(a.report().0);
        if spec.wants(Output::Acf) {
            if let Some(acf) = &a.acf {
                io::write_acf(&cell_dir.join("acf.csv"), acf)?;
                record.files.push("acf.csv".into());
            }
        }
        if spec.wants(Output::Cdf) {
            if let Some((levels, probs)) = &a.cdf {
                io::write_cdf(&cell_dir.join("cdf.csv"), levels, probs)?;
                record.files.push("cdf.csv".into());
            }
        }
    }
    record.report = KeyValues(report);
    if spec.wants(Output::Summary) {
        io::write_summary(&cell_dir.join("summary.csv"), &record.report)?;
        record.files.push("summary.csv".into());
    }
    record.analysis = analysis;
    record.files.sort();
    Ok(())
}

fn simulation_cell(
    spec: &ExperimentSpec,
    job: &SimJob,
    cell_dir: &Path,
    pool: &ThreadPool,
    record: &mut CellRecord,
) -> Result<()> {
    let cfg = job.resolve()?;
    record.mf_excess_variance = simulation_mf(&cfg);
    let keep_rounds = spec.wants(Output::Traces) || spec.wants(Output::Cdf);
    let paths = par_simulate_paths(pool, &cfg, spec.n_paths, spec.seed_stride, keep_rounds)?;
    record.diverged_paths = paths.iter().filter(|p| p.diverged).count();
    std::fs::create_dir_all(cell_dir).map_err(|e| SimError::io(cell_dir, e))?;

    if spec.wants(Output::Series) {
        let revs: Vec<_> = paths.iter().map(|p| &p.revisions).collect();
        io::write_ensemble_revisions(&cell_dir.join("series.csv"), &revs)?;
        record.files.push("series.csv".into());
    }
    if spec.wants(Output::Traces) && !paths[0].rounds.is_empty() {
        io::write_rounds(&cell_dir.join("rounds.csv"), &paths[0].rounds)?;
        record.files.push("rounds.csv".into());
    }
    if spec.wants(Output::Cdf) {
        let skip = cfg.burn_in * cfg.tau_rev;
        let abs_p: Vec<f64> = paths[0].rounds.price.iter().skip(skip).map(|p| p.abs()).collect();
        if let Ok((levels, probs)) = survival_curve(&abs_p, spec.analysis.cdf_points) {
            io::write_cdf(&cell_dir.join("price_cdf.csv"), &levels, &probs)?;
            record.files.push("price_cdf.csv".into());
        }
    }
    let omega = cfg.conditions.fundamental_vol;
    let series: Vec<Vec<f64>> = paths
        .iter()
        .filter(|p| !p.diverged)
        .map(|p| p.excess_variance(omega, cfg.burn_in))
        .collect();
    finish_cell(spec, cell_dir, record, &series)
}

fn kesten_cell(
    spec: &ExperimentSpec,
    job: &KestenJob,
    cell_dir: &Path,
    pool: &ThreadPool,
    record: &mut CellRecord,
) -> Result<()> {
    let cfg = job.resolve()?;
    record.mf_excess_variance = kesten_mf(&cfg);
    let paths = par_kesten_paths(pool, &cfg, spec.n_paths, spec.seed_stride)?;
    record.diverged_paths = paths.iter().filter(|p| p.diverged).count();
    std::fs::create_dir_all(cell_dir).map_err(|e| SimError::io(cell_dir, e))?;
    if spec.wants(Output::Series) {
        let xs: Vec<&[f64]> = paths.iter().map(|p| p.x.as_slice()).collect();
        io::write_ensemble_kesten(&cell_dir.join("series.csv"), &xs)?;
        record.files.push("series.csv".into());
    }
    let series: Vec<Vec<f64>> = paths
        .iter()
        .filter(|p| !p.diverged)
        .map(|p| p.x.iter().skip(job.burn_in).copied().collect())
        .collect();
    finish_cell(spec, cell_dir, record, &series)
}

impl CellRecord {
    /// A report value parsed as a number.
    pub fn metric(&self, key: &str) -> Option<f64> {
        self.report
            .0
            .iter()
            .find(|(k, _)| k == key)
            .and_then(|(_, v)| v.parse().ok())
    }

    pub fn mean_excess_variance(&self) -> Option<f64> {
        self.analysis.as_ref().map(|a| a.excess.mean_excess_variance)
    }

    pub fn hill(&self) -> Option<f64> {
        self.analysis
            .as_ref()
            .and_then(|a| a.hill(HILL_DEFAULT_FRACTION))
            .map(|t| t.mu_hill)
    }
}

const HEATMAP_R: &str = "0, 0.1, 0.3, 1, 3, 10, 30, 100";

/// Names of the built-in presets.
pub const BUILTINS: [&str; 9] = [
    "fig3_top",
    "fig3_bottom",
    "fig4_heatmap",
    "fig5_pdf_acf",
    "fig6_cdf",
    "fig6_cdf_kesten",
    "fig7_heatmap",
    "fig8_liquidity",
    "flash_crash",
];

fn builtin_text(name: &str) -> Option<String> {
    let text = match name {
        "fig3_top" => "
            name = fig3_top
            kind = simulation
            n_paths = 20
            revisions = 210
            burn_in = 10
            grid.tau_rev = 100, 400, 800
            outputs = series, summary
            budget_secs = 60
            scaling = 20 paths x 200 revisions after burn-in per cell
        "
        .to_string(),
        "fig3_bottom" => "
            name = fig3_bottom
            kind = simulation
            n_paths = 20
            revisions = 210
            burn_in = 10
            noise_var_belief = 0.7
            grid.tau_rev = 100, 400, 800
            outputs = series, summary
            budget_secs = 60
            scaling = 20 paths x 200 revisions after burn-in per cell
        "
        .to_string(),
        "fig4_heatmap" => format!(
            "
            name = fig4_heatmap
            kind = kesten
            n_paths = 4
            revisions = 100000
            burn_in = 1000
            deps2 = 0.1
            grid.r = {HEATMAP_R}
            grid.eps2_ratio = 1.0, 1.2, 1.4, 1.6, 1.7, 1.8, 1.85, 1.9
            outputs = summary
            budget_secs = 120
            scaling = 8x8 grid, 4 paths x 1e5 revisions per cell
        "
        ),
        "fig5_pdf_acf" => "
            name = fig5_pdf_acf
            kind = simulation
            n_paths = 4
            tau_rev = 1000
            revisions = 1010
            burn_in = 10
            noise_var_fluct = 0.2
            noise_var_belief = 0.6
            grid.timescale_ratio = 0, 0.1, 1, 10
            outputs = series, summary, acf
            acf_max_lag = 100
            budget_secs = 120
            scaling = 4 paths x 1000 revisions after burn-in per cell
        "
        .to_string(),
        "fig6_cdf" => "
            name = fig6_cdf
            kind = simulation
            n_paths = 4
            revisions = 2010
            burn_in = 10
            noise_var_fluct = 0.1
            noise_var_belief = 0.52
            timescale_ratio = 1
            grid.tau_rev = 100, 400, 800
            outputs = series, summary, cdf
            budget_secs = 120
            scaling = 4 paths x 2000 revisions after burn-in per cell
        "
        .to_string(),
        "fig6_cdf_kesten" => "
            name = fig6_cdf_kesten
            kind = kesten
            n_paths = 1
            revisions = 1000000
            burn_in = 1000
            deps2 = 0.1
            eps2_hat = 0.52
            r = 1
            outputs = summary, cdf
            budget_secs = 120
            scaling = one path of 1e6 revisions
        "
        .to_string(),
        "fig7_heatmap" => format!(
            "
            name = fig7_heatmap
            kind = kesten
            variant = risk_averse
            sharpe = 0.1
            n_paths = 4
            revisions = 100000
            burn_in = 1000
            deps2 = 0.15
            grid.r = {HEATMAP_R}
            grid.eps2_ratio = 1.0, 1.2, 1.4, 1.5, 1.6, 1.7, 1.75, 1.8
            outputs = summary
            budget_secs = 120
            scaling = 8x8 grid, 4 paths x 1e5 revisions per cell
        "
        ),
        "fig8_liquidity" => "
            name = fig8_liquidity
            kind = simulation
            n_paths = 4
            tau_rev = 100
            revisions = 310
            burn_in = 10
            noise_var_fluct = 0.15
            noise_timescale = 0
            noise_var_belief = 0.52
            grid.matched_cost_aversion = 0, 0.8
            outputs = series, summary, traces
            budget_secs = 60
            scaling = 4 paths x 300 revisions after burn-in; traces from path 0
        "
        .to_string(),
        "flash_crash" => "
            name = flash_crash
            kind = kesten
            variant = cost_averse
            xi = 0.5
            n_paths = 4
            revisions = 20000
            burn_in = 500
            deps2 = 0.1
            grid.xi_hat = 0.5, 0.6, 0.7, 0.8, 0.85, 0.9, 0.95
            outputs = series, summary
            budget_secs = 60
            scaling = 4 paths x 2e4 revisions per cell
        "
        .to_string(),
        _ => return None,
    };
    Some(text)
}

/// The built-in preset `name`.
pub fn builtin(name: &str) -> Result<ExperimentSpec> {
    let text = builtin_text(name).ok_or_else(|| {
        SimError::config(format!(
            "unknown experiment {name:?}; built-ins: {}",
            BUILTINS.join(", ")
        ))
    })?;
    ExperimentSpec::parse(&text)
}
