//! The `kyle` command line.
//!
//! Every subcommand reads defaults, then `--config FILE`, then parameter
//! overrides, then `--seed`. Overrides are written either as
//! `--set key=value` or directly as `--key value` / `--key=value` using the
//! configuration key names (`-` and `_` are interchangeable). Errors go to
//! stderr as one JSON object per line; the exit code is 0 on success, 1 on
//! errors and 2 when more than half of the runs diverged.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use kyle_core::agents::ImpactModel;
use kyle_core::engine::DEFAULT_SEED_STRIDE;
use kyle_core::kesten::{
    acf_timescale_iid, critical_belief, critical_belief_risk_averse, expected_price_variance, fixed_point_impact,
    garch_mapping, informed_ratio_mf, mf_excess_variance, mf_excess_variance_cost_averse,
    mf_excess_variance_risk_averse, mf_slow_timescale, relaxation_time_cost_averse, risk_averse_coefficient,
    tail_exponent, tail_exponent_iid,
};
use kyle_core::Error as ModelError;

use crate::analysis::{analyze, Analysis, AnalysisOptions};
use crate::config::{AnalyticsParams, Configurable, KestenJob, KeyValues, SimJob};
use crate::ensemble::{par_kesten_paths, par_simulate_paths, thread_pool};
use crate::error::{Result, SimError};
use crate::experiments::{builtin, run_experiment, ExperimentSpec, BUILTINS};
use crate::io::{self, Table};

#[derive(Debug, Parser)]
#[command(name = "kyle", version, about = "Adaptive-agent Kyle price formation simulator")]
struct Cli {
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the trading-round engine.
    Simulate(RunArgs),
    /// Run the coarse-time recursion.
    Kesten(RunArgs),
    /// Print closed-form quantities.
    Analytics(AnalyticsArgs),
    /// Statistics of an existing series CSV.
    Analyze(AnalyzeArgs),
    /// Run a built-in or custom experiment; `list` prints the built-ins.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// Flat key = value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Parameter override; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Echo the resolved configuration and exit.
    #[arg(long)]
    print_config: bool,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 1)]
    n_paths: usize,
    #[arg(long, default_value_t = 50)]
    acf_max_lag: usize,
    #[arg(long, default_value_t = 60)]
    cdf_points: usize,
}

#[derive(Debug, Args)]
struct AnalyticsArgs {
    #[command(flatten)]
    common: Common,
    /// Also write the report as `summary.csv` here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    /// CSV with a `sigma_bar` (revision series) or `x` (excess variance) column.
    input: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// True fundamental volatility used to normalize `sigma_bar`.
    #[arg(long, default_value_t = 1.0)]
    omega: f64,
    /// Leading records of each path to drop.
    #[arg(long, default_value_t = 0)]
    burn_in: usize,
    #[arg(long, default_value_t = 50)]
    acf_max_lag: usize,
    #[arg(long, default_value_t = 60)]
    cdf_points: usize,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    /// Built-in name or path to a spec file.
    name_or_spec: String,
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides the base seed from which cell seeds are derived.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    n_paths: Option<usize>,
}

/// Rewrites `--key value` and `--key=value` for known configuration keys into
/// `--set key=value`.
fn expand_overrides(args: Vec<OsString>) -> Vec<OsString> {
    const SUBCOMMANDS: [&str; 5] = ["simulate", "kesten", "analytics", "analyze", "experiment"];
    let Some(sub) = args
        .iter()
        .skip(1)
        .map(|a| a.to_string_lossy())
        .find(|a| SUBCOMMANDS.contains(&a.as_ref()))
    else {
        return args;
    };
    let keys: &[&str] = match sub.as_ref() {
        "simulate" => SimJob::KEYS,
        "kesten" => KestenJob::KEYS,
        "analytics" => AnalyticsParams::KEYS,
        "experiment" => &[],
        _ => return args,
    };
    // The experiment base keys depend on the spec kind; accept both sets.
    let all: Vec<&str> = if sub == "experiment" {
        SimJob::KEYS
            .iter()
            .chain(KestenJob::KEYS)
            .copied()
            .filter(|k| *k != "seed")
            .collect()
    } else {
        keys.iter().copied().filter(|k| *k != "seed").collect()
    };
    let mut out = Vec::with_capacity(args.len());
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy().into_owned();
        if let Some(flag) = s.strip_prefix("--") {
            let (name, inline) = match flag.split_once('=') {
                Some((n, v)) => (n.replace('-', "_"), Some(v.to_string())),
                None => (flag.replace('-', "_"), None),
            };
            if all.contains(&name.as_str()) {
                let value = inline.or_else(|| it.next().map(|v| v.to_string_lossy().into_owned()));
                out.push(OsString::from("--set"));
                out.push(OsString::from(format!("{name}={}", value.unwrap_or_default())));
                continue;
            }
        }
        out.push(a);
    }
    out
}

fn overrides(common: &Common) -> Result<KeyValues> {
    let mut kv = Vec::new();
    for s in &common.set {
        let (k, v) = s
            .split_once('=')
            .ok_or_else(|| SimError::config(format!("--set expects KEY=VALUE, got {s:?}")))?;
        kv.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(KeyValues(kv))
}

fn load<C: Configurable>(target: &mut C, common: &Common) -> Result<()> {
    if let Some(path) = &common.config {
        target.apply(&KeyValues::read(path)?)?;
    }
    target.apply(&overrides(common)?)
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let args = expand_overrides(args.into_iter().map(Into::into).collect());
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if !e.use_stderr() {
                print!("{e}");
                return 0;
            }
            report_error("usage", 1, &e.to_string());
            return 1;
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            report_error(e.kind(), e.exit_code(), &e.to_string());
            e.exit_code()
        }
    }
}

fn report_error(kind: &str, code: u8, message: &str) {
    let line = serde_json::json!({ "error": kind, "code": code, "message": message.trim() });
    eprintln!("{line}");
}

fn dispatch(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Simulate(a) => cmd_simulate(&a, cli.jobs),
        Command::Kesten(a) => cmd_kesten(&a, cli.jobs),
        Command::Analytics(a) => cmd_analytics(&a),
        Command::Analyze(a) => cmd_analyze(&a),
        Command::Experiment(a) => cmd_experiment(&a, cli.jobs),
    }
}

fn print_report(kv: &KeyValues) {
    print!("{}", kv.render());
}

fn divergence_check(diverged: usize, total: usize) -> Result<u8> {
    if 2 * diverged > total {
        Err(SimError::Diverged { diverged, total })
    } else {
        Ok(0)
    }
}

fn analysis_report(series: &[Vec<f64>], opts: &AnalysisOptions, out: &Path) -> Result<Option<Analysis>> {
    if series.iter().all(|s| s.is_empty()) {
        return Ok(None);
    }
    let a = analyze(series, opts)?;
    if let Some(acf) = &a.acf {
        io::write_acf(&out.join("acf.csv"), acf)?;
    }
    if let Some((levels, probs)) = &a.cdf {
        io::write_cdf(&out.join("cdf.csv"), levels, probs)?;
    }
    Ok(Some(a))
}

fn cmd_simulate(a: &RunArgs, jobs: Option<usize>) -> Result<u8> {
    let mut job = SimJob::default();
    load(&mut job, &a.common)?;
    if let Some(seed) = a.seed {
        job.config.seed = seed;
    }
    if a.common.print_config {
        print!("{}", job.entries().render());
        return Ok(0);
    }
    let cfg = job.resolve()?;
    if a.n_paths == 0 {
        return Err(SimError::config("--n-paths must be at least 1"));
    }
    let pool = thread_pool(jobs)?;
    let paths = par_simulate_paths(&pool, &cfg, a.n_paths, DEFAULT_SEED_STRIDE, cfg.record_rounds)?;
    let out = &a.out;
    if !paths[0].rounds.is_empty() {
        io::write_rounds(&out.join("rounds.csv"), &paths[0].rounds)?;
    }
    if a.n_paths == 1 {
        io::write_revisions(&out.join("revisions.csv"), &paths[0].revisions)?;
    } else {
        let revs: Vec<_> = paths.iter().map(|p| &p.revisions).collect();
        io::write_ensemble_revisions(&out.join("revisions.csv"), &revs)?;
    }
    let diverged = paths.iter().filter(|p| p.diverged).count();
    let omega = cfg.conditions.fundamental_vol;
    let series: Vec<Vec<f64>> = paths
        .iter()
        .filter(|p| !p.diverged)
        .map(|p| p.excess_variance(omega, cfg.burn_in))
        .collect();
    let opts = AnalysisOptions {
        acf_max_lag: a.acf_max_lag,
        cdf_points: a.cdf_points,
    };
    let mut report = vec![
        ("n_paths".to_string(), a.n_paths.to_string()),
        ("diverged_paths".to_string(), diverged.to_string()),
    ];
    let (informed, noise) = paths.iter().filter(|p| !p.diverged).fold((0.0, 0.0), |(i, n), p| {
        (i + p.diagnostics.informed_sq_sum, n + p.diagnostics.noise_sq_sum)
    });
    if informed > 0.0 {
        report.push(("noise_to_informed_ratio".to_string(), (noise / informed).to_string()));
    }
    if let Some(analysis) = analysis_report(&series, &opts, out)? {
        report.extend(analysis.report().0);
    }
    let report = KeyValues(report);
    io::write_summary(&out.join("summary.csv"), &report)?;
    print_report(&report);
    divergence_check(diverged, a.n_paths)
}

fn cmd_kesten(a: &RunArgs, jobs: Option<usize>) -> Result<u8> {
    let mut job = KestenJob::default();
    load(&mut job, &a.common)?;
    if let Some(seed) = a.seed {
        job.seed = seed;
    }
    if a.common.print_config {
        print!("{}", job.entries().render());
        return Ok(0);
    }
    let cfg = job.resolve()?;
    if a.n_paths == 0 {
        return Err(SimError::config("--n-paths must be at least 1"));
    }
    let pool = thread_pool(jobs)?;
    let paths = par_kesten_paths(&pool, &cfg, a.n_paths, DEFAULT_SEED_STRIDE)?;
    let out = &a.out;
    if a.n_paths == 1 {
        io::write_kesten(&out.join("kesten.csv"), &paths[0].x)?;
    } else {
        let xs: Vec<&[f64]> = paths.iter().map(|p| p.x.as_slice()).collect();
        io::write_ensemble_kesten(&out.join("kesten.csv"), &xs)?;
    }
    let diverged = paths.iter().filter(|p| p.diverged).count();
    let series: Vec<Vec<f64>> = paths
        .iter()
        .filter(|p| !p.diverged)
        .map(|p| p.x.iter().skip(job.burn_in).copied().collect())
        .collect();
    let opts = AnalysisOptions {
        acf_max_lag: a.acf_max_lag,
        cdf_points: a.cdf_points,
    };
    let mut report = vec![
        ("n_paths".to_string(), a.n_paths.to_string()),
        ("diverged_paths".to_string(), diverged.to_string()),
        (
            "clamp_events".to_string(),
            paths.iter().map(|p| p.clamp_events).sum::<u64>().to_string(),
        ),
    ];
    if let Some(analysis) = analysis_report(&series, &opts, out)? {
        report.extend(analysis.report().0);
    }
    let report = KeyValues(report);
    io::write_summary(&out.join("summary.csv"), &report)?;
    print_report(&report);
    divergence_check(diverged, a.n_paths)
}

fn value(r: kyle_core::Result<f64>) -> String {
    match r {
        Ok(v) => v.to_string(),
        Err(ModelError::Unstable(_)) => "unstable".to_string(),
        Err(ModelError::TailOutOfRange { max }) => format!(">{max}"),
        Err(_) => "nan".to_string(),
    }
}

/// The closed-form report for `p`.
pub fn analytics_report(p: &AnalyticsParams) -> KeyValues {
    let eps_hat = p.eps2_hat.sqrt();
    let fp = |model: ImpactModel| value(fixed_point_impact(p.omega_hat, eps_hat, &model));
    let coeff = risk_averse_coefficient(p.sharpe);
    let critical = critical_belief(p.eps2, p.deps2, p.r);
    let garch = garch_mapping(p.eps2, p.eps2_hat);
    let mu = tail_exponent_iid(p.eps2, p.deps2, p.eps2_hat).map(|t| t.mu);
    let mu_ra = tail_exponent(coeff, p.eps2, p.deps2, p.eps2_hat).map(|t| t.mu);
    let tau_acf = |mu: &kyle_core::Result<f64>| match mu {
        Ok(m) => value(acf_timescale_iid(*m, eps_hat, p.deps2.sqrt())),
        Err(_) => "nan".to_string(),
    };
    let entries: Vec<(&str, String)> = vec![
        ("lambda_fixed_point", fp(ImpactModel::RiskNeutral)),
        (
            "lambda_fixed_point_risk_averse",
            fp(ImpactModel::RiskAverse { sharpe: p.sharpe }),
        ),
        (
            "lambda_fixed_point_cost_averse",
            fp(ImpactModel::CostAverse { xi_hat: p.xi_hat }),
        ),
        (
            "expected_price_variance",
            expected_price_variance(p.omega_hat, 0.0).to_string(),
        ),
        (
            "expected_price_variance_risk_averse",
            expected_price_variance(p.omega_hat, p.sharpe).to_string(),
        ),
        ("mean_excess_variance", value(mf_excess_variance(p.eps2, p.eps2_hat))),
        (
            "mean_excess_variance_risk_averse",
            value(mf_excess_variance_risk_averse(p.eps2, p.eps2_hat, p.sharpe)),
        ),
        (
            "mean_excess_variance_cost_averse",
            value(mf_excess_variance_cost_averse(p.eps2, p.eps2_hat, p.xi, p.xi_hat)),
        ),
        ("informed_ratio", value(informed_ratio_mf(p.eps2, p.eps2_hat))),
        ("critical_belief", critical.to_string()),
        ("critical_belief_no_fluctuations", (0.5 * p.eps2).to_string()),
        (
            "critical_belief_risk_averse",
            critical_belief_risk_averse(p.eps2, p.sharpe).to_string(),
        ),
        ("stable", (p.eps2_hat > critical).to_string()),
        (
            "slow_timescale",
            value(mf_slow_timescale(p.eps2_hat, critical, p.tau_rev)),
        ),
        ("risk_averse_coefficient", coeff.to_string()),
        ("tail_exponent", value(mu.clone())),
        ("tail_exponent_risk_averse", value(mu_ra.clone())),
        ("acf_timescale", tau_acf(&mu)),
        ("acf_timescale_risk_averse", tau_acf(&mu_ra)),
        ("relaxation_time_cost_averse", value(relaxation_time_cost_averse(p.xi))),
        ("garch_alpha", garch.alpha.to_string()),
        ("garch_tau_acf", garch.tau_acf.to_string()),
        ("garch_stationary", garch.stationary.to_string()),
        ("garch_noise_correspondence", garch.noise_correspondence.to_string()),
    ];
    KeyValues(entries.into_iter().map(|(k, v)| (k.to_string(), v)).collect())
}

fn cmd_analytics(a: &AnalyticsArgs) -> Result<u8> {
    let mut params = AnalyticsParams::default();
    load(&mut params, &a.common)?;
    if a.common.print_config {
        print!("{}", params.entries().render());
        return Ok(0);
    }
    let report = analytics_report(&params);
    if let Some(out) = &a.out {
        io::write_summary(&out.join("summary.csv"), &report)?;
    }
    print_report(&report);
    Ok(0)
}

fn cmd_analyze(a: &AnalyzeArgs) -> Result<u8> {
    let table = Table::read(&a.input)?;
    let series: Vec<Vec<f64>> = if let Some(s) = table.column_by_path("sigma_bar") {
        if !(a.omega > 0.0) {
            return Err(SimError::config(format!("--omega must be positive, got {}", a.omega)));
        }
        s.into_iter()
            .map(|p| p.iter().skip(a.burn_in).map(|s| s * s / (a.omega * a.omega)).collect())
            .collect()
    } else if let Some(x) = table.column_by_path("x") {
        x.into_iter().map(|p| p.into_iter().skip(a.burn_in).collect()).collect()
    } else {
        return Err(SimError::config(format!(
            "{}: expected a sigma_bar or x column, found {}",
            a.input.display(),
            table.header.join(",")
        )));
    };
    let opts = AnalysisOptions {
        acf_max_lag: a.acf_max_lag,
        cdf_points: a.cdf_points,
    };
    let analysis = analysis_report(&series, &opts, &a.out)?
        .ok_or_else(|| SimError::config(format!("{}: no records after burn-in", a.input.display())))?;
    let report = analysis.report();
    io::write_summary(&a.out.join("summary.csv"), &report)?;
    print_report(&report);
    Ok(0)
}

fn cmd_experiment(a: &ExperimentArgs, jobs: Option<usize>) -> Result<u8> {
    if a.name_or_spec == "list" {
        for name in BUILTINS {
            println!("{name}");
        }
        return Ok(0);
    }
    let mut spec = if BUILTINS.contains(&a.name_or_spec.as_str()) {
        builtin(&a.name_or_spec)?
    } else {
        let path = Path::new(&a.name_or_spec);
        if !path.exists() {
            return Err(SimError::config(format!(
                "{:?} is neither a built-in experiment nor a spec file; built-ins: {}",
                a.name_or_spec,
                BUILTINS.join(", ")
            )));
        }
        ExperimentSpec::read(path)?
    };
    if let Some(path) = &a.common.config {
        for (k, v) in KeyValues::read(path)?.0 {
            spec.set_base(&k, &v)?;
        }
    }
    for (k, v) in overrides(&a.common)?.0 {
        spec.set_base(&k, &v)?;
    }
    if let Some(seed) = a.seed {
        spec.set_base("seed", &seed.to_string())?;
    }
    if let Some(n) = a.n_paths {
        spec.n_paths = n;
    }
    spec.validate()?;
    if a.common.print_config {
        print!("{}", spec.render());
        return Ok(0);
    }
    let pool = thread_pool(jobs)?;
    let manifest = run_experiment(&spec, &a.out, &pool)?;
    for c in &manifest.cells {
        let params: Vec<String> = c.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
        let mean = c
            .mean_excess_variance()
            .map_or_else(|| "nan".to_string(), |m| m.to_string());
        println!(
            "{} {} {} mean_excess_variance={mean}",
            c.id,
            c.status.label(),
            params.join(" ")
        );
    }
    println!("manifest = {}", manifest.dir.join("manifest.json").display());
    if manifest.divergence_dominated() {
        return Err(SimError::Diverged {
            diverged: manifest.diverged_cells(),
            total: manifest.cells.len(),
        });
    }
    Ok(0)
}
