//! Statistics of excess-variance series and their key-value report.

use kyle_core::stats::{
    excess_volatility_summary, fit_exponentials, hill_sweep, sample_acf, survival_curve, AcfReport,
    ExcessVolatilitySummary, TailReport,
};

use crate::config::KeyValues;
use crate::error::{Result, SimError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisOptions {
    pub acf_max_lag: usize,
    pub cdf_points: usize,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            acf_max_lag: 50,
            cdf_points: 60,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    pub excess: ExcessVolatilitySummary,
    /// Hill estimates of the volatility tail over the standard sweep; empty
    /// when the sample is too short.
    pub tails: Vec<TailReport>,
    /// Path-averaged ACF of the excess variance with a one-term fit.
    pub acf: Option<AcfReport>,
    /// The same ACF with a two-term fit.
    pub acf_two: Option<AcfReport>,
    /// Survival function of `σ/⟨σ⟩`.
    pub cdf: Option<(Vec<f64>, Vec<f64>)>,
}

/// Averages the biased sample ACF over the paths long enough for `max_lag`.
pub fn mean_acf(paths: &[Vec<f64>], max_lag: usize) -> Result<AcfReport> {
    let reports: Vec<AcfReport> = paths
        .iter()
        .filter(|p| p.len() > max_lag)
        .filter_map(|p| sample_acf(p, max_lag).ok())
        .collect();
    let Some(first) = reports.first() else {
        return Err(SimError::config(format!(
            "no series longer than {max_lag} with a defined ACF"
        )));
    };
    let mut out = first.clone();
    for (i, v) in out.values.iter_mut().enumerate() {
        *v = reports.iter().map(|r| r.values[i]).sum::<f64>() / reports.len() as f64;
    }
    out.undersampled = reports.iter().any(|r| r.undersampled);
    Ok(out)
}

/// Analyzes excess variances `σ_k²/ω²`, one series per path, burn-in removed.
pub fn analyze(paths: &[Vec<f64>], opts: &AnalysisOptions) -> Result<Analysis> {
    let pooled: Vec<f64> = paths.iter().flatten().copied().collect();
    let excess = excess_volatility_summary(&pooled)?;
    let vol: Vec<f64> = pooled.iter().map(|x| x.sqrt()).collect();
    let tails = hill_sweep(&vol).unwrap_or_default();
    let acf = mean_acf(paths, opts.acf_max_lag).ok();
    let acf_one = acf.as_ref().and_then(|a| fit_exponentials(a, 1).ok());
    let acf_two = acf.as_ref().and_then(|a| fit_exponentials(a, 2).ok());
    let cdf = survival_curve(&vol, opts.cdf_points).ok();
    Ok(Analysis {
        excess,
        tails,
        acf: acf_one.or(acf),
        acf_two,
        cdf,
    })
}

impl Analysis {
    pub fn report(&self) -> KeyValues {
        let mut kv: Vec<(String, String)> = vec![
            ("n".into(), self.excess.n.to_string()),
            (
                "mean_excess_variance".into(),
                self.excess.mean_excess_variance.to_string(),
            ),
            ("se_excess_variance".into(), self.excess.se.to_string()),
            (
                "mean_excess_volatility".into(),
                self.excess.mean_excess_volatility.to_string(),
            ),
        ];
        for t in &self.tails {
            kv.push((format!("hill_mu_{}", t.k_fraction), t.mu_hill.to_string()));
            kv.push((format!("hill_se_{}", t.k_fraction), t.mu_se.to_string()));
        }
        if let Some(a) = &self.acf {
            if let Some(res) = a.fit_residual {
                kv.push(("acf_tau".into(), a.fitted_timescales[0].to_string()));
                kv.push(("acf_fit_residual".into(), res.to_string()));
            }
        }
        if let Some(a) = &self.acf_two {
            for (i, (tau, w)) in a.fitted_timescales.iter().zip(&a.fit_weights).enumerate() {
                kv.push((format!("acf2_tau_{}", i + 1), tau.to_string()));
                kv.push((format!("acf2_weight_{}", i + 1), w.to_string()));
            }
            if let Some(res) = a.fit_residual {
                kv.push(("acf2_fit_residual".into(), res.to_string()));
            }
        }
        KeyValues(kv)
    }

    /// Hill estimate at the given tail fraction, if computed.
    pub fn hill(&self, k_fraction: f64) -> Option<&TailReport> {
        self.tails.iter().find(|t| t.k_fraction == k_fraction)
    }
}
