//! Empirical statistics of simulated series: autocorrelation and its
//! exponential-mixture fits, Hill tail estimates, survival curves and
//! excess-volatility summaries.

use alloc::vec::Vec;

use crate::math::{ceil, exp, ln, sqrt};
use crate::{Error, Result};

/// Default Hill tail fraction and the sweep reported alongside it.
pub const HILL_DEFAULT_FRACTION: f64 = 0.01;
pub const HILL_SWEEP: [f64; 3] = [0.005, 0.01, 0.02];
/// Smallest number of order statistics the Hill estimator accepts.
pub const HILL_MIN_TAIL: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct AcfReport {
    pub lags: Vec<usize>,
    pub values: Vec<f64>,
    /// Sorted ascending; empty until fitted.
    pub fitted_timescales: Vec<f64>,
    pub fit_weights: Vec<f64>,
    pub fit_residual: Option<f64>,
    /// Set when the series is shorter than ten times the largest lag.
    pub undersampled: bool,
}

/// Biased sample autocorrelation at lags `0..=max_lag`.
pub fn sample_acf(series: &[f64], max_lag: usize) -> Result<AcfReport> {
    let n = series.len();
    if max_lag >= n {
        return Err(Error::Config(alloc::format!(
            "max_lag {max_lag} needs more than {n} samples"
        )));
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = series.iter().map(|x| x - mean).collect();
    let c0: f64 = centered.iter().map(|d| d * d).sum();
    if !(c0 > 0.0) || !c0.is_finite() {
        return Err(Error::Degenerate("constant series has no autocorrelation"));
    }
    let values = (0..=max_lag)
        .map(|lag| {
            if lag == 0 {
                return 1.0;
            }
            let c: f64 = centered[..n - lag]
                .iter()
                .zip(&centered[lag..])
                .map(|(a, b)| a * b)
                .sum();
            c / c0
        })
        .collect();
    Ok(AcfReport {
        lags: (0..=max_lag).collect(),
        values,
        fitted_timescales: Vec::new(),
        fit_weights: Vec::new(),
        fit_residual: None,
        undersampled: n <= 10 * max_lag,
    })
}

/// Fits `Σ w_i exp(−ℓ/τ_i)` to lags `1..=max_lag` with `w_i ≥ 0`, `Σ w_i ≤ 1`,
/// weighting lag `ℓ` by `1/ℓ` (uniform in `log ℓ`). The residual is the
/// weighted mean squared error.
pub fn fit_exponentials(acf: &AcfReport, n_terms: usize) -> Result<AcfReport> {
    if n_terms != 1 && n_terms != 2 {
        return Err(Error::Config(alloc::format!("n_terms must be 1 or 2, got {n_terms}")));
    }
    let data: Vec<(f64, f64, f64)> = acf
        .lags
        .iter()
        .zip(&acf.values)
        .filter(|(&l, _)| l > 0)
        .map(|(&l, &v)| (l as f64, v, 1.0 / l as f64))
        .collect();
    if data.len() < 2 * n_terms {
        return Err(Error::FitFailed(alloc::format!(
            "{} lags are too few for {n_terms} terms",
            data.len()
        )));
    }
    let problem = Problem::new(data);
    let max_lag = problem.data.last().map(|d| d.0).unwrap_or(1.0);
    let grid: Vec<f64> = (0..60)
        .map(|i| ln(0.05) + (ln(100.0 * max_lag) - ln(0.05)) * i as f64 / 59.0)
        .collect();

    let one = {
        let start = grid
            .iter()
            .map(|&g| (problem.objective(&[g]), g))
            .fold((f64::INFINITY, grid[0]), |a, b| if b.0 < a.0 { b } else { a });
        nelder_mead(|v| problem.objective(v), &[start.1], 0.3)?
    };
    let (log_taus, residual) = if n_terms == 1 {
        one
    } else {
        let mut best = (f64::INFINITY, [grid[0], grid[1]]);
        for (i, &a) in grid.iter().enumerate() {
            for &b in &grid[i + 1..] {
                let f = problem.objective(&[a, b]);
                if f < best.0 {
                    best = (f, [a, b]);
                }
            }
        }
        // Seeding from the one-term optimum keeps the nested residual ordering.
        let nested = [one.0[0], one.0[0] + 1.0];
        let nested_f = problem.objective(&nested);
        let start = if nested_f <= best.0 { nested } else { best.1 };
        let two = nelder_mead(|v| problem.objective(v), &start, 0.3)?;
        if two.1 <= one.1 {
            two
        } else {
            (alloc::vec![one.0[0], one.0[0] + 1.0], problem.objective(&nested))
        }
    };
    let (weights, fit) = problem.weights(&log_taus);
    if !fit.is_finite() {
        return Err(Error::FitFailed("non-finite residual".into()));
    }
    let mut terms: Vec<(f64, f64)> = log_taus.iter().map(|&lt| exp(lt)).zip(weights).collect();
    terms.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out = acf.clone();
    out.fitted_timescales = terms.iter().map(|t| t.0).collect();
    out.fit_weights = terms.iter().map(|t| t.1).collect();
    out.fit_residual = Some(residual.min(fit));
    Ok(out)
}

/// Weighted least squares in the weights for fixed timescales.
struct Problem {
    data: Vec<(f64, f64, f64)>,
    weight_sum: f64,
}

impl Problem {
    fn new(data: Vec<(f64, f64, f64)>) -> Self {
        let weight_sum = data.iter().map(|d| d.2).sum();
        Problem { data, weight_sum }
    }

    fn objective(&self, log_taus: &[f64]) -> f64 {
        self.weights(log_taus).1
    }

    fn sse(&self, taus: &[f64], w: &[f64]) -> f64 {
        self.data
            .iter()
            .map(|&(l, y, c)| {
                let m: f64 = taus.iter().zip(w).map(|(t, wi)| wi * exp(-l / t)).sum();
                c * (y - m) * (y - m)
            })
            .sum::<f64>()
            / self.weight_sum
    }

    fn weights(&self, log_taus: &[f64]) -> (Vec<f64>, f64) {
        let taus: Vec<f64> = log_taus.iter().map(|&lt| exp(lt)).collect();
        let basis = |i: usize| -> Vec<f64> { self.data.iter().map(|&(l, _, _)| exp(-l / taus[i])).collect() };
        let dot = |a: &[f64], b: &[f64]| -> f64 {
            self.data
                .iter()
                .zip(a.iter().zip(b))
                .map(|(d, (x, y))| d.2 * x * y)
                .sum()
        };
        let y: Vec<f64> = self.data.iter().map(|d| d.1).collect();
        let clamp01 = |w: f64| if w.is_nan() { 0.0 } else { w.clamp(0.0, 1.0) };

        if taus.len() == 1 {
            let e = basis(0);
            let w = clamp01(dot(&e, &y) / dot(&e, &e));
            return (alloc::vec![w], self.sse(&taus, &[w]));
        }

        // Two terms: the constrained optimum lies at the interior solution
        // or on one of the three edges of the feasible triangle.
        let (e1, e2) = (basis(0), basis(1));
        let (a11, a12, a22) = (dot(&e1, &e1), dot(&e1, &e2), dot(&e2, &e2));
        let (b1, b2) = (dot(&e1, &y), dot(&e2, &y));
        let mut candidates: Vec<[f64; 2]> = Vec::with_capacity(4);
        let det = a11 * a22 - a12 * a12;
        if det > 1e-14 * a11 * a22 {
            let w = [(b1 * a22 - b2 * a12) / det, (b2 * a11 - b1 * a12) / det];
            if w[0] >= 0.0 && w[1] >= 0.0 && w[0] + w[1] <= 1.0 {
                candidates.push(w);
            }
        }
        candidates.push([clamp01(b1 / a11), 0.0]);
        candidates.push([0.0, clamp01(b2 / a22)]);
        // Edge w1 + w2 = 1: minimize over w1 with residual y − e2 − w1(e1 − e2).
        let d: Vec<f64> = e1.iter().zip(&e2).map(|(a, b)| a - b).collect();
        let r: Vec<f64> = y.iter().zip(&e2).map(|(a, b)| a - b).collect();
        candidates.push({
            let w1 = clamp01(dot(&d, &r) / dot(&d, &d));
            [w1, 1.0 - w1]
        });
        candidates.into_iter().map(|w| (w, self.sse(&taus, &w))).fold(
            (alloc::vec![0.0, 0.0], f64::INFINITY),
            |best, (w, f)| {
                if f < best.1 {
                    (w.to_vec(), f)
                } else {
                    best
                }
            },
        )
    }
}

/// Nelder–Mead minimization from `start` with initial step `step`.
fn nelder_mead<F: Fn(&[f64]) -> f64>(f: F, start: &[f64], step: f64) -> Result<(Vec<f64>, f64)> {
    let dim = start.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
    simplex.push((start.to_vec(), f(start)));
    for i in 0..dim {
        let mut v = start.to_vec();
        v[i] += step;
        let fv = f(&v);
        simplex.push((v, fv));
    }
    const MAX_ITER: usize = 5000;
    for _ in 0..MAX_ITER {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let spread = simplex[dim].1 - simplex[0].1;
        let size = simplex[1..]
            .iter()
            .flat_map(|(v, _)| v.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if size < 1e-9 || (spread <= 1e-16 * (1.0 + simplex[0].1.abs()) && size < 1e-6) {
            return Ok(simplex.swap_remove(0));
        }
        let centroid: Vec<f64> = (0..dim)
            .map(|j| simplex[..dim].iter().map(|(v, _)| v[j]).sum::<f64>() / dim as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[dim].0)
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };
        let xr = along(1.0);
        let fr = f(&xr);
        if fr < simplex[0].1 {
            let xe = along(2.0);
            let fe = f(&xe);
            simplex[dim] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[dim - 1].1 {
            simplex[dim] = (xr, fr);
        } else {
            let xc = if fr < simplex[dim].1 { along(0.5) } else { along(-0.5) };
            let fc = f(&xc);
            if fc < simplex[dim].1.min(fr) {
                simplex[dim] = (xc, fc);
            } else {
                let best = simplex[0].0.clone();
                for (v, fv) in simplex[1..].iter_mut() {
                    for (x, b) in v.iter_mut().zip(&best) {
                        *x = b + 0.5 * (*x - b);
                    }
                    *fv = f(v);
                }
            }
        }
    }
    Err(Error::FitFailed(alloc::format!(
        "Nelder-Mead did not converge in {MAX_ITER} iterations"
    )))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailReport {
    pub mu_hill: f64,
    pub k_fraction: f64,
    pub mu_se: f64,
    /// Number of order statistics used.
    pub k: usize,
    /// The `(k+1)`-th largest value, where the tail starts.
    pub threshold: f64,
}

/// Hill estimate of the tail exponent from the `⌈k_fraction·N⌉` largest values.
pub fn hill_estimator(series: &[f64], k_fraction: f64) -> Result<TailReport> {
    if !(k_fraction > 0.0 && k_fraction < 1.0) {
        return Err(Error::domain("k_fraction", k_fraction));
    }
    if let Some(&bad) = series.iter().find(|&&x| !(x > 0.0) || !x.is_finite()) {
        return Err(Error::domain("hill sample", bad));
    }
    let n = series.len();
    let k = ceil(k_fraction * n as f64) as usize;
    if k < HILL_MIN_TAIL || k >= n {
        return Err(Error::InsufficientTail {
            needed: HILL_MIN_TAIL,
            have: k.min(n.saturating_sub(1)),
        });
    }
    let mut sorted = series.to_vec();
    let threshold = *sorted.select_nth_unstable_by(n - k - 1, |a, b| a.total_cmp(b)).1;
    let log_threshold = ln(threshold);
    let mean_log: f64 = sorted[n - k..].iter().map(|&x| ln(x) - log_threshold).sum::<f64>() / k as f64;
    if !(mean_log > 0.0) {
        return Err(Error::Degenerate("tail values equal the threshold"));
    }
    let mu = 1.0 / mean_log;
    Ok(TailReport {
        mu_hill: mu,
        k_fraction,
        mu_se: mu / sqrt(k as f64),
        k,
        threshold,
    })
}

/// Hill estimates over [`HILL_SWEEP`].
pub fn hill_sweep(series: &[f64]) -> Result<Vec<TailReport>> {
    HILL_SWEEP.iter().map(|&f| hill_estimator(series, f)).collect()
}

/// Complementary CDF `P(X/⟨X⟩ ≥ level)` on `n_points` log-spaced levels
/// between the smallest positive and the largest normalized value. A
/// constant series gets levels spanning a decade either side of one.
pub fn survival_curve(series: &[f64], n_points: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if series.is_empty() {
        return Err(Error::Degenerate("empty series"));
    }
    if n_points < 2 {
        return Err(Error::Config("survival curve needs at least two levels".into()));
    }
    let mean = series.iter().sum::<f64>() / series.len() as f64;
    if !(mean > 0.0) {
        return Err(Error::domain("series mean", mean));
    }
    let mut sorted: Vec<f64> = series.iter().map(|x| x / mean).collect();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let lo = sorted.iter().copied().find(|&x| x > 0.0).unwrap_or(1.0);
    let hi = sorted[sorted.len() - 1];
    let (lo, hi) = if hi > lo { (lo, hi) } else { (lo / 10.0, lo * 10.0) };
    let (llo, lhi) = (ln(lo), ln(hi));
    let n = sorted.len() as f64;
    let mut levels = Vec::with_capacity(n_points);
    let mut probs = Vec::with_capacity(n_points);
    for i in 0..n_points {
        let level = if i == n_points - 1 {
            hi
        } else {
            exp(llo + (lhi - llo) * i as f64 / (n_points - 1) as f64)
        };
        let below = sorted.partition_point(|&x| x < level);
        levels.push(level);
        probs.push((sorted.len() - below) as f64 / n);
    }
    Ok((levels, probs))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExcessVolatilitySummary {
    pub n: usize,
    /// Mean of `σ_k²/ω²`.
    pub mean_excess_variance: f64,
    /// Batch-means standard error of the mean excess variance.
    pub se: f64,
    /// Mean of `σ_k/ω`.
    pub mean_excess_volatility: f64,
}

/// Summary of per-revision excess variances with burn-in already removed.
pub fn excess_volatility_summary(excess_variance: &[f64]) -> Result<ExcessVolatilitySummary> {
    let n = excess_variance.len();
    if n == 0 {
        return Err(Error::Degenerate("no revisions after burn-in"));
    }
    let mean = excess_variance.iter().sum::<f64>() / n as f64;
    let mean_vol = excess_variance.iter().map(|&x| sqrt(x)).sum::<f64>() / n as f64;
    Ok(ExcessVolatilitySummary {
        n,
        mean_excess_variance: mean,
        se: batch_means_se(excess_variance),
        mean_excess_volatility: mean_vol,
    })
}

/// Standard error of the mean from `⌊√n⌋` equal batches, which absorbs the
/// serial correlation of the series; falls back to the iid formula for
/// fewer than four samples.
pub fn batch_means_se(series: &[f64]) -> f64 {
    let n = series.len();
    if n < 2 {
        return 0.0;
    }
    let batches = sqrt(n as f64) as usize;
    let (means, count): (Vec<f64>, usize) = if batches < 2 {
        (series.to_vec(), n)
    } else {
        let size = n / batches;
        (
            series
                .chunks_exact(size)
                .take(batches)
                .map(|c| c.iter().sum::<f64>() / size as f64)
                .collect(),
            batches,
        )
    };
    let m = means.iter().sum::<f64>() / count as f64;
    let var = means.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (count - 1) as f64;
    sqrt(var / count as f64)
}
