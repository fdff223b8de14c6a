//! Trading-round simulation with periodic belief revision.
//!
//! Each round the informed trader sizes its order against the previous
//! impact, the noise trader submits its (possibly cost-shrunk) order, the
//! market maker updates the impact with its current beliefs and clears the
//! excess demand at `p_t = Λ_t q_t`; then the noise variance advances. After
//! every `τ_rev` rounds the market maker measures the RMS price over the block
//! and resets its fundamental-volatility belief so that the expected price
//! variance matches it.

use alloc::vec::Vec;

use crate::agents::{
    cost_averse_noise_demand, informed_demand, phi_from_xi, set_price, MarketConditions, MarketMakerBeliefs, NoiseMode,
    NoiseTraderProfile,
};
use crate::kesten::{expected_price_variance, fixed_point_impact};
use crate::math::sqrt;
use crate::stats::{excess_volatility_summary, ExcessVolatilitySummary};
use crate::stochastic::{ar1_stationary_draw, Ar1Spec, Innovations, NoiseVarianceState, SeededInnovations};
use crate::{Error, Result};

/// Default floor on the fundamental-volatility belief, relative to `ω`.
pub const RELATIVE_BELIEF_FLOOR: f64 = 1e-6;
/// Default divergence threshold, relative to the initial scale of `Λ` and `ω`.
pub const DEFAULT_OVERFLOW: f64 = 1e12;
/// Default stride between per-path seeds of an ensemble.
pub const DEFAULT_SEED_STRIDE: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub conditions: MarketConditions,
    pub beliefs0: MarketMakerBeliefs,
    pub noise_profile: NoiseTraderProfile,
    /// Rounds per belief revision.
    pub tau_rev: usize,
    /// Number of revisions `K`; the run lasts `K·τ_rev` rounds.
    pub revisions: usize,
    /// Initial impact; `None` starts at the fixed point of the initial beliefs.
    pub lambda0: Option<f64>,
    pub seed: u64,
    /// Revisions discarded from summary statistics.
    pub burn_in: usize,
    /// With `false` the belief `ω̂` stays at its initial value.
    pub revise_beliefs: bool,
    /// Floor on `ω̂`; `None` means `1e-6·ω`.
    pub belief_floor: Option<f64>,
    /// Divergence threshold as a multiple of the initial scale.
    pub overflow: f64,
    /// Keep the per-round series. Ensembles switch this off.
    pub record_rounds: bool,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            conditions: MarketConditions::default(),
            beliefs0: MarketMakerBeliefs::risk_neutral(1.0, 1.0),
            noise_profile: NoiseTraderProfile::passive(),
            tau_rev: 100,
            revisions: 100,
            lambda0: None,
            seed: 0,
            burn_in: 10,
            revise_beliefs: true,
            belief_floor: None,
            overflow: DEFAULT_OVERFLOW,
            record_rounds: true,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        self.conditions.validate()?;
        self.beliefs0.validate()?;
        self.noise_profile.validate()?;
        if self.tau_rev == 0 {
            return Err(Error::Config("tau_rev must be at least 1".into()));
        }
        if self.revisions == 0 {
            return Err(Error::Config("revisions must be at least 1".into()));
        }
        if let Some(l) = self.lambda0 {
            if !(l > 0.0) || !l.is_finite() {
                return Err(Error::domain("lambda0", l));
            }
        }
        if let Some(f) = self.belief_floor {
            if !(f > 0.0) {
                return Err(Error::domain("belief floor", f));
            }
        }
        if !(self.overflow > 1.0) {
            return Err(Error::domain("overflow bound", self.overflow));
        }
        Ok(())
    }

    /// Total number of rounds `T = K·τ_rev`.
    pub fn total_rounds(&self) -> usize {
        self.tau_rev * self.revisions
    }

    pub fn initial_impact(&self) -> Result<f64> {
        match self.lambda0 {
            Some(l) => Ok(l),
            None => fixed_point_impact(
                self.beliefs0.fundamental_vol_belief,
                self.beliefs0.noise_vol_belief,
                &self.beliefs0.impact_model(),
            ),
        }
    }

    pub fn belief_floor(&self) -> f64 {
        self.belief_floor
            .unwrap_or(RELATIVE_BELIEF_FLOOR * self.conditions.fundamental_vol)
    }
}

/// Per-round series, one entry per trading round.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RoundSeries {
    pub price: Vec<f64>,
    pub excess_demand: Vec<f64>,
    pub informed_demand: Vec<f64>,
    pub noise_demand: Vec<f64>,
    pub impact: Vec<f64>,
    pub noise_variance: Vec<f64>,
}

impl RoundSeries {
    fn with_capacity(n: usize) -> Self {
        RoundSeries {
            price: Vec::with_capacity(n),
            excess_demand: Vec::with_capacity(n),
            informed_demand: Vec::with_capacity(n),
            noise_demand: Vec::with_capacity(n),
            impact: Vec::with_capacity(n),
            noise_variance: Vec::with_capacity(n),
        }
    }

    pub fn len(&self) -> usize {
        self.price.len()
    }

    pub fn is_empty(&self) -> bool {
        self.price.is_empty()
    }
}

/// Per-revision series, one entry per completed revision.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RevisionSeries {
    /// Belief after the revision.
    pub omega_hat: Vec<f64>,
    /// RMS price over the block preceding the revision.
    pub sigma_bar: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Diagnostics {
    pub rounds_run: usize,
    /// Rounds at which the noise variance hit its positivity floor.
    pub clamp_events: u64,
    /// Revisions at which the belief hit its floor.
    pub belief_floor_hits: u64,
    /// Sums over rounds after burn-in, for demand variances.
    pub informed_sq_sum: f64,
    pub noise_sq_sum: f64,
    pub counted_rounds: usize,
}

impl Diagnostics {
    /// Pooled `var(q^NT)/var(q^IT)` after burn-in (both demands have zero mean).
    pub fn noise_to_informed_ratio(&self) -> f64 {
        self.noise_sq_sum / self.informed_sq_sum
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimulationPath {
    /// Empty unless the configuration records rounds.
    pub rounds: RoundSeries,
    pub revisions: RevisionSeries,
    pub diverged: bool,
    pub diagnostics: Diagnostics,
}

impl SimulationPath {
    /// Excess variance `σ̄_k²/ω²` per revision, skipping the first `burn_in`.
    pub fn excess_variance(&self, omega: f64, burn_in: usize) -> Vec<f64> {
        self.revisions
            .sigma_bar
            .iter()
            .skip(burn_in)
            .map(|s| s * s / (omega * omega))
            .collect()
    }
}

/// Root-mean-square of a price window; prices have zero mean by construction.
pub fn estimate_price_volatility(window: &[f64]) -> Result<f64> {
    if window.is_empty() {
        return Err(Error::Degenerate("empty price window"));
    }
    let ss: f64 = window.iter().map(|p| p * p).sum();
    Ok(sqrt(ss / window.len() as f64))
}

/// Risk-neutral belief revision `ω̂ = max(√2·σ̄, floor)`.
pub fn revise_belief(sigma_bar: f64, floor: f64) -> f64 {
    revise_belief_with_sharpe(sigma_bar, 0.0, floor)
}

/// Belief revision inverting the expected price variance for a Sharpe
/// target: `ω̂² = 2σ̄²/(1 + S(S+√(1+S²)))`, floored.
pub fn revise_belief_with_sharpe(sigma_bar: f64, sharpe: f64, floor: f64) -> f64 {
    let omega_hat = sigma_bar / sqrt(expected_price_variance(1.0, sharpe));
    if omega_hat > floor {
        omega_hat
    } else {
        floor
    }
}

/// Runs one path with the seeded innovation streams.
pub fn run_simulation(config: &SimulationConfig) -> Result<SimulationPath> {
    let mut shocks = SeededInnovations::new(config.seed);
    run_simulation_with(config, &mut shocks)
}

/// Runs one path drawing shocks from `shocks`.
pub fn run_simulation_with<I: Innovations>(config: &SimulationConfig, shocks: &mut I) -> Result<SimulationPath> {
    config.validate()?;
    let omega = config.conditions.fundamental_vol;
    let eps_hat = config.beliefs0.noise_vol_belief;
    let sharpe = config.beliefs0.sharpe_target;
    let model = config.beliefs0.impact_model();
    let spec = Ar1Spec::new(config.conditions.noise_var_fluct, config.conditions.noise_timescale)?;
    let mut noise = NoiseVarianceState::new(
        config.conditions.noise_variance(),
        ar1_stationary_draw(&spec, shocks.noise_variance()),
    )?;
    if noise.is_clamped() {
        noise.clamp_events += 1;
    }

    let floor = config.belief_floor();
    let mut omega_hat = config.beliefs0.fundamental_vol_belief;
    let mut lambda_prev = config.initial_impact()?;
    let lambda_bound = config.overflow * lambda_prev;
    let sigma_bound = config.overflow * omega;

    let mut path = SimulationPath::default();
    if config.record_rounds {
        path.rounds = RoundSeries::with_capacity(config.total_rounds());
    }
    path.revisions.omega_hat.reserve(config.revisions);
    path.revisions.sigma_bar.reserve(config.revisions);
    let mut window = Vec::with_capacity(config.tau_rev);

    'blocks: for k in 0..config.revisions {
        window.clear();
        let counted = k >= config.burn_in;
        let phi = match config.noise_profile.mode {
            NoiseMode::Passive => 0.0,
            NoiseMode::CostAverse => phi_from_xi(config.noise_profile.tracking_error, eps_hat, omega_hat)?,
        };
        for _ in 0..config.tau_rev {
            let eps2_t = noise.current();
            let q_it = informed_demand(omega * shocks.fundamental(), lambda_prev)?;
            let q_target = sqrt(eps2_t) * shocks.noise_trade();
            let q_nt = match config.noise_profile.mode {
                NoiseMode::Passive => q_target,
                NoiseMode::CostAverse => cost_averse_noise_demand(q_target, lambda_prev, phi)?,
            };
            let q = q_it + q_nt;
            let lambda = model.update(lambda_prev, omega_hat, eps_hat)?;
            let p = set_price(lambda, q);

            path.diagnostics.rounds_run += 1;
            if config.record_rounds {
                let r = &mut path.rounds;
                r.price.push(p);
                r.excess_demand.push(q);
                r.informed_demand.push(q_it);
                r.noise_demand.push(q_nt);
                r.impact.push(lambda);
                r.noise_variance.push(eps2_t);
            }
            if counted {
                path.diagnostics.informed_sq_sum += q_it * q_it;
                path.diagnostics.noise_sq_sum += q_nt * q_nt;
                path.diagnostics.counted_rounds += 1;
            }
            window.push(p);

            if !(lambda <= lambda_bound) || !p.is_finite() {
                path.diverged = true;
                break 'blocks;
            }
            noise.step(&spec, shocks.noise_variance());
            lambda_prev = lambda;
        }

        let sigma_bar = estimate_price_volatility(&window)?;
        if !(sigma_bar <= sigma_bound) {
            path.diverged = true;
            break;
        }
        if config.revise_beliefs {
            omega_hat = revise_belief_with_sharpe(sigma_bar, sharpe, floor);
            if omega_hat == floor {
                path.diagnostics.belief_floor_hits += 1;
            }
        }
        path.revisions.omega_hat.push(omega_hat);
        path.revisions.sigma_bar.push(sigma_bar);
    }
    path.diagnostics.clamp_events = noise.clamp_events;
    Ok(path)
}

/// Summary of one ensemble member.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSummary {
    pub index: usize,
    pub seed: u64,
    pub diverged: bool,
    pub revisions_completed: usize,
    pub clamp_events: u64,
    /// Excess-variance statistics after burn-in; `None` when no revision
    /// survived the burn-in.
    pub excess: Option<ExcessVolatilitySummary>,
    /// Sums of squared demands after burn-in.
    pub informed_sq_sum: f64,
    pub noise_sq_sum: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSummary {
    pub paths: Vec<PathSummary>,
    /// Post-burn-in excess variances of every path, concatenated in path order.
    pub pooled_excess_variance: Vec<f64>,
    pub pooled: Option<ExcessVolatilitySummary>,
}

impl EnsembleSummary {
    pub fn diverged_count(&self) -> usize {
        self.paths.iter().filter(|p| p.diverged).count()
    }

    /// Ratio of pooled demand variances over all non-diverged paths.
    pub fn noise_to_informed_ratio(&self) -> f64 {
        let (n, i) = self
            .paths
            .iter()
            .filter(|p| !p.diverged)
            .fold((0.0, 0.0), |acc, p| (acc.0 + p.noise_sq_sum, acc.1 + p.informed_sq_sum));
        n / i
    }
}

/// Seed of ensemble member `index`.
pub fn path_seed(root: u64, index: usize, stride: u64) -> u64 {
    root.wrapping_add(stride.wrapping_mul(index as u64))
}

/// Runs member `index` of an ensemble without recording rounds and returns
/// its summary and its post-burn-in excess variances.
pub fn run_member(config: &SimulationConfig, index: usize, stride: u64) -> Result<(PathSummary, Vec<f64>)> {
    let mut cfg = config.clone();
    cfg.seed = path_seed(config.seed, index, stride);
    cfg.record_rounds = false;
    let path = run_simulation(&cfg)?;
    Ok(summarize_path(&cfg, index, &path))
}

pub fn summarize_path(config: &SimulationConfig, index: usize, path: &SimulationPath) -> (PathSummary, Vec<f64>) {
    let x = path.excess_variance(config.conditions.fundamental_vol, config.burn_in);
    let summary = PathSummary {
        index,
        seed: config.seed,
        diverged: path.diverged,
        revisions_completed: path.revisions.sigma_bar.len(),
        clamp_events: path.diagnostics.clamp_events,
        excess: excess_volatility_summary(&x).ok(),
        informed_sq_sum: path.diagnostics.informed_sq_sum,
        noise_sq_sum: path.diagnostics.noise_sq_sum,
    };
    (summary, x)
}

/// Ordered reduction of member results; independent of completion order as
/// long as `members` is sorted by index.
pub fn assemble_ensemble(members: Vec<(PathSummary, Vec<f64>)>) -> EnsembleSummary {
    let mut paths = Vec::with_capacity(members.len());
    let mut pooled_excess_variance = Vec::new();
    for (summary, x) in members {
        paths.push(summary);
        pooled_excess_variance.extend_from_slice(&x);
    }
    let pooled = excess_volatility_summary(&pooled_excess_variance).ok();
    EnsembleSummary {
        paths,
        pooled_excess_variance,
        pooled,
    }
}

/// Runs `n_paths` independent members sequentially. Member `i` uses seed
/// `config.seed + i·seed_stride` (wrapping), so member 0 reproduces
/// [`run_simulation`] with the same configuration.
pub fn run_ensemble(config: &SimulationConfig, n_paths: usize, seed_stride: u64) -> Result<EnsembleSummary> {
    if n_paths == 0 {
        return Err(Error::Config("ensemble needs at least one path".into()));
    }
    config.validate()?;
    let members = (0..n_paths)
        .map(|i| run_member(config, i, seed_stride))
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble_ensemble(members))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::ImpactModel;
    use crate::kesten::fixed_point_impact as fixed_point;

    fn reh(tau_rev: usize, revisions: usize) -> SimulationConfig {
        SimulationConfig {
            tau_rev,
            revisions,
            seed: 7,
            ..Default::default()
        }
    }

    #[test]
    fn volatility_estimator_examples() {
        assert_eq!(estimate_price_volatility(&[0.0; 8]).unwrap(), 0.0);
        assert_eq!(estimate_price_volatility(&[1.0, -1.0, 1.0, -1.0]).unwrap(), 1.0);
        assert!(estimate_price_volatility(&[]).is_err());
    }

    #[test]
    fn volatility_estimator_concentrates() {
        let mut s = crate::stochastic::ShockStream::new(1, crate::stochastic::StreamId::Fundamental);
        let window: Vec<f64> = (0..10_000).map(|_| 0.3 * s.next_normal()).collect();
        let est = estimate_price_volatility(&window).unwrap();
        assert!((est / 0.3 - 1.0).abs() < 0.02);
    }

    #[test]
    fn revision_examples() {
        let floor = 1e-6;
        let omega_hat: f64 = 1.7;
        assert!((revise_belief(omega_hat / 2f64.sqrt(), floor) - omega_hat).abs() < 1e-15);
        assert_eq!(revise_belief(0.0, floor), floor);
        assert!((revise_belief(1.0, floor) - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(revise_belief_with_sharpe(0.8, 0.0, floor), revise_belief(0.8, floor));
        // Risk-averse revision inverts the expected-variance formula.
        let w = revise_belief_with_sharpe(1.0, 0.1, floor);
        assert!((expected_price_variance(w, 0.1) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn lengths_and_price_identity() {
        let cfg = reh(50, 20);
        let path = run_simulation(&cfg).unwrap();
        assert!(!path.diverged);
        assert_eq!(path.rounds.len(), cfg.total_rounds());
        assert_eq!(path.revisions.sigma_bar.len(), cfg.revisions);
        assert_eq!(path.revisions.omega_hat.len(), cfg.revisions);
        for t in 0..path.rounds.len() {
            let r = &path.rounds;
            assert_eq!(r.price[t], r.impact[t] * r.excess_demand[t]);
            assert_eq!(r.excess_demand[t], r.informed_demand[t] + r.noise_demand[t]);
        }
    }

    #[test]
    fn frozen_beliefs_hold_the_kyle_fixed_point() {
        let cfg = SimulationConfig {
            revise_beliefs: false,
            ..reh(100, 5)
        };
        let path = run_simulation(&cfg).unwrap();
        assert!(path.rounds.impact.iter().all(|&l| l == 0.5));
        assert!(path.revisions.omega_hat.iter().all(|&w| w == 1.0));
    }

    #[test]
    fn below_critical_belief_diverges() {
        let cfg = SimulationConfig {
            beliefs0: MarketMakerBeliefs::risk_neutral(1.0, 0.45f64.sqrt()),
            ..reh(100, 1000)
        };
        let path = run_simulation(&cfg).unwrap();
        assert!(path.diverged);
        assert!(path.revisions.sigma_bar.len() < 1000);
    }

    #[test]
    fn impact_relaxes_within_each_block() {
        let cfg = SimulationConfig {
            conditions: MarketConditions {
                noise_var_fluct: 0.1,
                noise_timescale: 50.0,
                ..Default::default()
            },
            beliefs0: MarketMakerBeliefs::risk_neutral(1.0, 0.8),
            ..reh(100, 30)
        };
        let path = run_simulation(&cfg).unwrap();
        let mut omega_hat = 1.0;
        for k in 0..cfg.revisions {
            let target = fixed_point(omega_hat, 0.8, &ImpactModel::RiskNeutral).unwrap();
            for i in 51..cfg.tau_rev {
                let l = path.rounds.impact[k * cfg.tau_rev + i];
                assert!((l / target - 1.0).abs() < 1e-3);
            }
            omega_hat = path.revisions.omega_hat[k];
        }
    }

    #[test]
    fn ensemble_member_zero_matches_single_run() {
        let cfg = reh(40, 30);
        let ens = run_ensemble(&cfg, 3, DEFAULT_SEED_STRIDE).unwrap();
        let single = run_simulation(&cfg).unwrap();
        let (summary, x) = summarize_path(&cfg, 0, &single);
        assert_eq!(ens.paths[0], summary);
        assert_eq!(ens.pooled_excess_variance[..x.len()], x[..]);
        assert_eq!(ens, run_ensemble(&cfg, 3, DEFAULT_SEED_STRIDE).unwrap());
        assert!(run_ensemble(&cfg, 0, 1).is_err());
    }

    #[test]
    fn invalid_configs() {
        assert!(run_simulation(&SimulationConfig {
            tau_rev: 0,
            ..Default::default()
        })
        .is_err());
        assert!(run_simulation(&SimulationConfig {
            revisions: 0,
            ..Default::default()
        })
        .is_err());
        assert!(run_simulation(&SimulationConfig {
            lambda0: Some(-1.0),
            ..Default::default()
        })
        .is_err());
        let both = SimulationConfig {
            beliefs0: MarketMakerBeliefs {
                sharpe_target: 0.1,
                cost_aversion_belief: 0.2,
                ..MarketMakerBeliefs::risk_neutral(1.0, 1.0)
            },
            ..Default::default()
        };
        assert!(run_simulation(&both).is_err());
    }
}
