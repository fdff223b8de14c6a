//! Sticky-expectation fast path.
//!
//! When belief revisions are far apart compared with the impact relaxation,
//! the excess variance `x_k = σ²_k/ω²` sampled once per revision follows a
//! Kesten recursion `x_k = b + a_k·x_{k-1}` with a random multiplier driven by
//! the noise-trade variance `ε²_k`. Time is counted in revisions here, so the
//! AR(1) fluctuation of `ε²_k` uses the timescale ratio `r = τ_NT/τ_rev`.

mod analytics;
mod tail;

pub use analytics::*;
pub use tail::{tail_exponent, tail_exponent_iid, TailExponent, TAIL_MU_MAX};

use alloc::vec::Vec;

use crate::agents::sharpe_boost;
use crate::stochastic::{ar1_stationary_draw, Ar1Spec, NoiseVarianceState, ShockStream, StreamId};
use crate::{Error, Result};

/// Bound on `x_k` beyond which a path is declared divergent.
pub const DIVERGENCE_BOUND: f64 = 1e12;

/// Model variant of the coarse-time recursion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KestenVariant {
    Baseline,
    RiskAverse {
        sharpe: f64,
    },
    /// True tracking error `xi` and the market maker's belief `xi_hat`.
    CostAverse {
        xi: f64,
        xi_hat: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct KestenConfig {
    /// `ε²`.
    pub eps2: f64,
    /// `ε̂²`.
    pub eps2_hat: f64,
    /// `δε²`, stationary standard deviation of the fluctuation of `ε²_k`.
    pub deps2: f64,
    /// `r = τ_NT/τ_rev`; zero gives iid fluctuations.
    pub r: f64,
    pub variant: KestenVariant,
    pub seed: u64,
    /// Number of revisions `K`.
    pub revisions: usize,
    /// Excess variance before the first revision.
    pub x0: f64,
}

impl Default for KestenConfig {
    fn default() -> Self {
        KestenConfig {
            eps2: 1.0,
            eps2_hat: 1.0,
            deps2: 0.0,
            r: 0.0,
            variant: KestenVariant::Baseline,
            seed: 0,
            revisions: 10_000,
            x0: 0.5,
        }
    }
}

impl KestenConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps2 > 0.0) || !self.eps2.is_finite() {
            return Err(Error::domain("eps2", self.eps2));
        }
        if !(self.eps2_hat > 0.0) || !self.eps2_hat.is_finite() {
            return Err(Error::domain("eps2_hat", self.eps2_hat));
        }
        if !(self.x0 >= 0.0) || !self.x0.is_finite() {
            return Err(Error::domain("x0", self.x0));
        }
        Ar1Spec::new(self.deps2, self.r)?;
        match self.variant {
            KestenVariant::Baseline => {}
            KestenVariant::RiskAverse { sharpe } => {
                if !(sharpe >= 0.0) || !sharpe.is_finite() {
                    return Err(Error::domain("sharpe", sharpe));
                }
            }
            KestenVariant::CostAverse { xi, xi_hat } => {
                if !(0.0..1.0).contains(&xi) {
                    return Err(Error::domain("xi", xi));
                }
                if !(0.0..1.0).contains(&xi_hat) {
                    return Err(Error::domain("xi_hat", xi_hat));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct KestenPath {
    /// `x_k` for `k = 1..=K`, truncated at the first divergent step.
    pub x: Vec<f64>,
    pub diverged: bool,
    /// Revisions at which `ε²_k` hit its positivity floor.
    pub clamp_events: u64,
}

impl KestenPath {
    /// Excess volatility `σ_k/ω = √x_k`.
    pub fn excess_volatility(&self) -> Vec<f64> {
        self.x.iter().map(|&x| crate::math::sqrt(x)).collect()
    }
}

/// Baseline step `1/4 + ε²_k/(2ε̂²)·x_{k-1}`.
#[inline]
pub fn kesten_step_baseline(x_prev: f64, eps2_k: f64, eps2_hat: f64) -> f64 {
    0.25 + eps2_k / (2.0 * eps2_hat) * x_prev
}

/// Coefficient `(S+√(1+S²))² / (2(1 + S(S+√(1+S²))))` of the risk-averse
/// multiplier; equals 1/2 at `S = 0`.
pub fn risk_averse_coefficient(sharpe: f64) -> f64 {
    let boost = sharpe_boost(sharpe);
    boost * boost / (2.0 * (1.0 + sharpe * boost))
}

/// Risk-averse step `1/4 + c(S)·(ε²_k/ε̂²)·x_{k-1}`.
#[inline]
pub fn kesten_step_risk_averse(x_prev: f64, eps2_k: f64, eps2_hat: f64, sharpe: f64) -> f64 {
    0.25 + risk_averse_coefficient(sharpe) * (eps2_k / eps2_hat) * x_prev
}

/// Cost-averse step
/// `(1/4)·[1 + ((1-ξ_k²)/(1-ξ̂²))²·ε²_k/(2ε̂²)·x_{k-1}]`.
pub fn kesten_step_cost_averse(x_prev: f64, eps2_k: f64, eps2_hat: f64, xi_k: f64, xi_hat: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&xi_hat) {
        return Err(Error::domain("xi_hat", xi_hat));
    }
    if !(0.0..1.0).contains(&xi_k) {
        return Err(Error::domain("xi", xi_k));
    }
    let ratio = (1.0 - xi_k * xi_k) / (1.0 - xi_hat * xi_hat);
    Ok(0.25 * (1.0 + ratio * ratio * eps2_k / (2.0 * eps2_hat) * x_prev))
}

/// Runs the recursion for the configured variant. Divergence is flagged on
/// the path, not returned as an error.
pub fn run_kesten(config: &KestenConfig) -> Result<KestenPath> {
    let xi = match config.variant {
        KestenVariant::CostAverse { xi, .. } => xi,
        _ => 0.0,
    };
    run_kesten_with_xi(config, |_| xi)
}

/// Like [`run_kesten`], with a time-varying true tracking error `ξ_k` for the
/// cost-averse variant. `xi_at` receives the revision index `k` (from 1) and
/// is ignored by the other variants.
pub fn run_kesten_with_xi<F>(config: &KestenConfig, mut xi_at: F) -> Result<KestenPath>
where
    F: FnMut(usize) -> f64,
{
    config.validate()?;
    let spec = Ar1Spec::new(config.deps2, config.r)?;
    let mut shocks = ShockStream::new(config.seed, StreamId::NoiseVariance);
    let mut noise = NoiseVarianceState::new(config.eps2, ar1_stationary_draw(&spec, shocks.next_normal()))?;
    if noise.is_clamped() {
        noise.clamp_events += 1;
    }

    let mut path = KestenPath {
        x: Vec::with_capacity(config.revisions),
        ..Default::default()
    };
    let mut x = config.x0;
    for k in 1..=config.revisions {
        let eps2_k = if k == 1 {
            noise.current()
        } else {
            noise.step(&spec, shocks.next_normal())
        };
        x = match config.variant {
            KestenVariant::Baseline => kesten_step_baseline(x, eps2_k, config.eps2_hat),
            KestenVariant::RiskAverse { sharpe } => kesten_step_risk_averse(x, eps2_k, config.eps2_hat, sharpe),
            KestenVariant::CostAverse { xi_hat, .. } => {
                kesten_step_cost_averse(x, eps2_k, config.eps2_hat, xi_at(k), xi_hat)?
            }
        };
        if !(x <= DIVERGENCE_BOUND) {
            path.diverged = true;
            break;
        }
        path.x.push(x);
    }
    path.clamp_events = noise.clamp_events;
    Ok(path)
}
