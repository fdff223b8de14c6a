//! Trader strategies and the market maker's price-impact maps.
//!
//! Everything here is a pure function of its arguments. Cost-aversion and
//! risk-aversion coefficients (`φ`, `ρ`) are always derived from the current
//! beliefs at the call site and never stored, because the fundamental
//! volatility belief moves at every revision.

use crate::math::sqrt;
use crate::{Error, Result};

/// Ground-truth statistics of the fundamental price and of the noise trades.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarketConditions {
    /// `ω`, standard deviation of the fundamental price.
    pub fundamental_vol: f64,
    /// `ε`, base standard deviation of the noise trades.
    pub noise_vol: f64,
    /// `δε²`, stationary standard deviation of the fluctuation of `ε²_t`.
    pub noise_var_fluct: f64,
    /// `τ_NT`, AR(1) timescale of the fluctuation, in trading rounds.
    pub noise_timescale: f64,
}

impl MarketConditions {
    /// Ratio `δε²/ε²` above which positivity of `ε²_t` is no longer a safe
    /// assumption.
    pub const FLUCTUATION_WARN_RATIO: f64 = 0.5;

    pub fn validate(&self) -> Result<()> {
        positive("fundamental volatility", self.fundamental_vol)?;
        positive("noise volatility", self.noise_vol)?;
        if !(self.noise_var_fluct >= 0.0) || !self.noise_var_fluct.is_finite() {
            return Err(Error::domain("noise variance fluctuation", self.noise_var_fluct));
        }
        if !(self.noise_timescale >= 0.0) {
            return Err(Error::domain("noise timescale", self.noise_timescale));
        }
        Ok(())
    }

    pub fn noise_variance(&self) -> f64 {
        self.noise_vol * self.noise_vol
    }

    /// True when `δε²/ε²` is large enough that clamping may matter.
    pub fn large_fluctuations(&self) -> bool {
        self.noise_var_fluct / self.noise_variance() > Self::FLUCTUATION_WARN_RATIO
    }
}

impl Default for MarketConditions {
    fn default() -> Self {
        MarketConditions {
            fundamental_vol: 1.0,
            noise_vol: 1.0,
            noise_var_fluct: 0.0,
            noise_timescale: 0.0,
        }
    }
}

/// The market maker's model of the market.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarketMakerBeliefs {
    /// `ω̂`, revised periodically.
    pub fundamental_vol_belief: f64,
    /// `ε̂`, never revised.
    pub noise_vol_belief: f64,
    /// Sharpe ratio per round `S`; zero means risk-neutral.
    pub sharpe_target: f64,
    /// `ξ̂`, believed tracking error of the noise trader; zero means the
    /// noise trader is believed passive.
    pub cost_aversion_belief: f64,
}

impl MarketMakerBeliefs {
    pub fn risk_neutral(omega_hat: f64, eps_hat: f64) -> Self {
        MarketMakerBeliefs {
            fundamental_vol_belief: omega_hat,
            noise_vol_belief: eps_hat,
            sharpe_target: 0.0,
            cost_aversion_belief: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        positive("fundamental volatility belief", self.fundamental_vol_belief)?;
        positive("noise volatility belief", self.noise_vol_belief)?;
        if !(self.sharpe_target >= 0.0) || !self.sharpe_target.is_finite() {
            return Err(Error::domain("Sharpe target", self.sharpe_target));
        }
        tracking_error("cost-aversion belief", self.cost_aversion_belief)?;
        if self.sharpe_target > 0.0 && self.cost_aversion_belief > 0.0 {
            return Err(Error::Config(
                "risk-averse market maker with a cost-averse noise-trader belief is not modelled".into(),
            ));
        }
        Ok(())
    }

    /// The impact map these beliefs select.
    pub fn impact_model(&self) -> ImpactModel {
        if self.sharpe_target > 0.0 {
            ImpactModel::RiskAverse {
                sharpe: self.sharpe_target,
            }
        } else if self.cost_aversion_belief > 0.0 {
            ImpactModel::CostAverse {
                xi_hat: self.cost_aversion_belief,
            }
        } else {
            ImpactModel::RiskNeutral
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseMode {
    #[default]
    Passive,
    CostAverse,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NoiseTraderProfile {
    pub mode: NoiseMode,
    /// `ξ`, ignored in passive mode.
    pub tracking_error: f64,
}

impl NoiseTraderProfile {
    pub fn passive() -> Self {
        NoiseTraderProfile::default()
    }

    pub fn cost_averse(xi: f64) -> Self {
        NoiseTraderProfile {
            mode: NoiseMode::CostAverse,
            tracking_error: xi,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.mode {
            NoiseMode::Passive => Ok(()),
            NoiseMode::CostAverse => tracking_error("tracking error", self.tracking_error),
        }
    }
}

/// Which price-impact update the market maker applies each round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ImpactModel {
    RiskNeutral,
    RiskAverse { sharpe: f64 },
    CostAverse { xi_hat: f64 },
}

impl ImpactModel {
    pub fn update(&self, lambda_prev: f64, omega_hat: f64, eps_hat: f64) -> Result<f64> {
        match *self {
            ImpactModel::RiskNeutral => impact_update_risk_neutral(lambda_prev, omega_hat, eps_hat),
            ImpactModel::RiskAverse { sharpe } => {
                let rho = rho_from_sharpe(sharpe, eps_hat, omega_hat);
                impact_update_risk_averse(lambda_prev, omega_hat, eps_hat, rho)
            }
            ImpactModel::CostAverse { xi_hat } => impact_update_cost_averse(lambda_prev, omega_hat, eps_hat, xi_hat),
        }
    }
}

/// Myopic informed demand `p^F / (2Λ_{t-1})`.
pub fn informed_demand(p_fund: f64, lambda_prev: f64) -> Result<f64> {
    positive("previous price impact", lambda_prev)?;
    Ok(p_fund / (2.0 * lambda_prev))
}

/// Cost-averse noise demand, the target shrunk by `1 + φΛ_{t-1}`.
pub fn cost_averse_noise_demand(q_target: f64, lambda_prev: f64, phi: f64) -> Result<f64> {
    positive("previous price impact", lambda_prev)?;
    if !(phi >= 0.0) {
        return Err(Error::domain("cost aversion", phi));
    }
    Ok(q_target / (1.0 + phi * lambda_prev))
}

/// Cost-aversion `φ = 2ξε̂/ω̂` that yields tracking error `ξ` when the
/// impact sits at its fixed point.
pub fn phi_from_xi(xi: f64, eps_hat: f64, omega_hat: f64) -> Result<f64> {
    tracking_error("tracking error", xi)?;
    positive("noise volatility belief", eps_hat)?;
    positive("fundamental volatility belief", omega_hat)?;
    Ok(2.0 * xi * eps_hat / omega_hat)
}

/// Risk-aversion coefficient `ρ = S/(ε̂ω̂)` giving a constant Sharpe ratio
/// per round.
pub fn rho_from_sharpe(sharpe: f64, eps_hat: f64, omega_hat: f64) -> f64 {
    sharpe / (eps_hat * omega_hat)
}

/// One step of the risk-neutral impact map,
/// `2Λω̂² / (ω̂² + 4Λ²ε̂²)`.
pub fn impact_update_risk_neutral(lambda_prev: f64, omega_hat: f64, eps_hat: f64) -> Result<f64> {
    positive("previous price impact", lambda_prev)?;
    positive("fundamental volatility belief", omega_hat)?;
    positive("noise volatility belief", eps_hat)?;
    Ok(kyle_map(lambda_prev, omega_hat * omega_hat, eps_hat * eps_hat))
}

/// Risk-averse impact map: the risk-neutral step times `1 + 2Λρε̂²`.
pub fn impact_update_risk_averse(lambda_prev: f64, omega_hat: f64, eps_hat: f64, rho: f64) -> Result<f64> {
    if !(rho >= 0.0) {
        return Err(Error::domain("risk aversion", rho));
    }
    let base = impact_update_risk_neutral(lambda_prev, omega_hat, eps_hat)?;
    Ok(base * (1.0 + 2.0 * lambda_prev * rho * eps_hat * eps_hat))
}

/// Impact map when the noise trader is believed cost-averse: the believed
/// noise variance is shrunk to `ε̂²/(1 + φ̂Λ)²`, with `φ̂` derived from `ξ̂`.
pub fn impact_update_cost_averse(lambda_prev: f64, omega_hat: f64, eps_hat: f64, xi_hat: f64) -> Result<f64> {
    positive("previous price impact", lambda_prev)?;
    let phi_hat = phi_from_xi(xi_hat, eps_hat, omega_hat)?;
    let shrink = 1.0 + phi_hat * lambda_prev;
    let eps2_eff = eps_hat * eps_hat / (shrink * shrink);
    Ok(kyle_map(lambda_prev, omega_hat * omega_hat, eps2_eff))
}

/// Linear price setting `p = Λq`.
#[inline]
pub fn set_price(lambda: f64, q_total: f64) -> f64 {
    lambda * q_total
}

#[inline]
fn kyle_map(lambda: f64, omega2: f64, eps2: f64) -> f64 {
    2.0 * lambda * omega2 / (omega2 + 4.0 * lambda * lambda * eps2)
}

fn positive(what: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(what, value))
    }
}

fn tracking_error(what: &'static str, xi: f64) -> Result<()> {
    if (0.0..1.0).contains(&xi) {
        Ok(())
    } else {
        Err(Error::domain(what, xi))
    }
}

/// `(S + √(1+S²))`, the risk-aversion multiplier shared by the risk-averse
/// fixed points.
pub(crate) fn sharpe_boost(sharpe: f64) -> f64 {
    sharpe + sqrt(1.0 + sharpe * sharpe)
}
