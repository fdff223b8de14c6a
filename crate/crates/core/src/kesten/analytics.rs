//! Closed-form mean-field quantities.

use crate::agents::{sharpe_boost, ImpactModel};
use crate::math::{abs, exp, ln};
use crate::{Error, Result};

use super::risk_averse_coefficient;

/// Mean-field excess variance `(1/4)/(1 − (ε²/2)/ε̂²)`.
pub fn mf_excess_variance(eps2: f64, eps2_hat: f64) -> Result<f64> {
    let ratio = 0.5 * eps2 / eps2_hat;
    if !(ratio < 1.0) {
        return Err(Error::Unstable("belief at or below the critical noise variance"));
    }
    Ok(0.25 / (1.0 - ratio))
}

/// Mean-field excess variance for an arbitrary mean multiplier `m` and
/// additive term `b`: `b/(1 − m)`.
pub fn kesten_fixed_point(additive: f64, mean_multiplier: f64) -> Result<f64> {
    if !(mean_multiplier < 1.0) {
        return Err(Error::Unstable("mean multiplicative factor is not below one"));
    }
    Ok(additive / (1.0 - mean_multiplier))
}

/// Mean-field fixed point of the cost-averse recursion with constant `ξ`.
pub fn mf_excess_variance_cost_averse(eps2: f64, eps2_hat: f64, xi: f64, xi_hat: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&xi_hat) {
        return Err(Error::domain("xi_hat", xi_hat));
    }
    if !(0.0..1.0).contains(&xi) {
        return Err(Error::domain("xi", xi));
    }
    let ratio = (1.0 - xi * xi) / (1.0 - xi_hat * xi_hat);
    kesten_fixed_point(0.25, 0.25 * ratio * ratio * eps2 / (2.0 * eps2_hat))
}

/// Mean-field excess variance of the risk-averse recursion.
pub fn mf_excess_variance_risk_averse(eps2: f64, eps2_hat: f64, sharpe: f64) -> Result<f64> {
    kesten_fixed_point(0.25, risk_averse_coefficient(sharpe) * eps2 / eps2_hat)
}

/// Critical noise-variance belief with fluctuations,
/// `ε²/2 + (δε²/2)·exp(−1/r)`.
///
/// `timescale` is the correlation time of the fluctuations in revision units.
/// `0` (iid) and `∞` are exact limits.
pub fn critical_belief(eps2: f64, deps2: f64, timescale: f64) -> f64 {
    let correlation = if deps2 == 0.0 || timescale == 0.0 {
        0.0
    } else if timescale.is_infinite() {
        1.0
    } else {
        exp(-1.0 / timescale)
    };
    0.5 * eps2 + 0.5 * deps2 * correlation
}

/// Relaxation time of the slow dynamics, `τ_rev/(1 − ε̂²_c/ε̂²)`.
pub fn mf_slow_timescale(eps2_hat: f64, critical: f64, tau_rev: f64) -> Result<f64> {
    if !(eps2_hat > critical) {
        return Err(Error::Unstable("belief at or below the critical value"));
    }
    Ok(tau_rev / (1.0 - critical / eps2_hat))
}

/// Mean-field ratio of noise to informed trade variance,
/// `(ε²/ε̂²)/(2 − ε²/ε̂²)`.
pub fn informed_ratio_mf(eps2: f64, eps2_hat: f64) -> Result<f64> {
    let u = eps2 / eps2_hat;
    if !(u < 2.0) {
        return Err(Error::Unstable("informed trade ratio undefined for ε²/ε̂² ≥ 2"));
    }
    Ok(u / (2.0 - u))
}

/// Fixed point of the impact map for constant beliefs.
pub fn fixed_point_impact(omega_hat: f64, eps_hat: f64, model: &ImpactModel) -> Result<f64> {
    if !(omega_hat > 0.0) {
        return Err(Error::domain("omega_hat", omega_hat));
    }
    if !(eps_hat > 0.0) {
        return Err(Error::domain("eps_hat", eps_hat));
    }
    match *model {
        ImpactModel::RiskNeutral => Ok(omega_hat / (2.0 * eps_hat)),
        ImpactModel::RiskAverse { sharpe } => Ok(0.5 * sharpe_boost(sharpe) * omega_hat / eps_hat),
        ImpactModel::CostAverse { xi_hat } => {
            if !(0.0..1.0).contains(&xi_hat) {
                return Err(Error::domain("xi_hat", xi_hat));
            }
            Ok(omega_hat / (2.0 * eps_hat * (1.0 - xi_hat)))
        }
    }
}

/// Expected long-run price variance `(ω̂²/2)·[1 + S(S+√(1+S²))]`.
pub fn expected_price_variance(omega_hat: f64, sharpe: f64) -> f64 {
    0.5 * omega_hat * omega_hat * (1.0 + sharpe * sharpe_boost(sharpe))
}

/// Critical belief for a risk-averse market maker, `ε²·c(S)`.
pub fn critical_belief_risk_averse(eps2: f64, sharpe: f64) -> f64 {
    eps2 * risk_averse_coefficient(sharpe)
}

/// Correspondence between the mean-field recursion and GARCH(1,1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GarchMapping {
    /// Mean-reversion coefficient `α = ε²/(2ε̂²)`.
    pub alpha: f64,
    /// Autocorrelation time of the variance, `1/|log α|`.
    pub tau_acf: f64,
    /// `α < 1`.
    pub stationary: bool,
    pub noise_correspondence: &'static str,
}

pub fn garch_mapping(eps2: f64, eps2_hat: f64) -> GarchMapping {
    let alpha = eps2 / (2.0 * eps2_hat);
    GarchMapping {
        alpha,
        tau_acf: 1.0 / abs(ln(alpha)),
        stationary: alpha < 1.0,
        noise_correspondence: "deps2_k/(2*eps2_hat) <-> g*(dp2_{k-1} - 1)",
    }
}

/// Autocorrelation time `(8/(μ−1))·(ε̂/δε)⁴` of volatility for iid
/// fluctuations. `eps_hat` and `deps` are the square roots of `ε̂²` and `δε²`.
pub fn acf_timescale_iid(mu: f64, eps_hat: f64, deps: f64) -> Result<f64> {
    if !(mu > 2.0) {
        return Err(Error::domain("tail exponent", mu));
    }
    if deps == 0.0 {
        return Ok(f64::INFINITY);
    }
    let ratio = eps_hat / deps;
    let r2 = ratio * ratio;
    Ok(8.0 / (mu - 1.0) * r2 * r2)
}

/// Impact relaxation time with a cost-averse noise trader, `1/(1−ξ)`.
pub fn relaxation_time_cost_averse(xi: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&xi) {
        return Err(Error::domain("xi", xi));
    }
    Ok(1.0 / (1.0 - xi))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs()
    }

    #[test]
    fn mf_excess_examples() {
        assert_eq!(mf_excess_variance(1.0, 1.0).unwrap(), 0.5);
        assert!(close(mf_excess_variance(1.0, 0.7).unwrap(), 0.875, 1e-14));
        assert!(mf_excess_variance(1.0, 0.5 + 1e-9).unwrap() > 1e7);
        assert!(matches!(mf_excess_variance(1.0, 0.5), Err(Error::Unstable(_))));
        assert!(mf_excess_variance(1.0, 0.3).is_err());
    }

    #[test]
    fn critical_belief_examples() {
        assert_eq!(critical_belief(1.0, 0.0, 5.0), 0.5);
        assert!(close(critical_belief(1.0, 0.1, f64::INFINITY), 0.55, 1e-15));
        assert_eq!(critical_belief(1.0, 0.1, 0.0), 0.5);
        assert!(close(
            critical_belief(1.0, 0.1, 1.0),
            0.5 + 0.05 * (-1.0f64).exp(),
            1e-15
        ));
    }

    #[test]
    fn slow_timescale_examples() {
        assert!(close(mf_slow_timescale(1.0, 0.5, 100.0).unwrap(), 200.0, 1e-15));
        assert!(mf_slow_timescale(0.5 + 1e-9, 0.5, 100.0).unwrap() > 1e9);
        assert!(close(mf_slow_timescale(1e12, 0.5, 100.0).unwrap(), 100.0, 1e-9));
        assert!(mf_slow_timescale(0.4, 0.5, 100.0).is_err());
    }

    #[test]
    fn informed_ratio_examples() {
        assert_eq!(informed_ratio_mf(1.0, 1.0).unwrap(), 1.0);
        assert!(close(informed_ratio_mf(1.0, 0.52).unwrap(), 25.0, 1e-12));
        assert!(close(informed_ratio_mf(1.0, 0.8).unwrap(), 1.25 / 0.75, 1e-14));
        assert!(informed_ratio_mf(1.0, 0.5).is_err());
    }

    #[test]
    fn fixed_point_examples() {
        assert_eq!(fixed_point_impact(1.0, 1.0, &ImpactModel::RiskNeutral).unwrap(), 0.5);
        assert_eq!(
            fixed_point_impact(1.3, 0.4, &ImpactModel::RiskAverse { sharpe: 0.0 }).unwrap(),
            fixed_point_impact(1.3, 0.4, &ImpactModel::RiskNeutral).unwrap()
        );
        assert_eq!(
            fixed_point_impact(1.0, 1.0, &ImpactModel::CostAverse { xi_hat: 0.5 }).unwrap(),
            1.0
        );
        assert!(fixed_point_impact(1.0, 1.0, &ImpactModel::CostAverse { xi_hat: 1.0 }).is_err());
    }

    #[test]
    fn expected_variance_examples() {
        assert_eq!(expected_price_variance(1.0, 0.0), 0.5);
        let s = 0.1;
        let want = 0.5 * (1.0 + s * (s + (1.0f64 + s * s).sqrt()));
        assert!(close(expected_price_variance(1.0, s), want, 1e-15));
        assert!(close(want, 0.5552, 1e-4));
        assert!(close(expected_price_variance(3.0, 0.1), 9.0 * want, 1e-14));
    }

    #[test]
    fn risk_averse_critical_examples() {
        assert_eq!(critical_belief_risk_averse(1.0, 0.0), 0.5);
        assert!(critical_belief_risk_averse(1.0, 0.1) > critical_belief_risk_averse(1.0, 0.0));
        assert!((critical_belief_risk_averse(1.0, 0.1) - 0.549_751_4).abs() < 1e-6);
    }

    #[test]
    fn garch_examples() {
        let g = garch_mapping(1.0, 1.0);
        assert_eq!(g.alpha, 0.5);
        assert!(close(g.tau_acf, 1.0 / 2f64.ln(), 1e-15));
        assert!(g.stationary);
        assert!(close(garch_mapping(1.0, 0.52).alpha, 0.961_538_461_5, 1e-9));
        assert!(garch_mapping(1.0, 0.5 + 1e-12).tau_acf > 1e9);
        assert!(!garch_mapping(1.0, 0.4).stationary);
    }

    #[test]
    fn acf_timescale_examples() {
        assert_eq!(acf_timescale_iid(5.0, 1.0, 1.0).unwrap(), 2.0);
        assert_eq!(acf_timescale_iid(5.0, 1.0, 0.0).unwrap(), f64::INFINITY);
        assert!(close(acf_timescale_iid(9.0, 2.0, 1.0).unwrap(), 16.0, 1e-15));
        assert!(acf_timescale_iid(2.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn relaxation_examples() {
        assert_eq!(relaxation_time_cost_averse(0.0).unwrap(), 1.0);
        assert!(close(relaxation_time_cost_averse(0.9).unwrap(), 10.0, 1e-14));
        assert!(relaxation_time_cost_averse(1.0 - 1e-12).unwrap() > 1e11);
        assert!(relaxation_time_cost_averse(1.0).is_err());
    }

    #[test]
    fn cost_averse_fixed_point_explodes() {
        let mut prev = 0.0;
        for &xi_hat in &[0.5, 0.6, 0.7, 0.75, 0.78] {
            let x = mf_excess_variance_cost_averse(1.0, 0.52, 0.5, xi_hat).unwrap();
            assert!(x > prev);
            prev = x;
        }
        assert!(mf_excess_variance_cost_averse(1.0, 0.52, 0.5, 0.9).is_err());
    }
}
