//! Tail exponent of the stationary excess volatility for iid fluctuations.
//!
//! With iid multipliers `a_k = c·ε²_k/ε̂²`, the volatility `σ_k` has a
//! power-law tail `P(σ > s) ~ s^{-μ}` with `μ` solving `⟨a^{μ/2}⟩ = 1`. The
//! expectation is taken over the Gaussian law of `ε²_k`, truncated to
//! `0 < ε²_k ≤ ε² + 10·δε²`.

use alloc::vec::Vec;

use crate::math::{exp, ln, normal_sf};
use crate::{Error, Result};

/// Upper end of the searched exponent range.
pub const TAIL_MU_MAX: f64 = 200.0;

const UPPER_Z: f64 = 10.0;
const LOWER_Z_CAP: f64 = -40.0;
const PANELS: usize = 4096;
const MOMENT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailExponent {
    pub mu: f64,
    /// `|⟨a^{μ/2}⟩ − 1|` at the returned exponent.
    pub moment_residual: f64,
    /// Probability mass of `ε²_k ≤ 0` left out of the integral.
    pub excluded_mass: f64,
}

/// Tail exponent for the baseline multiplier `ε²_k/(2ε̂²)`.
pub fn tail_exponent_iid(eps2: f64, deps2: f64, eps2_hat: f64) -> Result<TailExponent> {
    tail_exponent(0.5, eps2, deps2, eps2_hat)
}

/// Tail exponent for the multiplier `coefficient·ε²_k/ε̂²`; the risk-averse
/// recursion uses its Sharpe-dependent coefficient here.
pub fn tail_exponent(coefficient: f64, eps2: f64, deps2: f64, eps2_hat: f64) -> Result<TailExponent> {
    if !(eps2 > 0.0) {
        return Err(Error::domain("eps2", eps2));
    }
    if !(eps2_hat > 0.0) {
        return Err(Error::domain("eps2_hat", eps2_hat));
    }
    if !(coefficient > 0.0) {
        return Err(Error::domain("multiplier coefficient", coefficient));
    }
    if !(deps2 >= 0.0) {
        return Err(Error::domain("deps2", deps2));
    }
    let scale = coefficient / eps2_hat;
    if deps2 == 0.0 {
        // Point mass: ⟨a^{μ/2}⟩ = a^{μ/2} never crosses one from below.
        let a = scale * eps2;
        if a >= 1.0 {
            return Err(Error::Unstable("mean multiplicative factor is not below one"));
        }
        return Err(Error::TailOutOfRange { max: TAIL_MU_MAX });
    }

    let moments = GaussianMoments::new(scale, eps2, deps2);
    if moments.eval(2.0) >= 1.0 {
        return Err(Error::Unstable("mean multiplicative factor is not below one"));
    }
    let g = |mu: f64| moments.eval(mu) - 1.0;

    let mut lo: f64 = 2.0;
    let mut hi = lo;
    loop {
        hi = (hi * 1.05).min(TAIL_MU_MAX);
        if g(hi) >= 0.0 {
            break;
        }
        if hi >= TAIL_MU_MAX {
            return Err(Error::TailOutOfRange { max: TAIL_MU_MAX });
        }
        lo = hi;
    }

    let mut mid = 0.5 * (lo + hi);
    let mut residual = g(mid);
    for _ in 0..200 {
        if residual.abs() < MOMENT_TOL * 1e-2 || hi - lo < 1e-13 * mid {
            break;
        }
        if residual < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        mid = 0.5 * (lo + hi);
        residual = g(mid);
    }
    if residual.abs() >= MOMENT_TOL {
        return Err(Error::TailOutOfRange { max: TAIL_MU_MAX });
    }
    Ok(TailExponent {
        mu: mid,
        moment_residual: residual.abs(),
        excluded_mass: moments.excluded_mass,
    })
}

/// Composite Simpson rule for `⟨a^{s}⟩` over the standardized variable
/// `z = (ε²_k − ε²)/δε²`, with the nodes' `ln a` and log-weights cached.
struct GaussianMoments {
    nodes: Vec<(f64, f64)>,
    excluded_mass: f64,
}

impl GaussianMoments {
    fn new(scale: f64, eps2: f64, deps2: f64) -> Self {
        let z_zero = -eps2 / deps2;
        let z_lo = if z_zero > LOWER_Z_CAP { z_zero } else { LOWER_Z_CAP };
        let h = (UPPER_Z - z_lo) / PANELS as f64;
        let log_norm = -0.5 * ln(2.0 * core::f64::consts::PI);
        let nodes = (0..=PANELS)
            .map(|i| {
                let z = z_lo + h * i as f64;
                let simpson = if i == 0 || i == PANELS {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                let a = scale * (eps2 + deps2 * z);
                let ln_a = if a > 0.0 { ln(a) } else { f64::NEG_INFINITY };
                (ln_a, ln(simpson * h / 3.0) + log_norm - 0.5 * z * z)
            })
            .collect();
        GaussianMoments {
            nodes,
            excluded_mass: normal_sf(-z_zero),
        }
    }

    fn eval(&self, mu: f64) -> f64 {
        let s = 0.5 * mu;
        self.nodes.iter().map(|&(ln_a, log_w)| exp(s * ln_a + log_w)).sum()
    }
}
