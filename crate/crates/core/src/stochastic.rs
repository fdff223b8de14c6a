//! Seeded random streams and the exogenous processes driving the market:
//! Gaussian fundamental innovations and the AR(1) fluctuation of the noise
//! trade variance.
//!
//! # Stream splitting
//!
//! A root seed is expanded into a ChaCha8 key once; every named stream uses
//! the same key with its own ChaCha stream number ([`StreamId`]). Streams are
//! therefore independent and adding a new stream id never changes the draws
//! of the existing ones.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::math::{exp, sqrt};
use crate::{Error, Result};

/// Stationary Gaussian AR(1) process parameters.
///
/// `timescale` is measured in steps of the process. `0` gives an iid
/// sequence and `f64::INFINITY` a frozen one; both are handled as exact
/// limits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ar1Spec {
    /// Stationary standard deviation.
    pub volatility: f64,
    pub timescale: f64,
}

impl Ar1Spec {
    pub fn new(volatility: f64, timescale: f64) -> Result<Self> {
        let spec = Ar1Spec { volatility, timescale };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.volatility >= 0.0) || !self.volatility.is_finite() {
            return Err(Error::domain("AR(1) volatility", self.volatility));
        }
        if !(self.timescale >= 0.0) {
            return Err(Error::domain("AR(1) timescale", self.timescale));
        }
        Ok(())
    }

    /// One-step autoregressive coefficient `exp(-1/timescale)`.
    pub fn decay(&self) -> f64 {
        if self.timescale == 0.0 {
            0.0
        } else if self.timescale.is_infinite() {
            1.0
        } else {
            exp(-1.0 / self.timescale)
        }
    }
}

/// Advances the AR(1) process by one step.
///
/// `shock` is a standard normal draw; it is scaled by the stationary
/// volatility so that the stationary law is `N(0, volatility²)`.
pub fn ar1_step(prev: f64, spec: &Ar1Spec, shock: f64) -> f64 {
    if spec.timescale == 0.0 {
        return shock * spec.volatility;
    }
    if spec.timescale.is_infinite() {
        return prev;
    }
    let a = exp(-1.0 / spec.timescale);
    let b = sqrt(1.0 - exp(-2.0 / spec.timescale));
    a * prev + shock * spec.volatility * b
}

/// A draw from the stationary law of the process.
pub fn ar1_stationary_draw(spec: &Ar1Spec, shock: f64) -> f64 {
    shock * spec.volatility
}

/// Noise-trade variance `ε²_t = ε² + δε²_t`, clamped from below.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseVarianceState {
    pub base_variance: f64,
    pub fluctuation: f64,
    pub floor: f64,
    /// Number of steps at which the floor was binding.
    pub clamp_events: u64,
}

impl NoiseVarianceState {
    /// Default positivity floor relative to the base variance.
    pub const RELATIVE_FLOOR: f64 = 1e-6;

    pub fn new(base_variance: f64, fluctuation: f64) -> Result<Self> {
        if !(base_variance > 0.0) || !base_variance.is_finite() {
            return Err(Error::domain("base noise variance", base_variance));
        }
        Ok(NoiseVarianceState {
            base_variance,
            fluctuation,
            floor: Self::RELATIVE_FLOOR * base_variance,
            clamp_events: 0,
        })
    }

    pub fn with_floor(mut self, floor: f64) -> Result<Self> {
        if !(floor > 0.0) {
            return Err(Error::domain("noise variance floor", floor));
        }
        self.floor = floor;
        Ok(self)
    }

    /// Current variance, `max(base + fluctuation, floor)`.
    pub fn current(&self) -> f64 {
        let raw = self.base_variance + self.fluctuation;
        if raw < self.floor {
            self.floor
        } else {
            raw
        }
    }

    pub fn is_clamped(&self) -> bool {
        self.base_variance + self.fluctuation < self.floor
    }

    /// Advances the fluctuation and returns the clamped current variance.
    pub fn step(&mut self, spec: &Ar1Spec, shock: f64) -> f64 {
        self.fluctuation = ar1_step(self.fluctuation, spec, shock);
        if self.is_clamped() {
            self.clamp_events += 1;
        }
        self.current()
    }
}

/// Functional form of [`NoiseVarianceState::step`].
pub fn noise_variance_step(state: NoiseVarianceState, spec: &Ar1Spec, shock: f64) -> (NoiseVarianceState, f64) {
    let mut next = state;
    let current = next.step(spec, shock);
    (next, current)
}

/// Named sub-streams derived from one root seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum StreamId {
    Fundamental = 0,
    NoiseTrade = 1,
    NoiseVariance = 2,
}

/// A standard-normal generator bound to one sub-stream of a root seed.
#[derive(Debug, Clone)]
pub struct ShockStream {
    rng: ChaCha8Rng,
}

impl ShockStream {
    pub fn new(seed: u64, id: StreamId) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(id as u64);
        ShockStream { rng }
    }

    #[inline]
    pub fn next_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }
}

/// Source of the standard-normal shocks consumed by the engine.
pub trait Innovations {
    /// Shock scaled by the fundamental volatility to give `p^F_t`.
    fn fundamental(&mut self) -> f64;
    /// Shock scaled by `ε_t` to give the (target) noise trade.
    fn noise_trade(&mut self) -> f64;
    /// Shock driving the AR(1) noise-variance fluctuation.
    fn noise_variance(&mut self) -> f64;
}

/// The default [`Innovations`]: three independent seeded streams.
#[derive(Debug, Clone)]
pub struct SeededInnovations {
    fundamental: ShockStream,
    noise_trade: ShockStream,
    noise_variance: ShockStream,
}

impl SeededInnovations {
    pub fn new(seed: u64) -> Self {
        SeededInnovations {
            fundamental: ShockStream::new(seed, StreamId::Fundamental),
            noise_trade: ShockStream::new(seed, StreamId::NoiseTrade),
            noise_variance: ShockStream::new(seed, StreamId::NoiseVariance),
        }
    }
}

impl Innovations for SeededInnovations {
    fn fundamental(&mut self) -> f64 {
        self.fundamental.next_normal()
    }

    fn noise_trade(&mut self) -> f64 {
        self.noise_trade.next_normal()
    }

    fn noise_variance(&mut self) -> f64 {
        self.noise_variance.next_normal()
    }
}
