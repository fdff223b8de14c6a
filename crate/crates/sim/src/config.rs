//! Flat `key = value` configuration files.
//!
//! Keys mirror the field names of the core configuration types, with nested
//! structs flattened. Blank lines and `#` comments are ignored. A few derived
//! keys are accepted on input and resolved into plain fields:
//!
//! * `timescale_ratio` sets `noise_timescale = timescale_ratio·tau_rev`;
//! * `eps2_ratio` sets the noise-variance belief to `ε²/eps2_ratio`;
//! * `noise_var_belief` sets the noise-variance belief `ε̂²` directly;
//! * `matched_cost_aversion` makes the noise trader cost-averse with tracking
//!   error `ξ` and gives the market maker the exact belief `ξ̂ = ξ`.

use std::fmt::Write as _;
use std::path::Path;

use kyle_core::agents::{MarketMakerBeliefs, NoiseMode};
use kyle_core::engine::SimulationConfig;
use kyle_core::kesten::{KestenConfig, KestenVariant};

use crate::error::{Result, SimError};

/// Ordered `key = value` pairs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeyValues(pub Vec<(String, String)>);

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self> {
        let mut out: Vec<(String, String)> = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| SimError::config(format!("line {}: expected key = value", n + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() {
                return Err(SimError::config(format!("line {}: empty key", n + 1)));
            }
            if out.iter().any(|(seen, _)| seen == k) {
                return Err(SimError::config(format!("line {}: duplicate key {k}", n + 1)));
            }
            out.push((k.to_string(), v.to_string()));
        }
        Ok(KeyValues(out))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.0 {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }
}

/// A configuration that can be filled from and echoed as key-value pairs.
pub trait Configurable {
    /// Sets one key. Unknown keys are errors.
    fn set(&mut self, key: &str, value: &str) -> Result<()>;

    /// Resolved key-value pairs; parsing them back reproduces the configuration.
    fn entries(&self) -> KeyValues;

    fn apply(&mut self, pairs: &KeyValues) -> Result<()> {
        for (k, v) in &pairs.0 {
            self.set(k, v)?;
        }
        Ok(())
    }
}

pub(crate) fn parse_f64(key: &str, value: &str) -> Result<f64> {
    match value {
        "inf" | "infinity" => Ok(f64::INFINITY),
        _ => value
            .parse()
            .map_err(|_| SimError::config(format!("{key}: expected a number, got {value:?}"))),
    }
}

pub(crate) fn parse_usize(key: &str, value: &str) -> Result<usize> {
    value
        .replace('_', "")
        .parse()
        .map_err(|_| SimError::config(format!("{key}: expected a non-negative integer, got {value:?}")))
}

pub(crate) fn parse_u64(key: &str, value: &str) -> Result<u64> {
    let v = value.replace('_', "");
    let parsed = match v.strip_prefix("0x") {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => v.parse(),
    };
    parsed.map_err(|_| SimError::config(format!("{key}: expected an unsigned integer, got {value:?}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(SimError::config(format!(
            "{key}: expected true or false, got {value:?}"
        ))),
    }
}

fn parse_opt_f64(key: &str, value: &str) -> Result<Option<f64>> {
    if value == "none" {
        Ok(None)
    } else {
        parse_f64(key, value).map(Some)
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "none".to_string(), |x| x.to_string())
}

fn unknown(key: &str, known: &[&str]) -> SimError {
    SimError::config(format!("unknown key {key:?}; expected one of: {}", known.join(", ")))
}

/// Trading-round simulation settings.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimJob {
    pub config: SimulationConfig,
    timescale_ratio: Option<f64>,
    eps2_ratio: Option<f64>,
}

impl SimJob {
    pub const KEYS: &'static [&'static str] = &[
        "fundamental_vol",
        "noise_vol",
        "noise_var_fluct",
        "noise_timescale",
        "fundamental_vol_belief",
        "noise_vol_belief",
        "sharpe_target",
        "cost_aversion_belief",
        "noise_mode",
        "tracking_error",
        "tau_rev",
        "revisions",
        "lambda0",
        "seed",
        "burn_in",
        "revise_beliefs",
        "belief_floor",
        "overflow",
        "record_rounds",
        "timescale_ratio",
        "eps2_ratio",
        "noise_var_belief",
        "matched_cost_aversion",
    ];

    pub fn new(config: SimulationConfig) -> Self {
        SimJob {
            config,
            ..Default::default()
        }
    }

    /// The configuration with derived keys applied, validated.
    pub fn resolve(&self) -> Result<SimulationConfig> {
        let mut c = self.config.clone();
        if let Some(r) = self.timescale_ratio {
            c.conditions.noise_timescale = r * c.tau_rev as f64;
        }
        if let Some(ratio) = self.eps2_ratio {
            if !(ratio > 0.0) {
                return Err(SimError::config(format!("eps2_ratio must be positive, got {ratio}")));
            }
            c.beliefs0.noise_vol_belief = c.conditions.noise_vol / ratio.sqrt();
        }
        c.validate()?;
        Ok(c)
    }
}

impl Configurable for SimJob {
    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let c = &mut self.config;
        match key {
            "fundamental_vol" => c.conditions.fundamental_vol = parse_f64(key, value)?,
            "noise_vol" => c.conditions.noise_vol = parse_f64(key, value)?,
            "noise_var_fluct" => c.conditions.noise_var_fluct = parse_f64(key, value)?,
            "noise_timescale" => {
                c.conditions.noise_timescale = parse_f64(key, value)?;
                self.timescale_ratio = None;
            }
            "fundamental_vol_belief" => c.beliefs0.fundamental_vol_belief = parse_f64(key, value)?,
            "noise_vol_belief" => {
                c.beliefs0.noise_vol_belief = parse_f64(key, value)?;
                self.eps2_ratio = None;
            }
            "sharpe_target" => c.beliefs0.sharpe_target = parse_f64(key, value)?,
            "cost_aversion_belief" => c.beliefs0.cost_aversion_belief = parse_f64(key, value)?,
            "noise_mode" => {
                c.noise_profile.mode = match value {
                    "passive" => NoiseMode::Passive,
                    "cost_averse" => NoiseMode::CostAverse,
                    _ => {
                        return Err(SimError::config(format!(
                            "noise_mode: expected passive or cost_averse, got {value:?}"
                        )))
                    }
                }
            }
            "tracking_error" => c.noise_profile.tracking_error = parse_f64(key, value)?,
            "tau_rev" => c.tau_rev = parse_usize(key, value)?,
            "revisions" => c.revisions = parse_usize(key, value)?,
            "lambda0" => c.lambda0 = parse_opt_f64(key, value)?,
            "seed" => c.seed = parse_u64(key, value)?,
            "burn_in" => c.burn_in = parse_usize(key, value)?,
            "revise_beliefs" => c.revise_beliefs = parse_bool(key, value)?,
            "belief_floor" => c.belief_floor = parse_opt_f64(key, value)?,
            "overflow" => c.overflow = parse_f64(key, value)?,
            "record_rounds" => c.record_rounds = parse_bool(key, value)?,
            "timescale_ratio" => self.timescale_ratio = Some(parse_f64(key, value)?),
            "eps2_ratio" => self.eps2_ratio = Some(parse_f64(key, value)?),
            "noise_var_belief" => {
                c.beliefs0.noise_vol_belief = parse_f64(key, value)?.sqrt();
                self.eps2_ratio = None;
            }
            "matched_cost_aversion" => {
                let xi = parse_f64(key, value)?;
                c.noise_profile.mode = if xi > 0.0 {
                    NoiseMode::CostAverse
                } else {
                    NoiseMode::Passive
                };
                c.noise_profile.tracking_error = xi;
                c.beliefs0.cost_aversion_belief = xi;
            }
            _ => return Err(unknown(key, Self::KEYS)),
        }
        Ok(())
    }

    fn entries(&self) -> KeyValues {
        // Unresolvable derived keys fall back to the stored fields.
        let c = self.resolve().unwrap_or_else(|_| self.config.clone());
        let b: &MarketMakerBeliefs = &c.beliefs0;
        let mode = match c.noise_profile.mode {
            NoiseMode::Passive => "passive",
            NoiseMode::CostAverse => "cost_averse",
        };
        KeyValues(
            [
                ("fundamental_vol", c.conditions.fundamental_vol.to_string()),
                ("noise_vol", c.conditions.noise_vol.to_string()),
                ("noise_var_fluct", c.conditions.noise_var_fluct.to_string()),
                ("noise_timescale", c.conditions.noise_timescale.to_string()),
                ("fundamental_vol_belief", b.fundamental_vol_belief.to_string()),
                ("noise_vol_belief", b.noise_vol_belief.to_string()),
                ("sharpe_target", b.sharpe_target.to_string()),
                ("cost_aversion_belief", b.cost_aversion_belief.to_string()),
                ("noise_mode", mode.to_string()),
                ("tracking_error", c.noise_profile.tracking_error.to_string()),
                ("tau_rev", c.tau_rev.to_string()),
                ("revisions", c.revisions.to_string()),
                ("lambda0", opt(c.lambda0)),
                ("seed", c.seed.to_string()),
                ("burn_in", c.burn_in.to_string()),
                ("revise_beliefs", c.revise_beliefs.to_string()),
                ("belief_floor", opt(c.belief_floor)),
                ("overflow", c.overflow.to_string()),
                ("record_rounds", c.record_rounds.to_string()),
            ]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect(),
        )
    }
}

/// Coarse-time recursion settings. The variant parameters are kept apart
/// so that keys can come in any order.
#[derive(Debug, Clone, PartialEq)]
pub struct KestenJob {
    pub eps2: f64,
    pub eps2_hat: f64,
    pub deps2: f64,
    pub r: f64,
    pub variant: VariantKind,
    pub sharpe: f64,
    pub xi: f64,
    pub xi_hat: f64,
    pub seed: u64,
    pub revisions: usize,
    pub x0: f64,
    /// Leading revisions dropped from statistics.
    pub burn_in: usize,
    eps2_ratio: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VariantKind {
    Baseline,
    RiskAverse,
    CostAverse,
}

impl Default for KestenJob {
    fn default() -> Self {
        let c = KestenConfig::default();
        KestenJob {
            eps2: c.eps2,
            eps2_hat: c.eps2_hat,
            deps2: c.deps2,
            r: c.r,
            variant: VariantKind::Baseline,
            sharpe: 0.0,
            xi: 0.0,
            xi_hat: 0.0,
            seed: c.seed,
            revisions: c.revisions,
            x0: c.x0,
            burn_in: 100,
            eps2_ratio: None,
        }
    }
}

impl KestenJob {
    pub const KEYS: &'static [&'static str] = &[
        "eps2",
        "eps2_hat",
        "deps2",
        "r",
        "variant",
        "sharpe",
        "xi",
        "xi_hat",
        "seed",
        "revisions",
        "x0",
        "burn_in",
        "eps2_ratio",
    ];

    pub fn resolve(&self) -> Result<KestenConfig> {
        let eps2_hat = match self.eps2_ratio {
            Some(ratio) if ratio > 0.0 => self.eps2 / ratio,
            Some(ratio) => return Err(SimError::config(format!("eps2_ratio must be positive, got {ratio}"))),
            None => self.eps2_hat,
        };
        let variant = match self.variant {
            VariantKind::Baseline => KestenVariant::Baseline,
            VariantKind::RiskAverse => KestenVariant::RiskAverse { sharpe: self.sharpe },
            VariantKind::CostAverse => KestenVariant::CostAverse {
                xi: self.xi,
                xi_hat: self.xi_hat,
            },
        };
        let c = KestenConfig {
            eps2: self.eps2,
            eps2_hat,
            deps2: self.deps2,
            r: self.r,
            variant,
            seed: self.seed,
            revisions: self.revisions,
            x0: self.x0,
        };
        c.validate()?;
        Ok(c)
    }
}

impl Configurable for KestenJob {
    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "eps2" => self.eps2 = parse_f64(key, value)?,
            "eps2_hat" => {
                self.eps2_hat = parse_f64(key, value)?;
                self.eps2_ratio = None;
            }
            "deps2" => self.deps2 = parse_f64(key, value)?,
            "r" => self.r = parse_f64(key, value)?,
            "variant" => {
                self.variant = match value {
                    "baseline" => VariantKind::Baseline,
                    "risk_averse" => VariantKind::RiskAverse,
                    "cost_averse" => VariantKind::CostAverse,
                    _ => {
                        return Err(SimError::config(format!(
                            "variant: expected baseline, risk_averse or cost_averse, got {value:?}"
                        )))
                    }
                }
            }
            "sharpe" => self.sharpe = parse_f64(key, value)?,
            "xi" => self.xi = parse_f64(key, value)?,
            "xi_hat" => self.xi_hat = parse_f64(key, value)?,
            "seed" => self.seed = parse_u64(key, value)?,
            "revisions" => self.revisions = parse_usize(key, value)?,
            "x0" => self.x0 = parse_f64(key, value)?,
            "burn_in" => self.burn_in = parse_usize(key, value)?,
            "eps2_ratio" => self.eps2_ratio = Some(parse_f64(key, value)?),
            _ => return Err(unknown(key, Self::KEYS)),
        }
        Ok(())
    }

    fn entries(&self) -> KeyValues {
        let eps2_hat = self.resolve().map(|c| c.eps2_hat).unwrap_or(self.eps2_hat);
        let variant = match self.variant {
            VariantKind::Baseline => "baseline",
            VariantKind::RiskAverse => "risk_averse",
            VariantKind::CostAverse => "cost_averse",
        };
        KeyValues(
            [
                ("eps2", self.eps2.to_string()),
                ("eps2_hat", eps2_hat.to_string()),
                ("deps2", self.deps2.to_string()),
                ("r", self.r.to_string()),
                ("variant", variant.to_string()),
                ("sharpe", self.sharpe.to_string()),
                ("xi", self.xi.to_string()),
                ("xi_hat", self.xi_hat.to_string()),
                ("seed", self.seed.to_string()),
                ("revisions", self.revisions.to_string()),
                ("x0", self.x0.to_string()),
                ("burn_in", self.burn_in.to_string()),
            ]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect(),
        )
    }
}

/// Parameters of the closed-form report.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticsParams {
    pub eps2: f64,
    pub eps2_hat: f64,
    pub deps2: f64,
    pub r: f64,
    pub sharpe: f64,
    pub xi: f64,
    pub xi_hat: f64,
    pub omega_hat: f64,
    pub tau_rev: f64,
}

impl Default for AnalyticsParams {
    fn default() -> Self {
        AnalyticsParams {
            eps2: 1.0,
            eps2_hat: 1.0,
            deps2: 0.0,
            r: 0.0,
            sharpe: 0.0,
            xi: 0.0,
            xi_hat: 0.0,
            omega_hat: 1.0,
            tau_rev: 100.0,
        }
    }
}

impl AnalyticsParams {
    pub const KEYS: &'static [&'static str] = &[
        "eps2",
        "eps2_hat",
        "deps2",
        "r",
        "sharpe",
        "xi",
        "xi_hat",
        "omega_hat",
        "tau_rev",
        "eps2_ratio",
    ];
}

impl Configurable for AnalyticsParams {
    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = parse_f64(key, value)?;
        match key {
            "eps2" => self.eps2 = v,
            "eps2_hat" => self.eps2_hat = v,
            "deps2" => self.deps2 = v,
            "r" => self.r = v,
            "sharpe" => self.sharpe = v,
            "xi" => self.xi = v,
            "xi_hat" => self.xi_hat = v,
            "omega_hat" => self.omega_hat = v,
            "tau_rev" => self.tau_rev = v,
            "eps2_ratio" => self.eps2_hat = self.eps2 / v,
            _ => return Err(unknown(key, Self::KEYS)),
        }
        Ok(())
    }

    fn entries(&self) -> KeyValues {
        KeyValues(
            [
                ("eps2", self.eps2),
                ("eps2_hat", self.eps2_hat),
                ("deps2", self.deps2),
                ("r", self.r),
                ("sharpe", self.sharpe),
                ("xi", self.xi),
                ("xi_hat", self.xi_hat),
                ("omega_hat", self.omega_hat),
                ("tau_rev", self.tau_rev),
            ]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_rejects_garbage() {
        let kv = KeyValues::parse("# header\n tau_rev = 800 \n\nseed=3 # trailing\n").unwrap();
        assert_eq!(
            kv.0,
            vec![("tau_rev".into(), "800".into()), ("seed".into(), "3".into())]
        );
        assert!(KeyValues::parse("no equals sign").is_err());
        assert!(KeyValues::parse("a=1\na=2").is_err());
        assert!(KeyValues::parse("=1").is_err());
    }

    #[test]
    fn simulation_entries_round_trip() {
        let mut job = SimJob::default();
        job.apply(&KeyValues::parse("tau_rev=800\neps2_ratio=1.4\ntimescale_ratio=2\nlambda0=0.3\nseed=0xff").unwrap())
            .unwrap();
        let resolved = job.resolve().unwrap();
        assert_eq!(resolved.conditions.noise_timescale, 1600.0);
        assert!((resolved.beliefs0.noise_vol_belief.powi(2) - 1.0 / 1.4).abs() < 1e-15);
        assert_eq!(resolved.seed, 255);

        let mut again = SimJob::default();
        again.apply(&job.entries()).unwrap();
        assert_eq!(again.resolve().unwrap(), resolved);
    }

    #[test]
    fn kesten_keys_in_any_order() {
        let mut job = KestenJob::default();
        job.apply(&KeyValues::parse("sharpe=0.1\nvariant=risk_averse\neps2_ratio=1.75").unwrap())
            .unwrap();
        let c = job.resolve().unwrap();
        assert_eq!(c.variant, KestenVariant::RiskAverse { sharpe: 0.1 });
        assert!((c.eps2_hat - 1.0 / 1.75).abs() < 1e-15);
        let mut again = KestenJob::default();
        again.apply(&job.entries()).unwrap();
        assert_eq!(again.resolve().unwrap(), c);
    }

    #[test]
    fn bad_values_and_keys() {
        let mut job = SimJob::default();
        assert!(job.set("tau_rev", "-3").is_err());
        assert!(job.set("noise_mode", "angry").is_err());
        assert!(job.set("no_such_key", "1").is_err());
        job.set("tau_rev", "0").unwrap();
        assert!(job.resolve().is_err());
        assert!(KestenJob::default().set("variant", "other").is_err());
    }

    #[test]
    fn matched_cost_aversion_sets_both_sides() {
        let mut job = SimJob::default();
        job.set("matched_cost_aversion", "0.8").unwrap();
        let c = job.resolve().unwrap();
        assert_eq!(c.noise_profile.mode, NoiseMode::CostAverse);
        assert_eq!(c.noise_profile.tracking_error, 0.8);
        assert_eq!(c.beliefs0.cost_aversion_belief, 0.8);
    }
}
