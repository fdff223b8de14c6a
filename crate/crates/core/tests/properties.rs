//! Randomized invariants, 1000 cases per property with a fixed RNG seed.
//!
//! Statistical properties use a 4.6σ band: with 1000 independent cases that
//! keeps the family-wise false-alarm rate near 0.4%.

use kyle_core::agents::{
    cost_averse_noise_demand, impact_update_cost_averse, impact_update_risk_averse, impact_update_risk_neutral,
    phi_from_xi, ImpactModel, MarketConditions, MarketMakerBeliefs, NoiseTraderProfile,
};
use kyle_core::engine::{run_simulation, run_simulation_with, SimulationConfig};
use kyle_core::kesten::{
    expected_price_variance, fixed_point_impact, mf_excess_variance, run_kesten, tail_exponent_iid, KestenConfig,
    KestenVariant,
};
use kyle_core::stats::{fit_exponentials, hill_estimator, sample_acf, survival_curve, AcfReport};
use kyle_core::stochastic::{
    ar1_stationary_draw, ar1_step, Ar1Spec, Innovations, SeededInnovations, ShockStream, StreamId,
};
use proptest::prelude::*;
use proptest::test_runner::RngSeed;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const BAND: f64 = 4.6;

fn config() -> ProptestConfig {
    ProptestConfig {
        cases: 1000,
        rng_seed: RngSeed::Fixed(0x5EED_2024),
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * b.abs().max(a.abs())
}

struct Negated(SeededInnovations);

impl Innovations for Negated {
    fn fundamental(&mut self) -> f64 {
        -self.0.fundamental()
    }
    fn noise_trade(&mut self) -> f64 {
        -self.0.noise_trade()
    }
    fn noise_variance(&mut self) -> f64 {
        self.0.noise_variance()
    }
}

proptest! {
    #![proptest_config(config())]

    // Stochastic drivers.

    #[test]
    fn ar1_limits_are_exact(prev in -5.0..5.0f64, shock in -5.0..5.0f64, vol in 0.0..3.0f64) {
        let iid = Ar1Spec::new(vol, 0.0).unwrap();
        prop_assert_eq!(ar1_step(prev, &iid, shock), vol * shock);
        let frozen = Ar1Spec::new(vol, f64::INFINITY).unwrap();
        prop_assert_eq!(ar1_step(prev, &frozen, shock), prev);
    }

    #[test]
    fn ar1_is_odd_in_its_inputs(seed in any::<u64>(), vol in 0.0..3.0f64, tau in 0.0..50.0f64) {
        let spec = Ar1Spec::new(vol, tau).unwrap();
        let mut s = ShockStream::new(seed, StreamId::NoiseVariance);
        let (mut a, mut b) = (0.3, -0.3);
        for _ in 0..200 {
            let z = s.next_normal();
            a = ar1_step(a, &spec, z);
            b = ar1_step(b, &spec, -z);
            prop_assert_eq!(a, -b);
        }
    }

    #[test]
    fn ar1_is_stationary(seed in any::<u64>(), vol in 0.1..3.0f64, tau in 0.5..20.0f64) {
        let n = 20_000;
        let spec = Ar1Spec::new(vol, tau).unwrap();
        let mut s = ShockStream::new(seed, StreamId::NoiseVariance);
        let mut x = ar1_stationary_draw(&spec, s.next_normal());
        let path: Vec<f64> = (0..n).map(|_| { x = ar1_step(x, &spec, s.next_normal()); x }).collect();
        let a = (-1.0 / tau).exp();
        let acf = sample_acf(&path, 1).unwrap();
        let se1 = ((1.0 - a * a) / n as f64).sqrt();
        prop_assert!((acf.values[1] - a).abs() < BAND * se1, "lag-1 {} vs {a}", acf.values[1]);
        let var = path.iter().map(|v| v * v).sum::<f64>() / n as f64;
        let se_var = vol * vol * (2.0 * (1.0 + a * a) / (1.0 - a * a) / n as f64).sqrt();
        prop_assert!((var - vol * vol).abs() < BAND * se_var, "variance {var} vs {}", vol * vol);
    }

    #[test]
    fn seeded_streams_are_deterministic(seed in any::<u64>()) {
        let mut a = SeededInnovations::new(seed);
        let mut b = SeededInnovations::new(seed);
        for _ in 0..50 {
            prop_assert_eq!(a.fundamental().to_bits(), b.fundamental().to_bits());
            prop_assert_eq!(a.noise_trade().to_bits(), b.noise_trade().to_bits());
            prop_assert_eq!(a.noise_variance().to_bits(), b.noise_variance().to_bits());
        }
    }

    // Agents.

    #[test]
    fn kyle_fixed_point_is_invariant(omega_hat in 1e-3..1e3f64, eps_hat in 1e-3..1e3f64) {
        let star = omega_hat / (2.0 * eps_hat);
        let next = impact_update_risk_neutral(star, omega_hat, eps_hat).unwrap();
        prop_assert!(close(next, star, 4.0 * f64::EPSILON));
    }

    #[test]
    fn impact_converges_from_far_away(omega_hat in 0.1..10.0f64, eps_hat in 0.1..10.0f64, log_scale in -3.0..3.0f64) {
        let star = omega_hat / (2.0 * eps_hat);
        let mut l = star * 10f64.powf(log_scale);
        for _ in 0..40 {
            l = impact_update_risk_neutral(l, omega_hat, eps_hat).unwrap();
        }
        prop_assert!((l / star - 1.0).abs() < 1e-6);
    }

    #[test]
    fn zero_aversion_maps_reduce_exactly(l in 1e-3..1e3f64, omega_hat in 1e-2..1e2f64, eps_hat in 1e-2..1e2f64) {
        let rn = impact_update_risk_neutral(l, omega_hat, eps_hat).unwrap();
        prop_assert_eq!(impact_update_risk_averse(l, omega_hat, eps_hat, 0.0).unwrap(), rn);
        prop_assert_eq!(impact_update_cost_averse(l, omega_hat, eps_hat, 0.0).unwrap(), rn);
        prop_assert_eq!(ImpactModel::RiskAverse { sharpe: 0.0 }.update(l, omega_hat, eps_hat).unwrap(), rn);
        prop_assert_eq!(ImpactModel::CostAverse { xi_hat: 0.0 }.update(l, omega_hat, eps_hat).unwrap(), rn);
    }

    #[test]
    fn zero_sharpe_fixed_point_and_variance_reduce(omega_hat in 1e-2..1e2f64, eps_hat in 1e-2..1e2f64) {
        let ra = fixed_point_impact(omega_hat, eps_hat, &ImpactModel::RiskAverse { sharpe: 0.0 }).unwrap();
        prop_assert!(close(ra, omega_hat / (2.0 * eps_hat), 4.0 * f64::EPSILON));
        prop_assert!(close(expected_price_variance(omega_hat, 0.0), omega_hat * omega_hat / 2.0, 4.0 * f64::EPSILON));
    }

    #[test]
    fn averse_fixed_points_are_invariant(omega_hat in 1e-2..1e2f64, eps_hat in 1e-2..1e2f64, sharpe in 0.0..2.0f64, xi_hat in 0.0..0.95f64) {
        let model = ImpactModel::RiskAverse { sharpe };
        let star = fixed_point_impact(omega_hat, eps_hat, &model).unwrap();
        prop_assert!(close(model.update(star, omega_hat, eps_hat).unwrap(), star, 1e-12));
        let model = ImpactModel::CostAverse { xi_hat };
        let star = fixed_point_impact(omega_hat, eps_hat, &model).unwrap();
        prop_assert!(close(model.update(star, omega_hat, eps_hat).unwrap(), star, 1e-12));
    }

    #[test]
    fn cost_averse_noise_variance_at_fixed_point(omega_hat in 1e-2..1e2f64, eps_hat in 1e-2..1e2f64, xi in 0.0..0.95f64, target in -10.0..10.0f64) {
        let star = fixed_point_impact(omega_hat, eps_hat, &ImpactModel::CostAverse { xi_hat: xi }).unwrap();
        let phi = phi_from_xi(xi, eps_hat, omega_hat).unwrap();
        let q = cost_averse_noise_demand(target, star, phi).unwrap();
        prop_assert!((q - (1.0 - xi) * target).abs() <= 1e-12 * target.abs().max(1e-300));
    }

    // Engine.

    #[test]
    fn engine_sign_symmetry(seed in any::<u64>(), eps2_hat in 0.6..2.0f64, deps2 in 0.0..0.2f64, tau in 0.0..200.0f64, xi in 0.0..0.9f64, averse in any::<bool>()) {
        let cfg = SimulationConfig {
            conditions: MarketConditions { noise_var_fluct: deps2, noise_timescale: tau, ..Default::default() },
            beliefs0: MarketMakerBeliefs::risk_neutral(1.0, eps2_hat.sqrt()),
            noise_profile: if averse { NoiseTraderProfile::cost_averse(xi) } else { NoiseTraderProfile::passive() },
            tau_rev: 20,
            revisions: 10,
            seed,
            ..Default::default()
        };
        let base = run_simulation(&cfg).unwrap();
        let neg = run_simulation_with(&cfg, &mut Negated(SeededInnovations::new(seed))).unwrap();
        prop_assert_eq!(base.rounds.len(), neg.rounds.len());
        for t in 0..base.rounds.len() {
            prop_assert_eq!(neg.rounds.price[t], -base.rounds.price[t]);
            prop_assert_eq!(neg.rounds.impact[t], base.rounds.impact[t]);
        }
        prop_assert_eq!(&neg.revisions, &base.revisions);
    }

    #[test]
    fn impact_relaxes_between_revisions(seed in any::<u64>(), eps2_hat in 0.6..2.0f64, variant in 0..3usize, sharpe in 0.0..0.5f64, xi in 0.0..0.8f64, extra in 0..100usize) {
        let (model, profile, beliefs, tau_xi) = match variant {
            0 => (ImpactModel::RiskNeutral, NoiseTraderProfile::passive(), MarketMakerBeliefs::risk_neutral(1.0, eps2_hat.sqrt()), 1.0),
            1 => (
                ImpactModel::RiskAverse { sharpe },
                NoiseTraderProfile::passive(),
                MarketMakerBeliefs { sharpe_target: sharpe, ..MarketMakerBeliefs::risk_neutral(1.0, eps2_hat.sqrt()) },
                1.0,
            ),
            _ => (
                ImpactModel::CostAverse { xi_hat: xi },
                NoiseTraderProfile::cost_averse(xi),
                MarketMakerBeliefs { cost_aversion_belief: xi, ..MarketMakerBeliefs::risk_neutral(1.0, eps2_hat.sqrt()) },
                1.0 / (1.0 - xi),
            ),
        };
        let settle = (50.0 * tau_xi).ceil() as usize;
        let tau_rev = 100.max(settle + 50) + extra;
        let cfg = SimulationConfig {
            conditions: MarketConditions { noise_var_fluct: 0.1, noise_timescale: 30.0, ..Default::default() },
            beliefs0: beliefs,
            noise_profile: profile,
            tau_rev,
            revisions: 4,
            seed,
            ..Default::default()
        };
        let path = run_simulation(&cfg).unwrap();
        prop_assert!(!path.diverged);
        let eps_hat = eps2_hat.sqrt();
        let mut omega_hat = 1.0;
        for k in 0..cfg.revisions {
            let target = fixed_point_impact(omega_hat, eps_hat, &model).unwrap();
            for i in settle + 1..tau_rev {
                let l = path.rounds.impact[k * tau_rev + i];
                prop_assert!((l / target - 1.0).abs() < 1e-3, "block {k} round {i}: {l} vs {target}");
            }
            omega_hat = path.revisions.omega_hat[k];
        }
    }

    #[test]
    fn rational_frozen_market_keeps_constant_impact(seed in any::<u64>(), omega in 0.1..10.0f64, eps in 0.1..10.0f64) {
        let cfg = SimulationConfig {
            conditions: MarketConditions { fundamental_vol: omega, noise_vol: eps, ..Default::default() },
            beliefs0: MarketMakerBeliefs::risk_neutral(omega, eps),
            revise_beliefs: false,
            tau_rev: 50,
            revisions: 2,
            seed,
            ..Default::default()
        };
        let path = run_simulation(&cfg).unwrap();
        let star = omega / (2.0 * eps);
        for &l in &path.rounds.impact {
            prop_assert!(close(l, star, 1e-14));
        }
        for t in 0..path.rounds.len() {
            prop_assert_eq!(path.rounds.price[t], path.rounds.impact[t] * path.rounds.excess_demand[t]);
        }
    }

    // Coarse-time recursion.

    #[test]
    fn kesten_respects_additive_floor(seed in any::<u64>(), eps2_hat in 0.55..3.0f64, deps2 in 0.0..0.3f64, r in 0.0..20.0f64, variant in 0..3usize, sharpe in 0.0..0.3f64, xi in 0.0..0.9f64, xi_hat in 0.0..0.9f64) {
        let variant = match variant {
            0 => KestenVariant::Baseline,
            1 => KestenVariant::RiskAverse { sharpe },
            _ => KestenVariant::CostAverse { xi, xi_hat },
        };
        let cfg = KestenConfig { eps2_hat, deps2, r, variant, seed, revisions: 2000, ..Default::default() };
        let path = run_kesten(&cfg).unwrap();
        prop_assert!(path.x.iter().all(|&x| x >= 0.25));
    }

    #[test]
    fn kesten_mean_field_convergence(eps2_hat in 0.51..5.0f64, x0 in 0.0..10.0f64) {
        let budget = (20.0 / (1.0 - 0.5 / eps2_hat)).ceil() as usize;
        let cfg = KestenConfig { eps2_hat, x0, revisions: budget, ..Default::default() };
        let x = *run_kesten(&cfg).unwrap().x.last().unwrap();
        let mf = mf_excess_variance(1.0, eps2_hat).unwrap();
        prop_assert!((x / mf - 1.0).abs() < 1e-6, "{x} vs {mf} after {budget}");
    }

    #[test]
    fn kesten_stable_configs_stay_bounded(seed in any::<u64>(), eps2_hat in 0.6..3.0f64, deps2 in 0.0..0.1f64, r in 0.0..20.0f64) {
        let cfg = KestenConfig { eps2_hat, deps2, r, seed, revisions: 10_000, ..Default::default() };
        prop_assert!(!run_kesten(&cfg).unwrap().diverged);
    }

    #[test]
    fn kesten_unstable_configs_diverge(seed in any::<u64>(), eps2_hat in 0.1..0.45f64, deps2 in 0.0..0.1f64) {
        let cfg = KestenConfig { eps2_hat, deps2, seed, revisions: 10_000, ..Default::default() };
        prop_assert!(run_kesten(&cfg).unwrap().diverged);
    }

    #[test]
    fn tail_solver_meets_monte_carlo_moment(seed in any::<u64>(), deps2 in 0.05..0.3f64, f in 0.05..0.35f64) {
        let eps2_hat = 0.5 + f * deps2;
        let mu = tail_exponent_iid(1.0, deps2, eps2_hat).unwrap().mu;
        let mut s = ShockStream::new(seed, StreamId::NoiseVariance);
        let n = 20_000;
        let draws: Vec<f64> = (0..n)
            .map(|_| {
                let e = 1.0 + deps2 * s.next_normal();
                if e > 0.0 { (0.5 * e / eps2_hat).powf(0.5 * mu) } else { 0.0 }
            })
            .collect();
        let m = draws.iter().sum::<f64>() / n as f64;
        let sd = (draws.iter().map(|d| (d - m) * (d - m)).sum::<f64>() / (n - 1) as f64).sqrt();
        prop_assert!((m - 1.0).abs() < BAND * sd / (n as f64).sqrt(), "mu={mu}: moment {m} ± {}", sd / (n as f64).sqrt());
    }

    // Statistics.

    #[test]
    fn hill_recovers_pareto_exponent(seed in any::<u64>(), mu in 1.5..8.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..20_000).map(|_| (1.0 - rng.random::<f64>()).powf(-1.0 / mu)).collect();
        let r = hill_estimator(&x, 0.05).unwrap();
        prop_assert_eq!(r.k, 1000);
        prop_assert!((r.mu_hill / mu - 1.0).abs() < BAND / (r.k as f64).sqrt(), "{} vs {mu}", r.mu_hill);
        let scaled: Vec<f64> = x.iter().map(|v| v * 7.25).collect();
        prop_assert!(close(hill_estimator(&scaled, 0.05).unwrap().mu_hill, r.mu_hill, 1e-12));
    }

    #[test]
    fn survival_curve_is_scale_invariant(seed in any::<u64>(), scale in 1e-3..1e3f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..500).map(|_| rng.random::<f64>() + 0.01).collect();
        let scaled: Vec<f64> = x.iter().map(|v| v * scale).collect();
        let (la, pa) = survival_curve(&x, 30).unwrap();
        let (lb, pb) = survival_curve(&scaled, 30).unwrap();
        prop_assert!(pa.windows(2).all(|w| w[1] <= w[0]));
        for i in 0..la.len() {
            prop_assert!(close(la[i], lb[i], 1e-12));
        }
        // Levels may straddle a sample by rounding; allow one sample of slack.
        for i in 0..pa.len() {
            prop_assert!((pa[i] - pb[i]).abs() <= 1.0 / 500.0 + 1e-15);
        }
    }

    #[test]
    fn acf_is_affine_invariant(seed in any::<u64>(), shift in -100.0..100.0f64, scale in 1e-2..1e2f64) {
        let mut s = ShockStream::new(seed, StreamId::Fundamental);
        let mut v = 0.0;
        let x: Vec<f64> = (0..2000).map(|_| { v = 0.7 * v + s.next_normal(); v }).collect();
        let y: Vec<f64> = x.iter().map(|v| shift + scale * v).collect();
        let a = sample_acf(&x, 20).unwrap();
        let b = sample_acf(&y, 20).unwrap();
        for l in 0..=20 {
            prop_assert!((a.values[l] - b.values[l]).abs() < 1e-9);
        }
    }

    #[test]
    fn exponential_fits_recover_timescales(tau1 in 1.0..15.0f64, ratio in 5.0..20.0f64, w in 0.2..0.8f64, noise_seed in any::<u64>()) {
        let tau2 = tau1 * ratio;
        let max_lag = (4.0 * tau2).min(400.0) as usize;
        let mut rng = ChaCha8Rng::seed_from_u64(noise_seed);
        let single = synthetic(&[(1.0, tau1)], (6.0 * tau1) as usize + 10, &mut rng, 0.0);
        let fit = fit_exponentials(&single, 1).unwrap();
        prop_assert!((fit.fitted_timescales[0] / tau1 - 1.0).abs() < 0.05);

        let mixture = synthetic(&[(w, tau1), (1.0 - w, tau2)], max_lag, &mut rng, 1e-4);
        let two = fit_exponentials(&mixture, 2).unwrap();
        let one = fit_exponentials(&mixture, 1).unwrap();
        prop_assert!(two.fit_residual.unwrap() <= one.fit_residual.unwrap());
        prop_assert!(two.fitted_timescales[0] <= two.fitted_timescales[1]);
        prop_assert!((two.fitted_timescales[0] / tau1 - 1.0).abs() < 0.1, "{:?} vs {tau1},{tau2}", two.fitted_timescales);
        prop_assert!((two.fitted_timescales[1] / tau2 - 1.0).abs() < 0.1, "{:?} vs {tau1},{tau2}", two.fitted_timescales);
        prop_assert!(two.fit_weights.iter().all(|&w| w >= 0.0) && two.fit_weights.iter().sum::<f64>() <= 1.0 + 1e-12);
    }
}

/// Exponential-mixture ACF with optional uniform jitter of size `noise`.
fn synthetic(terms: &[(f64, f64)], max_lag: usize, rng: &mut ChaCha8Rng, noise: f64) -> AcfReport {
    let values = (0..=max_lag)
        .map(|l| {
            if l == 0 {
                return 1.0;
            }
            let v: f64 = terms.iter().map(|(w, t)| w * (-(l as f64) / t).exp()).sum();
            v + noise * (2.0 * rng.random::<f64>() - 1.0)
        })
        .collect();
    AcfReport {
        lags: (0..=max_lag).collect(),
        values,
        fitted_timescales: vec![],
        fit_weights: vec![],
        fit_residual: None,
        undersampled: false,
    }
}
