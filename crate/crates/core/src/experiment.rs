//! Ready-made experiments returning named metrics and pass/fail checks.
//!
//! The command-line tool and the acceptance tests both run these, so a
//! number printed by one is the number checked by the other.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::engine::{final_positions, run_ensemble, PathObserver};
use crate::error::Result;
use crate::jumpchain::{
    chain_step, coupling_ensemble, invariant_acceptance_rate, run_chain, sample_invariant_counted,
    ChainHarvester, CouplingParams, JumpRecord,
};
use crate::model::{BindingMeasure, BindingWindow, EngineKind, JumpEvent, RatchetParams, VariantSpec};
use crate::renewal::stats::{
    clt_check, exp_tail_fit, ks_one_sample, ks_two_sample, lag1_autocorrelation, mean_se, KsResult,
};
use crate::renewal::{cycle_statistics, summarize_remainders, RemainderSummary, RenewalCycle, RenewalTracker};
use crate::special::airy::{ai_prime_zero, ai_zero, airy};
use crate::special::green::{expected_jump_time_fast, killing_position_density};
use crate::special::quad::integrate_pieces;
use crate::special::{ai_tail_integral, invariant_cdf, invariant_mean_gap, invariant_mean_time, speed};
use crate::variants::{delta_jump_position_check, delta_ratchet_speed};

/// Significance level of every distributional test.
pub const ALPHA: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    pub value: f64,
    /// `None` marks an analytic value.
    pub stderr: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub statistic: f64,
    pub p_value: Option<f64>,
    pub pass: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub metrics: BTreeMap<String, Metric>,
    pub tests: BTreeMap<String, Check>,
}

impl Outcome {
    pub fn metric(&mut self, name: &str, value: f64, stderr: f64) {
        self.metrics.insert(name.into(), Metric { value, stderr: Some(stderr) });
    }

    pub fn analytic(&mut self, name: &str, value: f64) {
        self.metrics.insert(name.into(), Metric { value, stderr: None });
    }

    pub fn check(&mut self, name: &str, statistic: f64, pass: bool) {
        self.tests.insert(
            name.into(),
            Check {
                statistic,
                p_value: None,
                pass,
            },
        );
    }

    /// Record a KS test; it passes when the null is not rejected at [`ALPHA`].
    pub fn ks(&mut self, name: &str, ks: &KsResult) {
        self.tests.insert(
            name.into(),
            Check {
                statistic: ks.statistic,
                p_value: Some(ks.p_value),
                pass: ks.passes(ALPHA),
            },
        );
    }

    pub fn merge(&mut self, other: Outcome) {
        self.metrics.extend(other.metrics);
        self.tests.extend(other.tests);
    }

    pub fn passed(&self) -> bool {
        self.tests.values().all(|c| c.pass)
    }

    pub fn failures(&self) -> Vec<&str> {
        self.tests
            .iter()
            .filter(|(_, c)| !c.pass)
            .map(|(k, _)| k.as_str())
            .collect()
    }
}

fn rel_dev(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

/// Standard error of a correlated series from `batches` batch means.
pub fn batch_means_se(v: &[f64], batches: usize) -> f64 {
    let size = v.len() / batches.max(1);
    if size == 0 {
        return f64::NAN;
    }
    let means: Vec<f64> = v
        .chunks_exact(size)
        .map(|c| c.iter().sum::<f64>() / size as f64)
        .collect();
    mean_se(&means).1
}

/// Exact identities of the special functions, in well under a second.
pub fn identities() -> Outcome {
    let mut o = Outcome::default();
    let inv_pi = std::f64::consts::FRAC_1_PI;
    let wronskian = (0..=1000)
        .map(|i| {
            let b = airy(i as f64 * 0.01).expect("grid point is valid");
            (b.wronskian() - inv_pi).abs()
        })
        .fold(0.0, f64::max);
    o.check("wronskian_max_deviation", wronskian, wronskian <= 1e-10);

    let total = ai_tail_integral(0.0_f64).unwrap_or(f64::NAN);
    o.analytic("ai_total_integral", total);
    o.check("ai_integral_is_one_third", (total - 1.0 / 3.0).abs(), (total - 1.0 / 3.0).abs() <= 1e-10);

    let mut worst: f64 = 0.0;
    for x in [0.0, 0.5, 1.0, 2.0, 4.0] {
        let breaks: Vec<f64> = [0.0, 0.5 * x, x, x + 1.0, x + 3.0, x + 6.0, x + 12.0, x + 24.0, x + 48.0]
            .into_iter()
            .filter(|&b| b >= 0.0)
            .collect();
        let mut breaks = breaks;
        breaks.dedup();
        let mass = integrate_pieces(
            |y| killing_position_density(x, y).unwrap_or(f64::NAN),
            &breaks,
            1e-12,
        );
        o.analytic(&format!("killing_mass_x{x}"), mass);
        worst = worst.max((mass - 1.0).abs());
    }
    o.check("killing_density_normalized", worst, worst <= 1e-6);

    let c1 = speed(1.0_f64).unwrap_or(f64::NAN);
    o.analytic("speed_gamma_1", c1);
    o.check("speed_gamma_1_value", (c1 - 0.459248).abs(), (c1 - 0.459248).abs() <= 1e-6);

    let half = speed(0.5_f64).unwrap_or(f64::NAN);
    let ratio = (-3.0 * ai_prime_zero::<f64>()) / (6.0 * ai_zero::<f64>());
    o.analytic("speed_gamma_half", half);
    o.check("speed_half_is_moment_ratio", (half - ratio).abs(), (half - ratio).abs() <= 1e-10);

    let avg = integrate_pieces(
        |z: f64| 3.0 * airy(z).map_or(f64::NAN, |b| b.ai) * expected_jump_time_fast(z),
        &[0.0, 0.5, 1.0, 2.0, 4.0, 8.0, 15.9, 24.0, 40.0],
        1e-11,
    );
    let six_ai0 = invariant_mean_time::<f64>();
    o.analytic("stationary_mean_jump_time", avg);
    o.check("stationary_jump_time_is_6ai0", (avg - six_ai0).abs(), (avg - six_ai0).abs() <= 1e-6);
    o
}

/// Jump ratios `(R⁺ − R⁻)/(X − R⁻)`, uniform on `(0, 1)` for the base model.
#[derive(Clone, Debug, Default)]
pub struct JumpRatios {
    pub ratios: Vec<f64>,
}

impl PathObserver<f64> for JumpRatios {
    fn jump(&mut self, j: &JumpEvent<f64>) {
        let g = j.x_pre - j.r_pre;
        if g > 0.0 {
            self.ratios.push((j.r_post - j.r_pre) / g);
        }
    }
}

type BaseObserver = (RenewalTracker<f64>, (ChainHarvester<f64>, JumpRatios));

/// Everything read off one path ensemble.
#[derive(Clone, Debug)]
pub struct BaseEnsemble {
    pub gamma: f64,
    pub engine: EngineKind,
    pub t_obs: f64,
    /// `X` at `t_obs` per replica.
    pub x_t: Vec<f64>,
    pub trackers: Vec<RenewalTracker<f64>>,
    /// Harvested jump chain in γ = 1/2 units.
    pub harvest: Vec<JumpRecord<f64>>,
    pub jump_ratios: Vec<f64>,
    pub cycles: Vec<RenewalCycle<f64>>,
    pub checkpoint_times: Vec<f64>,
    pub max_residual: f64,
    pub residual_checks: usize,
}

/// Jumps skipped before harvesting the chain from a path.
pub const HARVEST_BURN_IN: usize = 100;
/// Keep every this-many-th harvested jump.
pub const HARVEST_THIN: usize = 5;

/// Run `params` and observe `X` at `t_obs ≤ t_max` plus the checkpoints.
/// Running past `t_obs` lets the remainder `A_t` see the next renewal
/// without changing the path before `t_obs`.
pub fn run_base_ensemble(params: &RatchetParams<f64>, t_obs: f64, checkpoints: &[f64]) -> Result<BaseEnsemble> {
    let mut times: Vec<f64> = checkpoints.iter().copied().chain([t_obs]).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let obs_index = times.iter().position(|&t| t == t_obs).unwrap_or(0);
    let gamma = params.gamma;
    let x0 = params.x0;
    let observers: Vec<BaseObserver> = run_ensemble(params, 1, |_| {
        (
            RenewalTracker::new().with_decomposition_check().with_checkpoints(&times),
            (ChainHarvester::new(gamma, x0, HARVEST_BURN_IN, HARVEST_THIN), JumpRatios::default()),
        )
    })?;
    let mut ens = BaseEnsemble {
        gamma,
        engine: params.engine,
        t_obs,
        x_t: Vec::with_capacity(observers.len()),
        trackers: Vec::with_capacity(observers.len()),
        harvest: Vec::new(),
        jump_ratios: Vec::new(),
        cycles: Vec::new(),
        checkpoint_times: times,
        max_residual: 0.0,
        residual_checks: 0,
    };
    for (tracker, (harvester, ratios)) in observers {
        ens.x_t.push(tracker.checkpoints()[obs_index].x);
        ens.cycles.extend_from_slice(tracker.cycles());
        let (r, n) = tracker.decomposition_residual();
        ens.max_residual = ens.max_residual.max(r);
        ens.residual_checks += n;
        ens.harvest.extend(harvester.into_records());
        ens.jump_ratios.extend(ratios.ratios);
        ens.trackers.push(tracker);
    }
    Ok(ens)
}

/// `X_t/t` against `C_γ`: within 2% and within 3 standard errors.
pub fn lln(ens: &BaseEnsemble) -> Result<Outcome> {
    let mut o = Outcome::default();
    let c = speed(ens.gamma)?;
    let v: Vec<f64> = ens.x_t.iter().map(|x| x / ens.t_obs).collect();
    let (m, se) = mean_se(&v);
    let tag = ens.engine.to_string();
    o.analytic("speed_analytic", c);
    o.metric(&format!("speed_ensemble_{tag}"), m, se);
    o.check(&format!("speed_{tag}_within_2pct"), rel_dev(m, c), rel_dev(m, c) <= 0.02);
    o.check(&format!("speed_{tag}_within_3se"), (m - c).abs() / se, (m - c).abs() <= 3.0 * se);
    Ok(o)
}

/// Renewal-reward estimates from the pooled cycles of an ensemble.
pub fn renewal(ens: &BaseEnsemble) -> Result<Outcome> {
    let mut o = Outcome::default();
    let c = speed(ens.gamma)?;
    let s = cycle_statistics(&ens.cycles)?;
    o.metric("speed_renewal", s.speed, s.speed_se);
    o.metric("sigma_renewal", s.sigma_hat, s.sigma_se);
    o.analytic("cycles", s.n_cycles as f64);
    o.check("speed_renewal_within_2pct", rel_dev(s.speed, c), rel_dev(s.speed, c) <= 0.02);
    o.check("sigma_renewal_in_band", s.sigma_hat, (0.55..=0.66).contains(&s.sigma_hat));
    let half: Vec<RenewalCycle<f64>> = ens.trackers[..ens.trackers.len() / 2]
        .iter()
        .flat_map(|t| t.cycles().iter().copied())
        .collect();
    if let Ok(h) = cycle_statistics(&half) {
        let drift = rel_dev(h.duration_m2, s.duration_m2).max(rel_dev(h.displacement_m2, s.displacement_m2));
        o.analytic("duration_second_moment", s.duration_m2);
        o.analytic("displacement_second_moment", s.displacement_m2);
        o.check("second_moments_stable", drift, s.duration_m2.is_finite() && drift <= 0.25);
    }
    let disp: Vec<f64> = ens.cycles.iter().map(|c| c.displacement).collect();
    let rho = lag1_autocorrelation(&disp)?;
    let bound = 3.0 / (disp.len() as f64).sqrt();
    o.check("cycle_lag1_autocorrelation", rho, rho.abs() <= bound);
    Ok(o)
}

/// Engine-harvested gaps against the stationary law `3·Ai`.
pub fn harvest_invariance(ens: &BaseEnsemble, min: usize) -> Result<Outcome> {
    let mut o = Outcome::default();
    let y: Vec<f64> = ens.harvest.iter().map(|r| r.y).collect();
    let ks = ks_one_sample(&y, |z| invariant_cdf(z).unwrap_or(f64::NAN))?;
    o.analytic("harvested_jumps", y.len() as f64);
    o.check("harvested_count", y.len() as f64, y.len() >= min);
    o.ks("harvested_gap_vs_3ai", &ks);
    Ok(o)
}

/// Remainder trend, decomposition, uniform jumps.
pub fn structure(ens: &BaseEnsemble, trend_times: &[f64]) -> Result<Outcome> {
    let mut o = Outcome::default();
    o.analytic("decomposition_max_residual", ens.max_residual);
    o.analytic("decomposition_points", ens.residual_checks as f64);
    o.check(
        "decomposition_exact",
        ens.max_residual,
        ens.residual_checks > 0 && ens.max_residual <= 1e-9,
    );
    let ks = ks_one_sample(&ens.jump_ratios, |u| u.clamp(0.0, 1.0))?;
    o.ks("jump_ratio_uniform", &ks);
    let summaries: Vec<RemainderSummary> = trend_times
        .iter()
        .filter_map(|t| ens.checkpoint_times.iter().position(|c| c == t))
        .map(|i| summarize_remainders(&ens.trackers, i))
        .collect();
    for s in &summaries {
        o.metric(&format!("abs_remainder_over_sqrt_t_{}", s.t), s.mean_abs_remainder, s.se_abs_remainder);
        o.metric(&format!("gap_over_sqrt_t_{}", s.t), s.mean_gap, s.se_gap);
    }
    let decreasing = |f: fn(&RemainderSummary) -> f64| summaries.windows(2).all(|w| f(&w[1]) < f(&w[0]));
    let complete = summaries.len() == trend_times.len() && summaries.len() >= 2;
    o.check(
        "remainder_decreasing",
        summaries.last().map_or(f64::NAN, |s| s.mean_abs_remainder),
        complete && decreasing(|s| s.mean_abs_remainder),
    );
    o.check(
        "gap_decreasing",
        summaries.last().map_or(f64::NAN, |s| s.mean_gap),
        complete && decreasing(|s| s.mean_gap),
    );
    Ok(o)
}

/// Tail of engine waiting times (γ = 1/2 units) is log-linear.
pub fn eta_tail(params: &RatchetParams<f64>) -> Result<Outcome> {
    let mut o = Outcome::default();
    let (gamma, x0) = (params.gamma, params.x0);
    let eta: Vec<f64> = run_ensemble(params, 1, |_| ChainHarvester::<f64>::new(gamma, x0, HARVEST_BURN_IN, 1))?
        .into_iter()
        .flat_map(|h| h.into_records())
        .filter_map(|r| r.eta_sampled)
        .collect();
    let fit = exp_tail_fit(&eta)?;
    let (m, se) = mean_se(&eta);
    o.metric("eta_mean", m, se);
    o.analytic("eta_tail_rate", fit.rate);
    o.check("eta_tail_r_squared", fit.r_squared, fit.r_squared >= 0.98);
    Ok(o)
}

/// Exact chain at γ = 1/2: speed ratio and stationary means.
pub fn chain(n: usize, y0: f64, seed: u64) -> Result<(Outcome, Vec<JumpRecord<f64>>)> {
    let mut o = Outcome::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let recs = run_chain(n, y0, &mut rng)?;
    let w: f64 = recs.iter().map(|r| r.w).sum();
    let e: f64 = recs.iter().map(|r| r.eta_expected).sum();
    let ratio = w / e;
    let y: Vec<f64> = recs.iter().map(|r| r.y).collect();
    let eta: Vec<f64> = recs.iter().map(|r| r.eta_expected).collect();
    let c = speed(0.5_f64)?;
    let (my, ey) = (y.iter().sum::<f64>() / n as f64, batch_means_se(&y, 100));
    let (me, ee) = (e / n as f64, batch_means_se(&eta, 100));
    o.analytic("speed_half_analytic", c);
    o.metric("speed_chain", ratio, ratio * (ey / my).hypot(ee / me));
    o.metric("mean_y", my, ey);
    o.metric("mean_eta_expected", me, ee);
    let gap = invariant_mean_gap::<f64>();
    let time = invariant_mean_time::<f64>();
    o.check("chain_speed_within_1pct", rel_dev(ratio, c), rel_dev(ratio, c) <= 0.01);
    o.check("chain_mean_y_within_1pct", rel_dev(my, gap), rel_dev(my, gap) <= 0.01);
    o.check("chain_mean_eta_within_1pct", rel_dev(me, time), rel_dev(me, time) <= 0.01);
    Ok((o, recs))
}

/// Invariant sampler and one chain step from it, both against `3·Ai`.
pub fn invariant_sampler(n: usize, seed: u64) -> Result<Outcome> {
    let mut o = Outcome::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tries = 0;
    let draws: Vec<f64> = (0..n)
        .map(|_| {
            let (z, k) = sample_invariant_counted(&mut rng);
            tries += k;
            z
        })
        .collect();
    let cdf = |z: f64| invariant_cdf(z).unwrap_or(f64::NAN);
    let acc = n as f64 / tries as f64;
    o.metric("acceptance_rate", acc, (acc * (1.0 - acc) / tries as f64).sqrt());
    o.analytic("acceptance_rate_exact", invariant_acceptance_rate());
    let (m, se) = mean_se(&draws);
    o.metric("invariant_mean", m, se);
    o.ks("invariant_draws_vs_3ai", &ks_one_sample(&draws, cdf)?);
    let pushed: Vec<f64> = draws
        .iter()
        .map(|&y| chain_step(y, &mut rng).map(|r| r.y))
        .collect::<Result<_>>()?;
    o.ks("stationary_step_vs_3ai", &ks_one_sample(&pushed, cdf)?);
    Ok(o)
}

fn finals(gamma: f64, t: f64, dt: f64, n: usize, seed: u64, engine: EngineKind, substeps: usize) -> Result<Vec<f64>> {
    let p = RatchetParams::new(gamma, t, dt)
        .with_replicas(n)
        .with_seed(seed)
        .with_engine(engine);
    final_positions(&p, substeps)
}

/// Normality of `(X_t − C_γ t)/(σ̂√t)` and γ-independence of `σ̂`.
/// Normality and the band apply to `primary`; every γ enters the
/// pairwise comparison.
pub fn clt(gammas: &[f64], primary: f64, t: f64, dt: f64, n: usize, seed: u64, engine: EngineKind) -> Result<Outcome> {
    let mut o = Outcome::default();
    let mut sig = Vec::new();
    for (k, &g) in gammas.iter().enumerate() {
        let x = finals(g, t, dt, n, seed.wrapping_add(k as u64), engine, 1)?;
        let r = clt_check(&x, t, g)?;
        o.metric(&format!("sigma_gamma_{g}"), r.sigma_hat, r.sigma_se);
        o.metric(&format!("mean_standardized_gamma_{g}"), r.mean_standardized, 1.0 / (n as f64).sqrt());
        if g == primary {
            o.ks(&format!("normality_gamma_{g}"), &r.ks_normal);
            o.check("sigma_in_band", r.sigma_hat, (0.55..=0.66).contains(&r.sigma_hat));
        } else {
            o.analytic(&format!("normality_p_gamma_{g}"), r.ks_normal.p_value);
        }
        sig.push((g, r.sigma_hat, r.sigma_se));
    }
    let mut worst: f64 = 0.0;
    for i in 0..sig.len() {
        for j in i + 1..sig.len() {
            let z = (sig[i].1 - sig[j].1).abs() / sig[i].2.hypot(sig[j].2);
            worst = worst.max(z);
        }
    }
    o.check("sigma_gamma_independent", worst, worst <= 3.0);
    Ok(o)
}

/// `X_t` at rate γ against `γ^{-1/3}·X` at rate 1 and time `γ^{2/3}t`.
pub fn scaling(gamma: f64, t: f64, dt: f64, n: usize, seed: u64, engine: EngineKind) -> Result<Outcome> {
    let mut o = Outcome::default();
    let a = finals(gamma, t, dt, n, seed, engine, 1)?;
    let t1 = gamma.powf(2.0 / 3.0) * t;
    let scale = gamma.powf(-1.0 / 3.0);
    let b: Vec<f64> = finals(1.0, t1, dt, n, seed.wrapping_add(1), engine, 1)?
        .into_iter()
        .map(|x| x * scale)
        .collect();
    let (ma, sa) = mean_se(&a);
    let (mb, sb) = mean_se(&b);
    o.metric("mean_direct", ma, sa);
    o.metric("mean_rescaled", mb, sb);
    o.ks("scaling_two_sample", &ks_two_sample(&a, &b)?);
    Ok(o)
}

/// Thinning against graphical, and thinning at `dt` against `dt/2` with
/// shared random numbers.
pub fn cross_engine(gamma: f64, t: f64, dt: f64, n: usize, seed: u64) -> Result<Outcome> {
    let mut o = Outcome::default();
    let a = finals(gamma, t, dt, n, seed, EngineKind::Thinning, 1)?;
    let b = finals(gamma, t, dt, n, seed.wrapping_add(1), EngineKind::Graphical, 1)?;
    o.ks("engines_two_sample", &ks_two_sample(&a, &b)?);
    let coarse: Vec<f64> = finals(gamma, t, dt, n, seed, EngineKind::Thinning, 2)?
        .into_iter()
        .map(|x| x / t)
        .collect();
    let fine: Vec<f64> = finals(gamma, t, 0.5 * dt, n, seed, EngineKind::Thinning, 1)?
        .into_iter()
        .map(|x| x / t)
        .collect();
    let (mc, sc) = mean_se(&coarse);
    let (mf, sf) = mean_se(&fine);
    let pooled = sc.hypot(sf);
    o.metric("speed_dt", mc, sc);
    o.metric("speed_half_dt", mf, sf);
    o.check("dt_halving_within_1se", (mc - mf).abs() / pooled, (mc - mf).abs() <= pooled);
    Ok(o)
}

/// Pore-binding speed against `√(γ/2)`.
pub fn delta_speed(gamma: f64, t: f64, dt: f64, n: usize, seed: u64) -> Result<Outcome> {
    let mut o = Outcome::default();
    let p = RatchetParams::new(gamma, t, dt)
        .with_replicas(n)
        .with_seed(seed)
        .with_variant(VariantSpec::binding(BindingMeasure::DeltaAtPore { mass: 1.0 }));
    let v: Vec<f64> = final_positions(&p, 1)?.into_iter().map(|x| x / t).collect();
    let (m, se) = mean_se(&v);
    let c = delta_ratchet_speed(gamma)?;
    o.analytic("delta_speed_analytic", c);
    o.metric("delta_speed", m, se);
    o.check("delta_speed_within_2pct", rel_dev(m, c), rel_dev(m, c) <= 0.02);
    Ok(o)
}

/// Pore-binding jump positions against `Exp((2γ)^{1/2})`.
pub fn delta_jumps(gamma: f64, n: usize, dt: f64, seed: u64) -> Result<Outcome> {
    let mut o = Outcome::default();
    let c = delta_jump_position_check(gamma, n, dt, seed)?;
    o.metric("delta_jump_mean", c.mean, c.mean_se);
    o.analytic("delta_jump_mean_analytic", c.expected_mean);
    o.ks("delta_jump_exponential", &c.ks);
    Ok(o)
}

/// Dissociation at rate zero with binding above the boundary against the
/// base ratchet.
pub fn dissociation_equivalence(gamma: f64, t: f64, dt: f64, n: usize, seed: u64) -> Result<Outcome> {
    let mut o = Outcome::default();
    let base = finals(gamma, t, dt, n, seed, EngineKind::Thinning, 1)?;
    let p = RatchetParams::new(gamma, t, dt)
        .with_replicas(n)
        .with_seed(seed.wrapping_add(1))
        .with_variant(VariantSpec::dissociation(0.0, BindingWindow::AboveBoundary));
    let var = final_positions(&p, 1)?;
    o.ks("dissociation_zero_matches_base", &ks_two_sample(&base, &var)?);
    Ok(o)
}

/// Slow dissociation (`rate = 0.01·γ^{2/3}`) barely changes the speed.
pub fn dissociation_regime(gamma: f64, t: f64, dt: f64, n: usize, seed: u64) -> Result<Outcome> {
    let mut o = Outcome::default();
    let rate = 0.01 * gamma.powf(2.0 / 3.0);
    let p = RatchetParams::new(gamma, t, dt)
        .with_replicas(n)
        .with_seed(seed)
        .with_variant(VariantSpec::dissociation(rate, BindingWindow::Full));
    let v: Vec<f64> = final_positions(&p, 1)?.into_iter().map(|x| x / t).collect();
    let (m, se) = mean_se(&v);
    let c = speed(gamma)?;
    o.metric("slow_dissociation_speed", m, se);
    o.check("slow_dissociation_within_5pct", rel_dev(m, c), rel_dev(m, c) <= 0.05);
    Ok(o)
}

/// Coupling from two reflection points: all replicas couple, failed
/// attempts average at most `2 + 3·se`.
pub fn coupling(p: &CouplingParams, replicas: usize, seed: u64) -> Result<Outcome> {
    let mut o = Outcome::default();
    let s = coupling_ensemble(p, replicas, seed)?;
    o.analytic("coupled", s.coupled as f64);
    o.analytic("mean_coupling_time", s.mean_time);
    o.analytic("mean_attempts", s.mean_attempts);
    o.metric("mean_failed_attempts", s.mean_failed, s.failed_se);
    o.check("all_coupled", s.coupled as f64, s.coupled == replicas);
    o.check(
        "failed_attempts_bounded",
        s.mean_failed,
        s.mean_failed <= 2.0 + 3.0 * s.failed_se,
    );
    Ok(o)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_suite_passes() {
        let o = identities();
        assert!(o.passed(), "{:?}", o.failures());
    }

    #[test]
    fn outcome_bookkeeping() {
        let mut o = Outcome::default();
        o.check("a", 1.0, true);
        assert!(o.passed());
        let mut p = Outcome::default();
        p.check("b", 2.0, false);
        o.merge(p);
        assert_eq!(o.failures(), vec!["b"]);
        assert!((batch_means_se(&[1.0; 100], 10)).abs() < 1e-15);
    }

    #[test]
    fn small_ensemble_runs_end_to_end() {
        let p = RatchetParams::new(1.0, 220.0, 1e-3).with_replicas(8).with_seed(2);
        let e = run_base_ensemble(&p, 200.0, &[100.0]).unwrap();
        assert_eq!(e.x_t.len(), 8);
        assert!(e.max_residual < 1e-9 && e.residual_checks > 0);
        assert!(!e.harvest.is_empty());
        let s = structure(&e, &[100.0, 200.0]).unwrap();
        assert!(s.tests.contains_key("decomposition_exact"));
    }
}
