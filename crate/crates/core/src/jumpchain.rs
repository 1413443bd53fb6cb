//! The chain `(Yₙ, Wₙ, ηₙ)` observed at boundary jumps: gap after the jump,
//! boundary increment and waiting time.
//!
//! Exact sampling works at γ = 1/2. There the gap between jumps is a
//! reflected Brownian motion killed at rate equal to its height, and the
//! killing position has a closed-form CDF (see [`crate::special::green`]).
//! That CDF is inverted directly, so no tabulation is needed.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::graphical::{bridge_hits, strictly_between};
use crate::engine::observer::PathObserver;
use crate::error::{check_nonneg, check_positive, Error, Result};
use crate::model::JumpEvent;
use crate::renewal::stats::mean_se;
use crate::rng::{exp1, uniform, uniform_open, BrownianDriver, ReplicaStreams};
use crate::special::airy::{ai_prime_zero, ai_zero, airy_scaled_unchecked, psi_scaled_unchecked};
use crate::special::green::expected_jump_time_fast;
use crate::Real;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpRecord<T> {
    /// Gap `X − R` right after the jump.
    pub y: T,
    /// Boundary increment of the jump.
    pub w: T,
    /// `E[η | previous gap]`.
    pub eta_expected: T,
    /// Observed waiting time, for chains read off a path.
    pub eta_sampled: Option<T>,
}

const NEWTON_MAX: usize = 200;

/// Solve `f(y) = 0` for increasing `f` on `[lo, hi]` by Newton steps kept
/// inside a shrinking bracket. `f` returns the value and derivative.
fn solve_increasing(mut lo: f64, mut hi: f64, start: f64, f: impl Fn(f64) -> (f64, f64)) -> f64 {
    let mut y = start.clamp(lo, hi);
    for _ in 0..NEWTON_MAX {
        let (v, d) = f(y);
        if v == 0.0 {
            return y;
        }
        if v < 0.0 {
            lo = y;
        } else {
            hi = y;
        }
        let newton = y - v / d;
        let next = if d > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - y).abs() <= 1e-14 * (1.0 + y) || hi - lo <= 1e-14 * (1.0 + hi) {
            return next;
        }
        y = next;
    }
    y
}

fn killing_position_f64<R: Rng + ?Sized>(x: f64, rng: &mut R) -> f64 {
    let pi = std::f64::consts::PI;
    let ax = airy_scaled_unchecked(x);
    let px = psi_scaled_unchecked(x);
    // P(killed above x); the exponential scalings cancel.
    let upper = pi * px.psi * (-ax.ai_prime);
    let w: f64 = uniform_open(rng);
    if w < upper {
        // π ψ(x)·(−Ai′(y)) = w for y ≥ x, in logs.
        let target = (w / (pi * px.psi)).ln() - px.zeta;
        let g = |y: f64| {
            let a = airy_scaled_unchecked(y);
            let v = target - ((-a.ai_prime).ln() - a.zeta);
            (v, y * a.ai / -a.ai_prime)
        };
        let mut hi = x + 1.0;
        while g(hi).0 < 0.0 {
            hi = x + 2.0 * (hi - x);
        }
        solve_increasing(x, hi, x + 0.5, g)
    } else {
        if x == 0.0 {
            return 0.0;
        }
        // π Ai(x)·ψ′(y) = 1 − w for y ≤ x.
        let target = ((1.0 - w) / (pi * ax.ai)).ln() + ax.zeta;
        let g = |y: f64| {
            if y <= 0.0 {
                return (f64::NEG_INFINITY, f64::INFINITY);
            }
            let p = psi_scaled_unchecked(y);
            (p.psi_prime.ln() + p.zeta - target, y * p.psi / p.psi_prime)
        };
        solve_increasing(0.0, x, 0.5 * x, g)
    }
}

/// Position at which reflected Brownian motion from `x`, killed at rate
/// equal to its height, is killed. Exact inversion of the closed-form CDF.
pub fn sample_killing_position<T: Real, R: Rng + ?Sized>(x: T, rng: &mut R) -> Result<T> {
    check_nonneg("x", x)?;
    Ok(T::lit(killing_position_f64(x.as_f64(), rng)))
}

/// One transition from gap `y`: kill the gap process, then put the new
/// boundary uniformly below the killed position.
pub fn chain_step<T: Real, R: Rng + ?Sized>(y: T, rng: &mut R) -> Result<JumpRecord<T>> {
    check_nonneg("y", y)?;
    Ok(chain_step_f64(y.as_f64(), rng).cast())
}

fn chain_step_f64<R: Rng + ?Sized>(y: f64, rng: &mut R) -> JumpRecord<f64> {
    let b = killing_position_f64(y, rng);
    let u: f64 = uniform(rng);
    let y_next = b * u;
    JumpRecord {
        y: y_next,
        w: b - y_next,
        eta_expected: expected_jump_time_fast(y),
        eta_sampled: None,
    }
}

impl JumpRecord<f64> {
    fn cast<T: Real>(self) -> JumpRecord<T> {
        JumpRecord {
            y: T::lit(self.y),
            w: T::lit(self.w),
            eta_expected: T::lit(self.eta_expected),
            eta_sampled: self.eta_sampled.map(T::lit),
        }
    }
}

/// `n` consecutive transitions from `y0`; nothing is discarded.
pub fn run_chain<T: Real, R: Rng + ?Sized>(n: usize, y0: T, rng: &mut R) -> Result<Vec<JumpRecord<T>>> {
    check_nonneg("y0", y0)?;
    if n == 0 {
        return Err(Error::TooFew {
            what: "chain steps",
            got: 0,
            min: 1,
        });
    }
    let mut y = y0.as_f64();
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let rec = chain_step_f64(y, rng);
        y = rec.y;
        out.push(rec.cast());
    }
    Ok(out)
}

/// Rate of the exponential envelope, `−Ai′(0)/Ai(0)`.
pub fn invariant_envelope_rate() -> f64 {
    -ai_prime_zero::<f64>() / ai_zero::<f64>()
}

/// Probability that one envelope proposal is accepted, `λ/(3Ai(0))`.
pub fn invariant_acceptance_rate() -> f64 {
    invariant_envelope_rate() / (3.0 * ai_zero::<f64>())
}

/// Draw from the stationary gap density `3·Ai` by rejection from
/// `Exp(λ)`. `Ai(z)·e^{λz}` is decreasing because `Ai` is log-concave.
pub fn sample_invariant<T: Real, R: Rng + ?Sized>(rng: &mut R) -> T {
    T::lit(sample_invariant_counted(rng).0)
}

/// Like [`sample_invariant`], also returning the number of proposals.
pub fn sample_invariant_counted<R: Rng + ?Sized>(rng: &mut R) -> (f64, usize) {
    let lambda = invariant_envelope_rate();
    let log_ai0 = ai_zero::<f64>().ln();
    let mut tries = 0;
    loop {
        tries += 1;
        let z = exp1::<f64, _>(rng) / lambda;
        let a = airy_scaled_unchecked(z);
        let log_ratio = a.ai.ln() - a.zeta - log_ai0 + lambda * z;
        let u: f64 = uniform_open(rng);
        if u.ln() < log_ratio {
            return (z, tries);
        }
    }
}

/// Collects the jump chain from a running path engine, mapped to γ = 1/2
/// units (lengths times `(2γ)^{1/3}`, times times `(2γ)^{2/3}`).
#[derive(Clone, Debug)]
pub struct ChainHarvester<T> {
    length: f64,
    time: f64,
    burn_in: usize,
    thin: usize,
    seen: usize,
    last_tau: f64,
    last_y: f64,
    records: Vec<JumpRecord<T>>,
}

impl<T: Real> ChainHarvester<T> {
    /// Skip the first `burn_in` jumps, then keep every `thin`-th one.
    /// `x0` is the starting gap.
    pub fn new(gamma: f64, x0: f64, burn_in: usize, thin: usize) -> Self {
        let length = (2.0 * gamma).cbrt();
        Self {
            length,
            time: length * length,
            burn_in,
            thin: thin.max(1),
            seen: 0,
            last_tau: 0.0,
            last_y: x0 * length,
            records: Vec::new(),
        }
    }

    pub fn records(&self) -> &[JumpRecord<T>] {
        &self.records
    }

    pub fn into_records(self) -> Vec<JumpRecord<T>> {
        self.records
    }
}

impl<T: Real> PathObserver<T> for ChainHarvester<T> {
    fn jump(&mut self, j: &JumpEvent<T>) {
        let tau = j.tau.as_f64();
        let y = (j.x_pre - j.r_post).as_f64() * self.length;
        let rec = JumpRecord {
            y: T::lit(y),
            w: T::lit((j.r_post - j.r_pre).as_f64() * self.length),
            eta_expected: T::lit(expected_jump_time_fast(self.last_y)),
            eta_sampled: Some(T::lit((tau - self.last_tau) * self.time)),
        };
        self.seen += 1;
        if self.seen > self.burn_in && (self.seen - self.burn_in - 1) % self.thin == 0 {
            self.records.push(rec);
        }
        self.last_tau = tau;
        self.last_y = y;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingParams {
    pub gamma: f64,
    /// Common start of the Brownian path.
    pub x: f64,
    pub s1: f64,
    pub s2: f64,
    pub t_max: f64,
    pub dt: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingOutcome {
    /// First time both reflection points sit on the same field point.
    pub time: Option<f64>,
    pub attempts: usize,
    pub failed_attempts: usize,
}

/// Two graphical constructions sharing one Brownian path and one Poisson
/// field, started from reflection points `s1` and `s2`.
///
/// An attempt opens when `B` meets either reflection point and is settled
/// by that reflection point's next jump: it succeeds if the other one
/// jumps to the same field point. A coupling outside an open attempt
/// counts as one successful attempt.
pub fn coupling_experiment(p: &CouplingParams, streams: ReplicaStreams) -> Result<CouplingOutcome> {
    check_positive("gamma", p.gamma)?;
    check_positive("t_max", p.t_max)?;
    check_positive("dt", p.dt)?;
    for (name, v) in [("x", p.x), ("s1", p.s1), ("s2", p.s2)] {
        crate::error::check_finite(name, v)?;
    }
    let mut out = CouplingOutcome {
        time: None,
        attempts: 0,
        failed_attempts: 0,
    };
    if p.s1 == p.s2 {
        out.time = Some(0.0);
        return Ok(out);
    }
    let ReplicaStreams {
        brownian,
        mut jumps,
        mut touches,
    } = streams;
    let mut driver = BrownianDriver::new(brownian, 1);
    let sqrt_dt = p.dt.sqrt();
    let steps = (p.t_max / p.dt).ceil() as usize;
    let mut s = [p.s1, p.s2];
    let mut b = p.x;
    let mut pending: Option<usize> = None;
    for i in 0..steps {
        let t0 = i as f64 * p.dt;
        let b0 = b;
        let b1 = b0 + driver.increment(sqrt_dt);
        if pending.is_none() {
            pending = (0..2).find(|&k| bridge_hits(b0, b1, s[k], p.dt, &mut touches));
        }
        let lo = s[0].min(s[1]).min(b0).min(b1);
        let height = s[0].max(s[1]).max(b0).max(b1) - lo;
        let rate = p.gamma * height;
        let mut u = 0.0;
        loop {
            u += exp1::<f64, _>(&mut jumps) / rate;
            if u >= p.dt {
                break;
            }
            let y = lo + height * uniform::<f64, _>(&mut jumps);
            let bu = b0 + (b1 - b0) * (u / p.dt);
            let moved = [strictly_between(y, s[0], bu), strictly_between(y, s[1], bu)];
            if !(moved[0] || moved[1]) {
                continue;
            }
            for k in 0..2 {
                if moved[k] {
                    s[k] = y;
                }
            }
            let coupled = s[0] == s[1];
            let settled = pending.is_some_and(|k| moved[k]);
            if settled {
                out.attempts += 1;
                pending = None;
                if !coupled {
                    out.failed_attempts += 1;
                }
            } else if coupled {
                out.attempts += 1;
            }
            if coupled {
                out.time = Some(t0 + u);
                return Ok(out);
            }
        }
        b = b1;
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingSummary {
    pub replicas: usize,
    pub coupled: usize,
    pub mean_time: f64,
    pub mean_attempts: f64,
    pub mean_failed: f64,
    pub failed_se: f64,
    pub outcomes: Vec<CouplingOutcome>,
}

/// Run `replicas` independent coupling experiments in parallel.
pub fn coupling_ensemble(p: &CouplingParams, replicas: usize, seed: u64) -> Result<CouplingSummary> {
    let outcomes: Vec<CouplingOutcome> = (0..replicas)
        .into_par_iter()
        .map(|i| coupling_experiment(p, ReplicaStreams::new(seed, i as u64)))
        .collect::<Result<_>>()?;
    let times: Vec<f64> = outcomes.iter().filter_map(|o| o.time).collect();
    let attempts: Vec<f64> = outcomes.iter().map(|o| o.attempts as f64).collect();
    let failed: Vec<f64> = outcomes.iter().map(|o| o.failed_attempts as f64).collect();
    let (mean_failed, failed_se) = mean_se(&failed);
    Ok(CouplingSummary {
        replicas,
        coupled: times.len(),
        mean_time: mean_se(&times).0,
        mean_attempts: mean_se(&attempts).0,
        mean_failed,
        failed_se,
        outcomes,
    })
}
