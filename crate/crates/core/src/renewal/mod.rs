//! Regeneration structure and renewal-reward estimators.
//!
//! Renewal times: `ρ₀` is the first contact `X = R`; `ρ̃ₙ` the first boundary
//! jump after `ρₙ`; `ρₙ₊₁` the first contact after `ρ̃ₙ`. Between renewals the
//! pairs (duration, displacement of `X`) are i.i.d., which yields the speed
//! `μ/r` and diffusion constant `σ = β/√r`.

pub mod stats;

use serde::{Deserialize, Serialize};

use crate::engine::observer::PathObserver;
use crate::error::{Error, Result};
use crate::model::{JumpEvent, RatchetState, Touch, Trajectory};
use crate::Real;

/// Default contact tolerance for trajectories without engine touch flags.
pub const CSV_TOLERANCE: f64 = 1e-9;
/// Fewest cycles [`cycle_statistics`] accepts.
pub const MIN_CYCLES: usize = 30;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RenewalCycle<T> {
    pub duration: T,
    pub displacement: T,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Phase {
    WaitingFirst,
    AwaitJump,
    AwaitTouch,
}

/// State of the path at a requested time, with the remainder
/// `A_t = X_{ρ₀} + X_t − X_{ρ_{M_t}}` once the next renewal is known.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint<T> {
    pub t: T,
    pub x: T,
    pub gap: T,
    pub remainder: Option<T>,
}

/// Online renewal detector, usable as an engine observer or by replay.
#[derive(Clone, Debug)]
pub struct RenewalTracker<T> {
    phase: Phase,
    rho: T,
    x_rho: T,
    x_rho0: T,
    /// `S_n`, the running sum of cycle displacements.
    partial_sum: T,
    cycles: Vec<RenewalCycle<T>>,
    check_decomposition: bool,
    pending: Vec<(T, T)>,
    max_residual: T,
    checked: usize,
    checkpoints: Vec<Checkpoint<T>>,
    next_checkpoint: usize,
    open_checkpoints: Vec<usize>,
}

impl<T: Real> Default for RenewalTracker<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Real> RenewalTracker<T> {
    pub fn new() -> Self {
        Self {
            phase: Phase::WaitingFirst,
            rho: T::zero(),
            x_rho: T::zero(),
            x_rho0: T::zero(),
            partial_sum: T::zero(),
            cycles: Vec::new(),
            check_decomposition: false,
            pending: Vec::new(),
            max_residual: T::zero(),
            checked: 0,
            checkpoints: Vec::new(),
            next_checkpoint: 0,
            open_checkpoints: Vec::new(),
        }
    }

    /// Verify `X_t = S_{M_t} + A_t` at every sample whose `M_t` is reached.
    pub fn with_decomposition_check(mut self) -> Self {
        self.check_decomposition = true;
        self
    }

    /// Record `X_t`, `X_t − R_t` and `A_t` at these (increasing) times.
    /// A checkpoint is taken at the first sample at or after its time.
    pub fn with_checkpoints(mut self, times: &[T]) -> Self {
        self.checkpoints = times
            .iter()
            .map(|&t| Checkpoint {
                t,
                x: T::nan(),
                gap: T::nan(),
                remainder: None,
            })
            .collect();
        self
    }

    pub fn cycles(&self) -> &[RenewalCycle<T>] {
        &self.cycles
    }

    pub fn into_cycles(self) -> Vec<RenewalCycle<T>> {
        self.cycles
    }

    pub fn checkpoints(&self) -> &[Checkpoint<T>] {
        &self.checkpoints
    }

    /// First renewal time, if one occurred.
    pub fn first_renewal(&self) -> Option<(T, T)> {
        (self.phase != Phase::WaitingFirst).then_some((self.rho - self.cycles.iter().map(|c| c.duration).sum::<T>(), self.x_rho0))
    }

    /// Largest `|S_{M_t} + A_t − X_t|` seen and the number of samples checked.
    pub fn decomposition_residual(&self) -> (T, usize) {
        (self.max_residual, self.checked)
    }

    fn renewal(&mut self, t: T, x: T) {
        if self.phase == Phase::WaitingFirst {
            self.x_rho0 = x;
        } else {
            let c = RenewalCycle {
                duration: t - self.rho,
                displacement: x - self.x_rho,
            };
            self.partial_sum = self.partial_sum + c.displacement;
            self.cycles.push(c);
        }
        self.rho = t;
        self.x_rho = x;
        self.phase = Phase::AwaitJump;
        // Samples strictly before ρ now have ρ_{M_t} = ρ.
        if self.check_decomposition {
            let keep = self.pending.iter().position(|p| p.0 >= t).unwrap_or(self.pending.len());
            for &(_, xt) in &self.pending[..keep] {
                let a = self.x_rho0 + xt - x;
                let r = (self.partial_sum + a - xt).abs();
                if r > self.max_residual {
                    self.max_residual = r;
                }
            }
            self.checked += keep;
            self.pending.drain(..keep);
        }
        let mut still_open = Vec::new();
        for &k in &self.open_checkpoints {
            let cp = &mut self.checkpoints[k];
            if cp.t < t {
                cp.remainder = Some(self.x_rho0 + cp.x - x);
            } else {
                still_open.push(k);
            }
        }
        self.open_checkpoints = still_open;
    }
}

impl<T: Real> PathObserver<T> for RenewalTracker<T> {
    fn sample(&mut self, s: &RatchetState<T>, _: bool) {
        if self.check_decomposition {
            self.pending.push((s.t, s.x));
        }
        while self.next_checkpoint < self.checkpoints.len()
            && self.checkpoints[self.next_checkpoint].t <= s.t
        {
            let cp = &mut self.checkpoints[self.next_checkpoint];
            cp.t = s.t;
            cp.x = s.x;
            cp.gap = s.x - s.r;
            self.open_checkpoints.push(self.next_checkpoint);
            self.next_checkpoint += 1;
        }
    }

    fn touch(&mut self, c: &Touch<T>) {
        match self.phase {
            Phase::WaitingFirst | Phase::AwaitTouch => self.renewal(c.t, c.r),
            Phase::AwaitJump => {}
        }
    }

    fn jump(&mut self, _: &JumpEvent<T>) {
        if self.phase == Phase::AwaitJump {
            self.phase = Phase::AwaitTouch;
        }
    }
}

/// Replay a recorded trajectory into `obs` in engine order.
///
/// Engine touch flags are used when present; otherwise samples with
/// `x − r ≤ tolerance` count as contacts.
pub fn replay<T: Real, O: PathObserver<T>>(traj: &Trajectory<T>, tolerance: T, obs: &mut O) {
    #[derive(Clone, Copy)]
    enum Ev<T> {
        Jump(JumpEvent<T>),
        Sample(RatchetState<T>),
        Touch(Touch<T>),
    }
    let rank = |e: &Ev<T>| match e {
        Ev::Jump(j) => (j.tau, 0),
        Ev::Sample(s) => (s.t, 1),
        Ev::Touch(c) => (c.t, 2),
    };
    let mut events: Vec<Ev<T>> = Vec::with_capacity(traj.samples.len() + traj.jumps.len());
    events.extend(traj.jumps.iter().map(|j| Ev::Jump(*j)));
    events.extend(traj.samples.iter().map(|s| Ev::Sample(*s)));
    if traj.touches.is_empty() {
        events.extend(
            traj.samples
                .iter()
                .filter(|s| s.x - s.r <= tolerance)
                .map(|s| Ev::Touch(Touch { t: s.t, r: s.r })),
        );
    } else {
        events.extend(traj.touches.iter().map(|c| Ev::Touch(*c)));
    }
    events.sort_by(|a, b| {
        let (ta, ka) = rank(a);
        let (tb, kb) = rank(b);
        ta.partial_cmp(&tb)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(ka.cmp(&kb))
    });
    for e in &events {
        match e {
            Ev::Jump(j) => obs.jump(j),
            Ev::Sample(s) => obs.sample(s, true),
            Ev::Touch(c) => obs.touch(c),
        }
    }
}

/// Complete renewal cycles of a recorded trajectory.
pub fn detect_renewals<T: Real>(traj: &Trajectory<T>, tolerance: T) -> Vec<RenewalCycle<T>> {
    let mut tracker = RenewalTracker::new();
    replay(traj, tolerance, &mut tracker);
    tracker.into_cycles()
}

/// Ensemble summary of `A_t/√t` and `(X_t − R_t)/√t` at one time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RemainderSummary {
    pub t: f64,
    pub replicas: usize,
    pub mean_remainder: f64,
    pub mean_abs_remainder: f64,
    pub se_abs_remainder: f64,
    pub mean_gap: f64,
    pub se_gap: f64,
}

/// Summarize checkpoint `index` over replicas (replicas whose remainder
/// is still unresolved are skipped).
pub fn summarize_remainders<T: Real>(trackers: &[RenewalTracker<T>], index: usize) -> RemainderSummary {
    let cps: Vec<Checkpoint<T>> = trackers
        .iter()
        .filter_map(|tr| tr.checkpoints.get(index).copied())
        .filter(|c| c.remainder.is_some())
        .collect();
    let t = cps.first().map_or(f64::NAN, |c| c.t.as_f64());
    let root = t.sqrt();
    let a: Vec<f64> = cps.iter().map(|c| c.remainder.unwrap().as_f64() / root).collect();
    let abs: Vec<f64> = a.iter().map(|v| v.abs()).collect();
    let gap: Vec<f64> = cps.iter().map(|c| c.gap.as_f64() / root).collect();
    let (mean_remainder, _) = stats::mean_se(&a);
    let (mean_abs_remainder, se_abs_remainder) = stats::mean_se(&abs);
    let (mean_gap, se_gap) = stats::mean_se(&gap);
    RemainderSummary {
        t,
        replicas: cps.len(),
        mean_remainder,
        mean_abs_remainder,
        se_abs_remainder,
        mean_gap,
        se_gap,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CycleStatistics {
    pub n_cycles: usize,
    /// Mean cycle duration `r`.
    pub r_hat: f64,
    /// Mean cycle displacement `μ`.
    pub mu_hat: f64,
    /// Variance of `displacement − duration·μ/r`.
    pub beta2_hat: f64,
    pub speed: f64,
    pub sigma_hat: f64,
    /// Jackknife standard errors.
    pub speed_se: f64,
    pub sigma_se: f64,
    /// Raw second moments of duration and displacement.
    pub duration_m2: f64,
    pub displacement_m2: f64,
    pub remainder_stats: Vec<RemainderSummary>,
}

#[derive(Clone, Copy)]
struct Sums {
    n: f64,
    d: f64,
    v: f64,
    dd: f64,
    vv: f64,
    dv: f64,
}

impl Sums {
    fn without(&self, d: f64, v: f64) -> Self {
        Self {
            n: self.n - 1.0,
            d: self.d - d,
            v: self.v - v,
            dd: self.dd - d * d,
            vv: self.vv - v * v,
            dv: self.dv - d * v,
        }
    }

    /// `(speed, sigma, r, mu, beta²)`.
    fn estimate(&self) -> (f64, f64, f64, f64, f64) {
        let r = self.d / self.n;
        let mu = self.v / self.n;
        let q = mu / r;
        let sdd = self.dd - self.d * r;
        let svv = self.vv - self.v * mu;
        let sdv = self.dv - self.d * mu;
        let beta2 = ((svv - 2.0 * q * sdv + q * q * sdd) / (self.n - 1.0)).max(0.0);
        (q, (beta2 / r).sqrt(), r, mu, beta2)
    }
}

/// Renewal-reward estimators over i.i.d. cycles, with leave-one-cycle-out
/// jackknife standard errors.
pub fn cycle_statistics<T: Real>(cycles: &[RenewalCycle<T>]) -> Result<CycleStatistics> {
    let n = cycles.len();
    if n < MIN_CYCLES {
        return Err(Error::TooFew {
            what: "renewal cycles",
            got: n,
            min: MIN_CYCLES,
        });
    }
    let dv: Vec<(f64, f64)> = cycles
        .iter()
        .map(|c| (c.duration.as_f64(), c.displacement.as_f64()))
        .collect();
    if dv.iter().any(|&(d, v)| !(d.is_finite() && v.is_finite()) || d <= 0.0) {
        return Err(Error::Degenerate("cycle durations must be positive and finite"));
    }
    let mut s = Sums {
        n: n as f64,
        d: 0.0,
        v: 0.0,
        dd: 0.0,
        vv: 0.0,
        dv: 0.0,
    };
    for &(d, v) in &dv {
        s.d += d;
        s.v += v;
        s.dd += d * d;
        s.vv += v * v;
        s.dv += d * v;
    }
    let (speed, sigma_hat, r_hat, mu_hat, beta2_hat) = s.estimate();
    let loo: Vec<(f64, f64)> = dv
        .iter()
        .map(|&(d, v)| {
            let e = s.without(d, v).estimate();
            (e.0, e.1)
        })
        .collect();
    let jack = |k: fn(&(f64, f64)) -> f64| {
        let m = loo.iter().map(k).sum::<f64>() / n as f64;
        let ss: f64 = loo.iter().map(|p| (k(p) - m).powi(2)).sum();
        ((n as f64 - 1.0) / n as f64 * ss).sqrt()
    };
    Ok(CycleStatistics {
        n_cycles: n,
        r_hat,
        mu_hat,
        beta2_hat,
        speed,
        sigma_hat,
        speed_se: jack(|p| p.0),
        sigma_se: jack(|p| p.1),
        duration_m2: s.dd / s.n,
        displacement_m2: s.vv / s.n,
        remainder_stats: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::RatchetParams;

    fn traj(samples: &[(f64, f64, f64)], jumps: &[JumpEvent<f64>]) -> Trajectory<f64> {
        Trajectory {
            params: RatchetParams::new(1.0, 10.0, 1.0),
            samples: samples
                .iter()
                .map(|&(t, x, r)| RatchetState { t, x, r })
                .collect(),
            jumps: jumps.to_vec(),
            touches: Vec::new(),
        }
    }

    #[test]
    fn start_at_zero_renews_at_zero() {
        let j = |tau, r_pre, r_post| JumpEvent { tau, x_pre: r_post + 0.5, r_pre, r_post };
        let t = traj(
            &[(0.0, 0.0, 0.0), (1.0, 1.0, 0.5), (2.0, 0.5, 0.5), (3.0, 1.2, 0.9), (4.0, 0.9, 0.9)],
            &[j(1.0, 0.0, 0.5), j(3.0, 0.5, 0.9)],
        );
        let mut tr = RenewalTracker::new();
        replay(&t, 1e-9, &mut tr);
        assert_eq!(tr.first_renewal(), Some((0.0, 0.0)));
        let c = tr.cycles();
        assert_eq!(c.len(), 2);
        assert_eq!(c[0], RenewalCycle { duration: 2.0, displacement: 0.5 });
        assert!((c[1].displacement - 0.4).abs() < 1e-15);
    }

    #[test]
    fn no_jumps_no_cycles() {
        let t = traj(&[(0.0, 0.0, 0.0), (1.0, 0.0, 0.0), (2.0, 0.3, 0.0), (3.0, 0.0, 0.0)], &[]);
        assert!(detect_renewals(&t, 1e-9).is_empty());
    }

    #[test]
    fn degenerate_cycles() {
        let c = vec![RenewalCycle { duration: 2.0, displacement: 0.8 }; 40];
        let s = cycle_statistics(&c).unwrap();
        assert!((s.speed - 0.4).abs() < 1e-15);
        assert!(s.beta2_hat.abs() < 1e-12);
        assert!(s.speed_se < 1e-12);
        assert!(cycle_statistics(&c[..10]).is_err());
    }

    #[test]
    fn estimators_on_known_cycles() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(41);
        // Duration ~ U(1,3), displacement = 0.5·duration + N-ish noise.
        let cycles: Vec<RenewalCycle<f64>> = (0..20_000)
            .map(|_| {
                let d = 1.0 + 2.0 * rng.random::<f64>();
                let e = rng.random::<f64>() - 0.5;
                RenewalCycle { duration: d, displacement: 0.5 * d + e }
            })
            .collect();
        let s = cycle_statistics(&cycles).unwrap();
        assert!((s.speed - 0.5).abs() < 3.0 * s.speed_se + 1e-3);
        // β² = Var(e) = 1/12, r = 2.
        assert!((s.beta2_hat - 1.0 / 12.0).abs() < 0.005);
        assert!((s.sigma_hat - (1.0f64 / 24.0).sqrt()).abs() < 4.0 * s.sigma_se);
    }
}
