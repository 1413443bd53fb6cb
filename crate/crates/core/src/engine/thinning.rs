//! Time-stepping engine: folded Gaussian steps for the gap `X − R` and a
//! thinned jump clock with trapezoidal rate.
//!
//! The jump clock is an `Exp(1)` budget drained by `γ·dt·(g₀ + g₁)/2` per
//! step. A jump fires in the step that exhausts it and a fresh budget is
//! drawn, so each step jumps independently with probability
//! `1 − exp(−γ·dt·(g₀ + g₁)/2)` and at most once.

use rand::Rng;

use crate::engine::observer::{PathObserver, Recorder};
use crate::error::Result;
use crate::model::{validate, JumpEvent, RatchetParams, RatchetState, Touch, Trajectory};
use crate::rng::{exp1, uniform, uniform_open, BrownianDriver, ReplicaStreams};
use crate::Real;

/// Exponent beyond which the bridge crossing probability is treated as 0.
const BRIDGE_CUTOFF: f64 = 40.0;

/// One step of the thinning scheme. Rates may be zero.
#[derive(Clone, Copy, Debug)]
pub struct ThinningKernel<T> {
    pub gamma: T,
    pub dt: T,
    pub drift: T,
    /// Lebesgue part of the binding measure (1 for the base model).
    pub density: T,
    /// Atom at the pore (0 for the base model).
    pub mass: T,
}

/// What happened during one step.
#[derive(Clone, Copy, Debug)]
pub struct StepOutcome<T> {
    /// Probability that the path met the boundary during the step.
    pub touch_probability: T,
    pub jump: Option<JumpEvent<T>>,
}

impl<T: Real> ThinningKernel<T> {
    pub fn base(gamma: T, dt: T) -> Self {
        Self {
            gamma,
            dt,
            drift: T::zero(),
            density: T::one(),
            mass: T::zero(),
        }
    }

    pub fn for_params(params: &RatchetParams<T>) -> Self {
        let (density, mass) = params.variant.effective_binding();
        Self {
            gamma: params.gamma,
            dt: params.dt,
            drift: params.variant.effective_drift(),
            density,
            mass,
        }
    }

    /// Advance `st` to time `t_next` given the Brownian increment `db`.
    ///
    /// `budget` is the remaining jump-clock budget.
    #[inline]
    pub fn advance<R: Rng + ?Sized>(
        &self,
        st: &mut RatchetState<T>,
        t_next: T,
        db: T,
        budget: &mut T,
        rng: &mut R,
    ) -> StepOutcome<T> {
        let g0 = st.x - st.r;
        let pre = g0 + db + self.drift * self.dt;
        let g1 = pre.abs();
        let touch_probability = if pre <= T::zero() {
            T::one()
        } else {
            let e = T::lit(2.0) * g0 * g1 / self.dt;
            if e < T::lit(BRIDGE_CUTOFF) {
                (-e).exp()
            } else {
                T::zero()
            }
        };
        st.t = t_next;
        st.x = st.r + g1;
        let rate = self.density * (g0 + g1) * T::lit(0.5) + self.mass;
        *budget = *budget - self.gamma * self.dt * rate;
        if *budget > T::zero() {
            return StepOutcome {
                touch_probability,
                jump: None,
            };
        }
        *budget = exp1(rng);
        let r_pre = st.r;
        let at_pore = self.mass > T::zero()
            && uniform::<T, _>(rng) * (self.density * g1 + self.mass) < self.mass;
        let r_post = if at_pore {
            st.x
        } else {
            r_pre + uniform_open::<T, _>(rng) * g1
        };
        st.r = r_post.min(st.x);
        StepOutcome {
            touch_probability,
            jump: Some(JumpEvent {
                tau: t_next,
                x_pre: st.x,
                r_pre,
                r_post: st.r,
            }),
        }
    }
}

/// A single thinning step from `state` with a fresh jump budget.
///
/// Uses `rng` for both the Gaussian increment and the jump draws.
pub fn step_thinning<T: Real, R: Rng + ?Sized>(
    state: RatchetState<T>,
    dt: T,
    gamma: T,
    rng: &mut R,
) -> (RatchetState<T>, Option<JumpEvent<T>>) {
    let kernel = ThinningKernel::base(gamma, dt);
    let mut st = state;
    let db = dt.sqrt() * crate::rng::normal::<T, _>(rng);
    let mut budget = exp1(rng);
    let out = kernel.advance(&mut st, state.t + dt, db, &mut budget, rng);
    (st, out.jump)
}

/// Drive `kernel` over `steps` grid steps, reporting to `obs`.
pub fn run_kernel<T: Real, O: PathObserver<T>>(
    kernel: &ThinningKernel<T>,
    x0: T,
    steps: usize,
    streams: ReplicaStreams,
    substeps: usize,
    obs: &mut O,
) -> RatchetState<T> {
    let ReplicaStreams {
        brownian,
        mut jumps,
        mut touches,
    } = streams;
    let mut driver = BrownianDriver::new(brownian, substeps);
    let sqrt_fine = (kernel.dt / T::from_usize_lossy(driver.substeps())).sqrt();
    let mut st = RatchetState {
        t: T::zero(),
        x: x0,
        r: T::zero(),
    };
    if x0 == T::zero() {
        obs.touch(&Touch {
            t: T::zero(),
            r: T::zero(),
        });
    }
    obs.sample(&st, true);
    let mut budget: T = exp1(&mut jumps);
    for i in 1..=steps {
        let t0 = st.t;
        let r0 = st.r;
        let db = driver.increment(sqrt_fine);
        let t_next = T::from_usize_lossy(i) * kernel.dt;
        let out = kernel.advance(&mut st, t_next, db, &mut budget, &mut jumps);
        let p = out.touch_probability;
        if p >= T::one() || (p > T::zero() && uniform::<T, _>(&mut touches) < p) {
            obs.touch(&Touch { t: t0, r: r0 });
        }
        if let Some(j) = out.jump {
            obs.jump(&j);
        }
        obs.sample(&st, true);
    }
    st
}

/// Run the thinning engine (base model, drift or binding-measure variant).
pub fn run_thinning<T: Real, O: PathObserver<T>>(
    params: &RatchetParams<T>,
    streams: ReplicaStreams,
    substeps: usize,
    obs: &mut O,
) -> RatchetState<T> {
    let kernel = ThinningKernel::for_params(params);
    run_kernel(&kernel, params.x0, params.steps(), streams, substeps, obs)
}

/// Simulate one path with the thinning engine and record it.
pub fn simulate_path<T: Real>(
    params: &RatchetParams<T>,
    streams: ReplicaStreams,
) -> Result<Trajectory<T>> {
    validate(params).into_result()?;
    let mut rec = Recorder::new(params);
    run_thinning(params, streams, 1, &mut rec);
    Ok(rec.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::observer::FinalState;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn no_gap_no_increment_no_jump() {
        let k = ThinningKernel::base(5.0_f64, 1e-3);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut st = RatchetState { t: 0.0, x: 2.0, r: 2.0 };
        let mut budget = 1e-300;
        let out = k.advance(&mut st, 1e-3, 0.0, &mut budget, &mut rng);
        assert!(out.jump.is_none() && out.touch_probability == 1.0);
        assert_eq!(st.x, 2.0);
    }

    #[test]
    fn folding_keeps_x_above_r() {
        let k = ThinningKernel::base(1.0_f64, 1e-2);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut st = RatchetState { t: 0.0, x: 0.3, r: 0.2 };
        let mut budget = 10.0;
        k.advance(&mut st, 0.01, -0.25, &mut budget, &mut rng);
        assert!((st.x - 0.35).abs() < 1e-15);
    }

    #[test]
    fn one_step_jump_frequency() {
        // Gap held at 1: jump probability 1 − exp(−γ·dt) per step.
        let (gamma, dt) = (0.5_f64, 1e-3);
        let k = ThinningKernel::base(gamma, dt);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 1_000_000;
        let mut hits = 0usize;
        for _ in 0..n {
            let mut st = RatchetState { t: 0.0, x: 1.0, r: 0.0 };
            let mut budget = exp1::<f64, _>(&mut rng);
            if k.advance(&mut st, dt, 0.0, &mut budget, &mut rng).jump.is_some() {
                hits += 1;
            }
        }
        let p = 1.0 - (-gamma * dt).exp();
        let se = (p * (1.0 - p) / n as f64).sqrt();
        let f = hits as f64 / n as f64;
        assert!((f - p).abs() < 3.0 * se, "{f} vs {p}");
        assert!((p - 5e-4).abs() < 2e-7);
    }

    #[test]
    fn public_step_respects_ordering() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut st = RatchetState { t: 0.0, x: 0.0, r: 0.0 };
        for _ in 0..20_000 {
            let (next, jump) = step_thinning(st, 1e-3, 1.0, &mut rng);
            assert!(next.r >= st.r && next.r <= next.x);
            if let Some(j) = jump {
                assert!(j.r_post >= j.r_pre && j.r_post <= j.x_pre);
            }
            st = next;
        }
        assert!(st.r > 0.0);
    }

    #[test]
    fn reproducible_for_fixed_streams() {
        let p = RatchetParams::new(1.0_f64, 20.0, 1e-3);
        let a = simulate_path(&p, ReplicaStreams::new(11, 0)).unwrap();
        let b = simulate_path(&p, ReplicaStreams::new(11, 0)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.samples.len(), p.steps() + 1);
        assert_eq!(a.touches[0].t, 0.0);
    }

    #[test]
    fn trajectory_invariants() {
        let p = RatchetParams::new(2.0_f64, 50.0, 1e-3).with_stride(10);
        let t = simulate_path(&p, ReplicaStreams::new(12, 0)).unwrap();
        assert!(!t.jumps.is_empty());
        for w in t.samples.windows(2) {
            assert!(w[1].t > w[0].t);
            assert!(w[1].r >= w[0].r);
        }
        for s in &t.samples {
            assert!(s.r <= s.x);
        }
        for w in t.jumps.windows(2) {
            assert!(w[1].tau > w[0].tau);
        }
        for j in &t.jumps {
            assert!(j.r_pre <= j.r_post && j.r_post <= j.x_pre);
            // The state at each jump time is recorded.
            assert!(t.samples.iter().any(|s| s.t == j.tau && s.r == j.r_post));
        }
        assert_eq!(t.samples.last().unwrap().t, 50.0);
    }

    #[test]
    fn zero_rate_is_reflected_brownian_motion() {
        let k = ThinningKernel::base(0.0_f64, 1e-3);
        let n = 4000;
        let mut finals: Vec<f64> = (0..n)
            .map(|i| {
                let mut f = FinalState::default();
                run_kernel(&k, 0.0, 1000, ReplicaStreams::new(13, i), 1, &mut f);
                assert_eq!(f.state.r, 0.0);
                f.state.x
            })
            .collect();
        finals.sort_by(f64::total_cmp);
        let cdf = |x: f64| libm::erf(x / std::f64::consts::SQRT_2);
        let d = finals
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let c = cdf(x);
                (c - i as f64 / n as f64).abs().max(((i + 1) as f64 / n as f64 - c).abs())
            })
            .fold(0.0, f64::max);
        assert!(d < 1.63 / (n as f64).sqrt(), "D = {d}");
    }

    #[test]
    fn single_precision_path() {
        let p = RatchetParams::new(1.0_f32, 5.0, 1e-2);
        let t = simulate_path(&p, ReplicaStreams::new(1, 0)).unwrap();
        assert!(t.final_x() > 0.0);
    }
}
