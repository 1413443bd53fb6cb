//! Model extensions: dissociating binders, drift against the ratchet, and
//! binding measures with an atom at the pore.
//!
//! Drift and binding measures run on the thinning kernel (see
//! [`crate::engine::ThinningKernel`]). Dissociation needs the full set of
//! bound molecules and has its own loop here.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::engine::observer::{PathObserver, Recorder};
use crate::engine::thinning::{run_kernel, ThinningKernel};
use crate::error::{check_positive, Error, Result};
use crate::model::{validate, BindingWindow, JumpEvent, RatchetParams, RatchetState, Touch, Trajectory, VariantKind};
use crate::renewal::stats::{ks_one_sample, mean_se, KsResult};
use crate::rng::{uniform, BrownianDriver, ReplicaStreams};
use crate::special::speed;
use crate::Real;

/// Largest number of bound molecules a [`BoundSet`] holds.
pub const BOUND_CAPACITY: usize = 1_000_000;

const BRIDGE_CUTOFF: f64 = 40.0;

/// Multiset of bound molecule positions; the reflection point is its
/// maximum (0 when empty).
#[derive(Clone, Debug, Default)]
pub struct BoundSet<T> {
    items: Vec<T>,
    // Non-negative f64 bit patterns sort like the values.
    counts: BTreeMap<u64, usize>,
    capacity: usize,
}

impl<T: Real> BoundSet<T> {
    pub fn new() -> Self {
        Self::with_capacity_limit(BOUND_CAPACITY)
    }

    pub fn with_capacity_limit(capacity: usize) -> Self {
        Self {
            items: Vec::new(),
            counts: BTreeMap::new(),
            capacity,
        }
    }

    fn key(p: T) -> u64 {
        (p.as_f64() + 0.0).to_bits()
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn insert(&mut self, p: T) -> Result<()> {
        debug_assert!(p >= T::zero());
        if self.items.len() >= self.capacity {
            return Err(Error::CapacityExceeded(self.capacity));
        }
        self.items.push(p);
        *self.counts.entry(Self::key(p)).or_insert(0) += 1;
        Ok(())
    }

    /// Remove the molecule at index `i` of the internal order.
    fn remove_at(&mut self, i: usize) -> T {
        let p = self.items.swap_remove(i);
        let k = Self::key(p);
        match self.counts.get_mut(&k) {
            Some(c) if *c > 1 => *c -= 1,
            _ => {
                self.counts.remove(&k);
            }
        }
        p
    }

    /// Remove a uniformly chosen molecule.
    pub fn remove_random<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Option<T> {
        if self.items.is_empty() {
            return None;
        }
        let i = rng.random_range(0..self.items.len());
        Some(self.remove_at(i))
    }

    pub fn reflection_point(&self) -> T {
        self.counts
            .keys()
            .next_back()
            .map_or(T::zero(), |&k| T::lit(f64::from_bits(k)))
    }

    pub fn positions(&self) -> impl Iterator<Item = T> + '_ {
        self.items.iter().copied()
    }
}

fn poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    match Poisson::new(mean) {
        Ok(d) => {
            let k: f64 = d.sample(rng);
            k as usize
        }
        Err(_) => 0,
    }
}

/// Dissociation variant: molecules bind uniformly on the binding window at
/// total rate `γ·|window|` and each unbinds at `dissociation_rate`; the
/// reflection point is the highest bound molecule.
///
/// With zero dissociation, molecules below the current maximum can never
/// matter and are not stored.
pub fn run_dissociation<T: Real, O: PathObserver<T>>(
    params: &RatchetParams<T>,
    streams: ReplicaStreams,
    substeps: usize,
    obs: &mut O,
) -> Result<RatchetState<T>> {
    let ReplicaStreams {
        brownian,
        mut jumps,
        mut touches,
    } = streams;
    let mut driver = BrownianDriver::new(brownian, substeps);
    let dt = params.dt;
    let gamma = params.gamma.as_f64();
    let sigma = params.variant.dissociation_rate.as_f64();
    let window = params.variant.window;
    let sqrt_fine = (dt / T::from_usize_lossy(driver.substeps())).sqrt();
    let mut set = BoundSet::new();
    let mut st = RatchetState {
        t: T::zero(),
        x: params.x0,
        r: T::zero(),
    };
    if st.x == T::zero() {
        obs.touch(&Touch {
            t: T::zero(),
            r: T::zero(),
        });
    }
    obs.sample(&st, true);
    for i in 1..=params.steps() {
        let t0 = st.t;
        let t1 = T::from_usize_lossy(i) * dt;
        let g0 = st.x - st.r;
        let pre = g0 + driver.increment(sqrt_fine);
        let g1 = pre.abs();
        let touched = pre <= T::zero() || {
            let e = T::lit(2.0) * g0 * g1 / dt;
            e < T::lit(BRIDGE_CUTOFF) && uniform::<T, _>(&mut touches) < (-e).exp()
        };
        if touched {
            obs.touch(&Touch { t: t0, r: st.r });
        }
        let x0 = st.x;
        let x1 = st.r + g1;
        let (lo, len) = match window {
            BindingWindow::Full => (T::zero(), (x0 + x1) * T::lit(0.5)),
            BindingWindow::AboveBoundary => (st.r, (g0 + g1) * T::lit(0.5)),
        };
        let r_pre = st.r;
        let removals = poisson(sigma * set.len() as f64 * dt.as_f64(), &mut jumps).min(set.len());
        for _ in 0..removals {
            set.remove_random(&mut jumps);
        }
        let additions = poisson(gamma * len.as_f64() * dt.as_f64(), &mut jumps);
        let span = x1 - lo;
        for _ in 0..additions {
            let p = lo + span * uniform::<T, _>(&mut jumps);
            if sigma > 0.0 || p > set.reflection_point() {
                set.insert(p)?;
            }
        }
        let r_post = set.reflection_point();
        st = RatchetState {
            t: t1,
            x: x1.max(r_post),
            r: r_post,
        };
        if r_post != r_pre {
            obs.jump(&JumpEvent {
                tau: t1,
                x_pre: st.x,
                r_pre,
                r_post,
            });
            obs.bound_count(t1, set.len());
        }
        obs.sample(&st, true);
    }
    Ok(st)
}

/// Simulate one trajectory of a model variant.
pub fn simulate_variant<T: Real>(
    params: &RatchetParams<T>,
    streams: ReplicaStreams,
) -> Result<Trajectory<T>> {
    validate(params).into_result()?;
    if params.variant.kind == VariantKind::None {
        return Err(Error::Parse {
            what: "variant",
            detail: "variant kind must not be none".into(),
        });
    }
    let mut rec = Recorder::new(params);
    if params.variant.kind == VariantKind::Dissociation {
        run_dissociation(params, streams, 1, &mut rec)?;
    } else {
        let kernel = ThinningKernel::for_params(params);
        run_kernel(&kernel, params.x0, params.steps(), streams, 1, &mut rec);
    }
    Ok(rec.finish())
}

/// Speed `√(γ/2)` of the ratchet whose molecules bind only at the pore.
pub fn delta_ratchet_speed<T: Real>(gamma: T) -> Result<T> {
    check_positive("gamma", gamma)?;
    Ok((gamma * T::lit(0.5)).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Crossover {
    /// Rate at which pore binding and uniform binding are equally fast.
    pub gamma: f64,
    pub speed: f64,
    /// Closed form `(C₁√2)⁶`, for comparison.
    pub closed_form: f64,
}

/// Root of `√(γ/2) = C_γ`, found by bisection in `ln γ`. Below it pore
/// binding is faster.
pub fn delta_crossover() -> Crossover {
    let f = |lg: f64| {
        let g = lg.exp();
        (0.5 * g).sqrt().ln() - speed(g).map_or(f64::NAN, f64::ln)
    };
    let (mut a, mut b) = (-20.0_f64, 20.0_f64);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if f(m) < 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    let gamma = (0.5 * (a + b)).exp();
    let c1 = speed(1.0_f64).unwrap_or(f64::NAN);
    Crossover {
        gamma,
        speed: (0.5 * gamma).sqrt(),
        closed_form: (c1 * 2f64.sqrt()).powi(6),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaJumpCheck {
    pub ks: KsResult,
    pub mean: f64,
    pub mean_se: f64,
    /// `(2γ)^{-1/2}`.
    pub expected_mean: f64,
}

struct JumpGaps<T> {
    gaps: Vec<T>,
    limit: usize,
}

impl<T: Real> PathObserver<T> for JumpGaps<T> {
    fn jump(&mut self, j: &JumpEvent<T>) {
        if self.gaps.len() < self.limit {
            self.gaps.push(j.x_pre - j.r_pre);
        }
    }
}

/// Run the pore-binding ratchet until `n` jumps and compare the jump
/// positions (gap just before each jump) with `Exp((2γ)^{1/2})`.
pub fn delta_jump_position_check(gamma: f64, n: usize, dt: f64, seed: u64) -> Result<DeltaJumpCheck> {
    check_positive("gamma", gamma)?;
    check_positive("dt", dt)?;
    let expected_jumps = n as f64 + 6.0 * (n as f64).sqrt() + 20.0;
    let t_max = (expected_jumps / gamma / dt).ceil() * dt;
    let params = RatchetParams::new(gamma, t_max, dt).with_seed(seed).with_variant(
        crate::model::VariantSpec::binding(crate::model::BindingMeasure::DeltaAtPore { mass: 1.0 }),
    );
    validate(&params).into_result()?;
    let kernel = ThinningKernel::for_params(&params);
    let mut obs = JumpGaps {
        gaps: Vec::with_capacity(n),
        limit: n,
    };
    run_kernel(&kernel, 0.0, params.steps(), ReplicaStreams::new(seed, 0), 1, &mut obs);
    if obs.gaps.len() < n {
        return Err(Error::TooFew {
            what: "pore-binding jumps",
            got: obs.gaps.len(),
            min: n,
        });
    }
    let rate = (2.0 * gamma).sqrt();
    let ks = ks_one_sample(&obs.gaps, |y| if y <= 0.0 { 0.0 } else { -(-rate * y).exp_m1() })?;
    let (mean, se) = mean_se(&obs.gaps);
    Ok(DeltaJumpCheck {
        ks,
        mean,
        mean_se: se,
        expected_mean: 1.0 / rate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{run_replica, FinalState};
    use crate::model::{BindingMeasure, VariantSpec};
    use rand::SeedableRng;

    #[test]
    fn bound_set_tracks_maximum() {
        let mut s = BoundSet::<f64>::new();
        assert_eq!(s.reflection_point(), 0.0);
        for p in [0.5, 2.0, 1.0, 2.0] {
            s.insert(p).unwrap();
        }
        assert_eq!(s.reflection_point(), 2.0);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let mut seen = Vec::new();
        while let Some(p) = s.remove_random(&mut rng) {
            seen.push(p);
            let rest: Vec<f64> = s.positions().collect();
            let m = rest.iter().copied().fold(0.0, f64::max);
            assert_eq!(s.reflection_point(), m);
        }
        seen.sort_by(f64::total_cmp);
        assert_eq!(seen, vec![0.5, 1.0, 2.0, 2.0]);
    }

    #[test]
    fn bound_set_capacity() {
        let mut s = BoundSet::<f64>::with_capacity_limit(2);
        s.insert(1.0).unwrap();
        s.insert(1.0).unwrap();
        assert!(matches!(s.insert(1.0), Err(Error::CapacityExceeded(2))));
    }

    #[test]
    fn closed_forms() {
        assert_eq!(delta_ratchet_speed(2.0_f64).unwrap(), 1.0);
        assert_eq!(delta_ratchet_speed(0.5_f64).unwrap(), 0.5);
        assert!(delta_ratchet_speed(0.0_f64).is_err());
        let c = delta_crossover();
        assert!((c.gamma - 0.075_054_194_436_367).abs() < 1e-12, "{c:?}");
        assert!((c.gamma - c.closed_form).abs() < 1e-12);
    }

    #[test]
    fn zero_drift_is_bit_identical_to_base() {
        let base = RatchetParams::new(1.0_f64, 20.0, 1e-3).with_seed(9);
        let drift = base.clone().with_variant(VariantSpec::drift(0.0));
        let (mut a, mut b) = (FinalState::default(), FinalState::default());
        run_replica(&base, 0, 1, &mut a).unwrap();
        run_replica(&drift, 0, 1, &mut b).unwrap();
        assert_eq!(a.state, b.state);
    }

    #[test]
    fn pore_binding_resets_gap_at_every_jump() {
        let p = RatchetParams::new(2.0_f64, 50.0, 1e-3)
            .with_seed(4)
            .with_variant(VariantSpec::binding(BindingMeasure::DeltaAtPore { mass: 1.0 }));
        let tr = simulate_variant(&p, ReplicaStreams::new(4, 0)).unwrap();
        assert!(tr.jumps.len() > 50);
        for j in &tr.jumps {
            assert_eq!(j.r_post, j.x_pre);
        }
    }

    #[test]
    fn dissociation_keeps_reflection_below_x() {
        let p = RatchetParams::new(1.0_f64, 50.0, 1e-3)
            .with_seed(5)
            .with_variant(VariantSpec::dissociation(0.5, BindingWindow::Full));
        let tr = simulate_variant(&p, ReplicaStreams::new(5, 0)).unwrap();
        assert!(tr.samples.iter().all(|s| s.r <= s.x));
        assert!(tr.jumps.iter().any(|j| j.r_post < j.r_pre), "some maximum should dissociate");
    }

    #[test]
    fn no_dissociation_on_window_is_monotone() {
        let p = RatchetParams::new(1.0_f64, 50.0, 1e-3)
            .with_seed(6)
            .with_variant(VariantSpec::dissociation(0.0, BindingWindow::AboveBoundary));
        let tr = simulate_variant(&p, ReplicaStreams::new(6, 0)).unwrap();
        assert!(tr.jumps.iter().all(|j| j.r_post > j.r_pre));
        assert!(tr.samples.windows(2).all(|w| w[1].r >= w[0].r));
    }

    #[test]
    fn none_is_rejected() {
        let p = RatchetParams::new(1.0_f64, 5.0, 1e-3);
        assert!(simulate_variant(&p, ReplicaStreams::new(0, 0)).is_err());
    }
}
