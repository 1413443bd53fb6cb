//! The graphical construction: one Brownian path `B` started at `x0` and a
//! space-time Poisson field of intensity `γ`. The reflection point `S_n`
//! moves to the first field point lying between `B` and `S_n`; the ratchet
//! is read off as `R̃ = Σ|S_i − S_{i−1}|` and `X̃ = R̃ + |B − S_n|`.
//!
//! Per grid step `B` is interpolated linearly and the field is sampled in
//! the rectangle spanned by the step's range of `B` and the current `S`.

use rand::Rng;

use crate::engine::observer::{GraphicalEvent, PathObserver, Recorder};
use crate::error::Result;
use crate::model::{validate, JumpEvent, RatchetParams, RatchetState, Touch, Trajectory};
use crate::rng::{exp1, uniform, BrownianDriver, ReplicaStreams};
use crate::Real;

const BRIDGE_CUTOFF: f64 = 40.0;

/// Whether a Brownian bridge from `a` to `b` over `dt` meets the level `s`.
#[inline]
pub(crate) fn bridge_hits<T: Real, R: Rng + ?Sized>(a: T, b: T, s: T, dt: T, rng: &mut R) -> bool {
    let (da, db) = (a - s, b - s);
    if da * db <= T::zero() {
        return true;
    }
    let e = T::lit(2.0) * da * db / dt;
    e < T::lit(BRIDGE_CUTOFF) && uniform::<T, _>(rng) < (-e).exp()
}

#[inline]
pub(crate) fn strictly_between<T: Real>(y: T, a: T, b: T) -> bool {
    (a < y && y < b) || (b < y && y < a)
}

/// Run the graphical engine for `params`, reporting to `obs`.
pub fn run_graphical<T: Real, O: PathObserver<T>>(
    params: &RatchetParams<T>,
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
    let dt = params.dt;
    let gamma = params.gamma;
    let sqrt_fine = (dt / T::from_usize_lossy(driver.substeps())).sqrt();
    let mut b = params.x0;
    let mut s = T::zero();
    let mut st = RatchetState {
        t: T::zero(),
        x: b.abs(),
        r: T::zero(),
    };
    if st.x == T::zero() {
        obs.touch(&Touch {
            t: T::zero(),
            r: T::zero(),
        });
    }
    obs.sample(&st, true);
    obs.driving(T::zero(), b, s);
    for i in 1..=params.steps() {
        let t0 = st.t;
        let t1 = T::from_usize_lossy(i) * dt;
        let b0 = b;
        let b1 = b0 + driver.increment(sqrt_fine);
        if bridge_hits(b0, b1, s, dt, &mut touches) {
            obs.touch(&Touch { t: t0, r: st.r });
        }
        let lo = s.min(b0).min(b1);
        let height = s.max(b0).max(b1) - lo;
        let rate = gamma * height;
        if rate > T::zero() {
            let mut u = T::zero();
            loop {
                u = u + exp1::<T, _>(&mut jumps) / rate;
                if u >= dt {
                    break;
                }
                let y = lo + height * uniform::<T, _>(&mut jumps);
                let bu = b0 + (b1 - b0) * (u / dt);
                if !strictly_between(y, s, bu) {
                    continue;
                }
                let tau = t0 + u;
                let r_pre = st.r;
                let x_pre = r_pre + (bu - s).abs();
                let r_post = r_pre + (y - s).abs();
                s = y;
                st = RatchetState {
                    t: tau,
                    x: r_post + (bu - s).abs(),
                    r: r_post,
                };
                obs.jump(&JumpEvent {
                    tau,
                    x_pre,
                    r_pre,
                    r_post,
                });
                obs.graphical_event(&GraphicalEvent { tau_tilde: tau, s });
                obs.sample(&st, false);
            }
        }
        b = b1;
        st = RatchetState {
            t: t1,
            x: st.r + (b - s).abs(),
            r: st.r,
        };
        obs.sample(&st, true);
        obs.driving(t1, b, s);
    }
    st
}

/// Simulate one path with the graphical engine and record it.
pub fn simulate_graphical<T: Real>(
    params: &RatchetParams<T>,
    streams: ReplicaStreams,
) -> Result<Trajectory<T>> {
    validate(params).into_result()?;
    let mut rec = Recorder::new(params);
    run_graphical(params, streams, 1, &mut rec);
    Ok(rec.finish())
}

/// Record of the driving quantities, for checking `X̃ − R̃ = |B − S_n|`.
#[derive(Clone, Debug, Default)]
pub struct DrivingLog<T> {
    pub grid: Vec<(T, T, T)>,
    pub states: Vec<RatchetState<T>>,
    pub events: Vec<GraphicalEvent<T>>,
}

impl<T: Real> PathObserver<T> for DrivingLog<T> {
    fn sample(&mut self, s: &RatchetState<T>, on_grid: bool) {
        if on_grid {
            self.states.push(*s);
        }
    }
    fn driving(&mut self, t: T, b: T, s: T) {
        self.grid.push((t, b, s));
    }
    fn graphical_event(&mut self, e: &GraphicalEvent<T>) {
        self.events.push(*e);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_at_grid_times() {
        let p = RatchetParams::new(1.0_f64, 30.0, 1e-3);
        let mut log = DrivingLog::default();
        run_graphical(&p, ReplicaStreams::new(21, 0), 1, &mut log);
        assert_eq!(log.grid.len(), log.states.len());
        for ((t, b, s), st) in log.grid.iter().zip(&log.states) {
            assert_eq!(*t, st.t);
            assert!((st.x - st.r - (b - s).abs()).abs() < 1e-12 * (1.0 + st.x));
        }
        assert!(!log.events.is_empty());
        for w in log.events.windows(2) {
            assert!(w[1].tau_tilde > w[0].tau_tilde);
        }
    }

    #[test]
    fn jumps_land_between_reflection_and_path() {
        let p = RatchetParams::new(0.5_f64, 60.0, 1e-3);
        let t = simulate_graphical(&p, ReplicaStreams::new(22, 0)).unwrap();
        assert!(!t.jumps.is_empty());
        for j in &t.jumps {
            assert!(j.r_pre <= j.r_post && j.r_post <= j.x_pre);
        }
        for w in t.samples.windows(2) {
            assert!(w[1].t > w[0].t && w[1].r >= w[0].r);
        }
    }

    #[test]
    fn without_field_points_x_is_abs_b() {
        // γ so small that no point falls in the swept region.
        let p = RatchetParams::new(1e-12_f64, 1.0, 1e-3);
        let mut log = DrivingLog::default();
        run_graphical(&p, ReplicaStreams::new(23, 0), 1, &mut log);
        for ((_, b, _), st) in log.grid.iter().zip(&log.states) {
            assert_eq!(st.r, 0.0);
            assert_eq!(st.x, b.abs());
        }
    }

    #[test]
    fn first_event_adds_its_distance() {
        let p = RatchetParams::new(1.0_f64, 10.0, 1e-3);
        let mut log = DrivingLog::default();
        let t = {
            let mut rec = Recorder::new(&p);
            run_graphical(&p, ReplicaStreams::new(24, 0), 1, &mut (&mut rec, &mut log));
            rec.finish()
        };
        let first = log.events[0];
        assert_eq!(t.jumps[0].r_post, first.s.abs());
    }

    #[test]
    fn bridge_crossing_probability() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(25);
        let (a, b, dt) = (0.05_f64, 0.08, 1e-2);
        let n = 200_000;
        let hits = (0..n).filter(|_| bridge_hits(a, b, 0.0, dt, &mut rng)).count();
        let p = (-2.0 * a * b / dt).exp();
        let se = (p * (1.0 - p) / n as f64).sqrt();
        assert!((hits as f64 / n as f64 - p).abs() < 4.0 * se);
        assert!(bridge_hits(0.1, -0.1, 0.0, dt, &mut rng));
    }
}
