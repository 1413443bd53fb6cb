//! Per-replica random streams.
//!
//! Every replica owns three ChaCha8 streams derived from `(seed, replica)`:
//! Brownian increments, jump draws, and the uniforms deciding whether the
//! path touched the boundary inside a step. Results therefore do not depend
//! on how replicas are scheduled, and runs at different step sizes that
//! share Brownian normals also share their jump draws.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::Real;

#[derive(Clone, Debug)]
pub struct ReplicaStreams {
    pub brownian: ChaCha8Rng,
    pub jumps: ChaCha8Rng,
    pub touches: ChaCha8Rng,
}

impl ReplicaStreams {
    pub fn new(seed: u64, replica: u64) -> Self {
        let stream = |k: u64| {
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            r.set_stream(3 * replica + k);
            r
        };
        Self {
            brownian: stream(0),
            jumps: stream(1),
            touches: stream(2),
        }
    }
}

/// Gaussian increments over a step of length `dt`.
///
/// With `substeps = m` each increment is the sum of `m` independent
/// `N(0, dt/m)` draws, so a run at step `2h` with `m = 2` uses exactly the
/// normals of a run at step `h` with `m = 1`.
#[derive(Clone, Debug)]
pub struct BrownianDriver {
    rng: ChaCha8Rng,
    substeps: usize,
}

impl BrownianDriver {
    pub fn new(rng: ChaCha8Rng, substeps: usize) -> Self {
        Self {
            rng,
            substeps: substeps.max(1),
        }
    }

    pub fn substeps(&self) -> usize {
        self.substeps
    }

    #[inline]
    pub fn increment<T: Real>(&mut self, sqrt_fine_dt: T) -> T {
        if self.substeps == 1 {
            let z: f64 = StandardNormal.sample(&mut self.rng);
            return sqrt_fine_dt * T::lit(z);
        }
        let mut z = 0.0;
        for _ in 0..self.substeps {
            let d: f64 = StandardNormal.sample(&mut self.rng);
            z += d;
        }
        sqrt_fine_dt * T::lit(z)
    }
}

#[inline]
pub(crate) fn uniform<T: Real, R: Rng + ?Sized>(rng: &mut R) -> T {
    T::lit(rng.random::<f64>())
}

/// Uniform on the open interval (0, 1).
#[inline]
pub(crate) fn uniform_open<T: Real, R: Rng + ?Sized>(rng: &mut R) -> T {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return T::lit(u);
        }
    }
}

#[inline]
pub(crate) fn exp1<T: Real, R: Rng + ?Sized>(rng: &mut R) -> T {
    let e: f64 = Exp1.sample(rng);
    T::lit(e)
}

#[inline]
pub(crate) fn normal<T: Real, R: Rng + ?Sized>(rng: &mut R) -> T {
    let z: f64 = StandardNormal.sample(rng);
    T::lit(z)
}
