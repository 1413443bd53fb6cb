//! Closed forms for reflected Brownian motion killed at rate `y` (the
//! ratchet at γ = 1/2 seen from its reflection point).
//!
//! The Green function with respect to the speed measure `2dy` is
//! `G(x, y) = π·ψ(x∧y)·Ai(x∨y)` with `ψ = Bi + √3·Ai`. Because `ψ'' = yψ`,
//! `Ai'' = yAi` and `ψ′(0) = 0`, the killing-position distribution has an
//! exact CDF in terms of `ψ′` and `Ai′`; nothing below needs quadrature
//! except the expected killing time.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{check_finite, check_nonneg, Result};
use crate::special::airy::{
    ai_prime_zero, ai_zero, airy_scaled_unchecked, airy_unchecked, bi_zero, psi_scaled_unchecked,
};
use crate::special::integrals::{ai_tail_integral, scorer_gi_pair_unchecked};
use crate::Real;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GreenEval<T> {
    pub x: T,
    pub y: T,
    pub value: T,
}

fn check_pair<T: Real>(x: T, y: T) -> Result<()> {
    check_nonneg("x", x)?;
    check_nonneg("y", y)
}

pub(crate) fn green_unchecked<T: Real>(x: T, y: T) -> T {
    let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
    let p = psi_scaled_unchecked(lo);
    let a = airy_scaled_unchecked(hi);
    T::PI() * p.psi * a.ai * (p.zeta - a.zeta).exp()
}

/// Green function `G(x, y) = π·ψ(x∧y)·Ai(x∨y)`.
pub fn green<T: Real>(x: T, y: T) -> Result<GreenEval<T>> {
    check_pair(x, y)?;
    Ok(GreenEval {
        x,
        y,
        value: green_unchecked(x, y),
    })
}

/// Density `y·G(x, y)` of the killing position for a start at `x`.
pub fn killing_position_density<T: Real>(x: T, y: T) -> Result<T> {
    check_pair(x, y)?;
    Ok(y * green_unchecked(x, y))
}

/// `P(killed at or below y)` for a start at `x`.
pub fn killing_cdf<T: Real>(x: T, y: T) -> Result<T> {
    check_pair(x, y)?;
    Ok(killing_cdf_unchecked(x, y))
}

pub(crate) fn killing_cdf_unchecked<T: Real>(x: T, y: T) -> T {
    if y <= x {
        let a = airy_scaled_unchecked(x);
        let p = psi_scaled_unchecked(y);
        T::PI() * a.ai * p.psi_prime * (p.zeta - a.zeta).exp()
    } else {
        let p = psi_scaled_unchecked(x);
        let a = airy_scaled_unchecked(y);
        let upper = T::PI() * p.psi * (-a.ai_prime) * (p.zeta - a.zeta).exp();
        T::one() - upper
    }
}

/// Mean killing position `x + 2π·Ai(x)·Bi(0)`.
pub fn expected_jump_position<T: Real>(x: T) -> Result<T> {
    check_nonneg("x", x)?;
    Ok(x + T::lit(2.0) * T::PI() * airy_unchecked(x).ai * bi_zero::<T>())
}

const TIME_TABLE_STEP: f64 = 0.01;
const TIME_TABLE_MAX: f64 = 16.0;

fn expected_jump_time_direct(x: f64) -> (f64, f64) {
    let (gi, gip) = scorer_gi_pair_unchecked(x);
    let b = airy_unchecked(x);
    let c = 2.0 * std::f64::consts::PI;
    let r3 = 1.0 / 3f64.sqrt();
    (c * (gi + b.ai * r3), c * (gip + b.ai_prime * r3))
}

fn time_table() -> &'static [(f64, f64)] {
    static TABLE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let n = (TIME_TABLE_MAX / TIME_TABLE_STEP).round() as usize;
        (0..=n)
            .map(|i| expected_jump_time_direct(i as f64 * TIME_TABLE_STEP))
            .collect()
    })
}

/// Cubic Hermite interpolation of the tabulated `E_x[τ]` on `[0, 16]`.
pub(crate) fn expected_jump_time_fast(x: f64) -> f64 {
    if !(x < TIME_TABLE_MAX) {
        return expected_jump_time_direct(x).0;
    }
    let table = time_table();
    let u = x / TIME_TABLE_STEP;
    let i = (u.floor() as usize).min(table.len() - 2);
    let t = u - i as f64;
    let (f0, d0) = table[i];
    let (f1, d1) = table[i + 1];
    let h = TIME_TABLE_STEP;
    let t2 = t * t;
    let t3 = t2 * t;
    (2.0 * t3 - 3.0 * t2 + 1.0) * f0
        + (t3 - 2.0 * t2 + t) * h * d0
        + (-2.0 * t3 + 3.0 * t2) * f1
        + (t3 - t2) * h * d1
}

/// Mean killing time `2π(Gi(x) + Ai(x)/√3)`.
pub fn expected_jump_time<T: Real>(x: T) -> Result<T> {
    check_nonneg("x", x)?;
    Ok(T::lit(expected_jump_time_direct(x.as_f64()).0))
}

/// Stationary density `3·Ai(z)` of the gap at jump times.
pub fn invariant_density<T: Real>(z: T) -> Result<T> {
    check_nonneg("z", z)?;
    Ok(T::lit(3.0) * airy_unchecked(z).ai)
}

/// CDF `1 − 3∫_z^∞ Ai` of the stationary gap.
pub fn invariant_cdf<T: Real>(z: T) -> Result<T> {
    check_finite("z", z)?;
    if z <= T::zero() {
        return Ok(T::zero());
    }
    Ok(T::one() - T::lit(3.0) * ai_tail_integral(z)?)
}

/// Stationary mean gap `−3Ai′(0)`.
pub fn invariant_mean_gap<T: Real>() -> T {
    -T::lit(3.0) * ai_prime_zero::<T>()
}

/// Stationary mean inter-jump time `6Ai(0)`.
pub fn invariant_mean_time<T: Real>() -> T {
    T::lit(6.0) * ai_zero::<T>()
}
