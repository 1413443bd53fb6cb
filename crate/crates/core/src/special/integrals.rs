//! Integrals of the Airy functions and the Scorer function `Gi`.
//!
//! Everything is computed in exponentially scaled form: the tail
//! `∫ₓ^∞ Ai = m·e^{−ζ(x)}` and the head `∫₀ˣ Bi = m·e^{ζ(x)}`, so that
//! `Gi = Ai·∫₀ˣBi + Bi·∫ₓ^∞Ai` is a sum of two O(1) products for any `x`.

use crate::error::{check_nonneg, Result};
use crate::special::airy::{airy_scaled_unchecked, zeta};
use crate::special::quad::integrate_pieces;
use crate::Real;

/// Offsets in ζ at which the integration range is split.
/// Beyond the last offset the integrand is below `e^{-80}` of its peak and
/// the range is dropped.
const ZETA_BREAKS: [f64; 9] = [0.0, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 40.0, 80.0];
const REL_TOL: f64 = 1e-14;

/// `ζ(u) − ζ(x)` without cancellation between two large values.
fn zeta_diff<T: Real>(u: T, x: T) -> T {
    let (su, sx) = (u.sqrt(), x.sqrt());
    if su + sx == T::zero() {
        return T::zero();
    }
    T::lit(2.0 / 3.0) * (u - x) * (u + su * sx + x) / (su + sx)
}

/// `(m, ζ)` with `∫ₓ^∞ Ai = m·e^{−ζ}`.
pub(crate) fn ai_tail_scaled<T: Real>(x: T) -> (T, T) {
    let z = zeta(x);
    let x15 = x * x.sqrt();
    let breaks: Vec<T> = ZETA_BREAKS
        .iter()
        .map(|&d| (x15 + T::lit(1.5 * d)).powf(T::lit(2.0 / 3.0)))
        .collect();
    let f = |u: T| {
        let s = airy_scaled_unchecked(u);
        s.ai * (-zeta_diff(u, x)).exp()
    };
    let scale = airy_scaled_unchecked(x).ai / (T::one() + x.sqrt());
    let m = integrate_pieces(f, &breaks, scale * T::lit(REL_TOL));
    (m, z)
}

/// `(m, ζ)` with `∫₀ˣ Bi = m·e^{ζ}`.
pub(crate) fn bi_head_scaled<T: Real>(x: T) -> (T, T) {
    let z = zeta(x);
    let x15 = x * x.sqrt();
    let mut breaks: Vec<T> = vec![x];
    let mut truncated = false;
    for &d in ZETA_BREAKS.iter().skip(1) {
        let inner = x15 - T::lit(1.5 * d);
        if inner <= T::zero() {
            break;
        }
        breaks.push(inner.powf(T::lit(2.0 / 3.0)));
        truncated = d == ZETA_BREAKS[ZETA_BREAKS.len() - 1];
    }
    if !truncated {
        breaks.push(T::zero());
    }
    breaks.reverse();
    let f = |u: T| {
        let s = airy_scaled_unchecked(u);
        s.bi * zeta_diff(u, x).exp()
    };
    let scale = airy_scaled_unchecked(x).bi * x.min(T::one() / (T::one() + x.sqrt()));
    let m = integrate_pieces(f, &breaks, (scale * T::lit(REL_TOL)).max(T::min_positive_value()));
    (m, z)
}

/// `∫ₓ^∞ Ai(u) du` for `x ≥ 0`; underflows gracefully to zero.
pub fn ai_tail_integral<T: Real>(x: T) -> Result<T> {
    check_nonneg("x", x)?;
    let (m, z) = ai_tail_scaled(x);
    Ok(m * (-z).exp())
}

/// `∫₀ˣ Ai(u) du` for `x ≥ 0`.
pub fn ai_integral<T: Real>(x: T) -> Result<T> {
    Ok(T::lit(1.0 / 3.0) - ai_tail_integral(x)?)
}

/// `∫₀ˣ Bi(u) du` for `x ≥ 0`; overflows to infinity near `x ≈ 104`.
pub fn bi_integral<T: Real>(x: T) -> Result<T> {
    check_nonneg("x", x)?;
    let (m, z) = bi_head_scaled(x);
    Ok(m * z.exp())
}

pub(crate) fn scorer_gi_pair_unchecked<T: Real>(x: T) -> (T, T) {
    let s = airy_scaled_unchecked(x);
    let (tail, _) = ai_tail_scaled(x);
    let (head, _) = bi_head_scaled(x);
    (
        s.ai * head + s.bi * tail,
        s.ai_prime * head + s.bi_prime * tail,
    )
}

/// Scorer's `Gi(x) = Ai(x)∫₀ˣBi + Bi(x)∫ₓ^∞Ai`, a solution of
/// `u'' − xu = −1/π`.
pub fn scorer_gi<T: Real>(x: T) -> Result<T> {
    check_nonneg("x", x)?;
    Ok(scorer_gi_pair_unchecked(x).0)
}

/// `Gi′(x)`.
pub fn scorer_gi_prime<T: Real>(x: T) -> Result<T> {
    check_nonneg("x", x)?;
    Ok(scorer_gi_pair_unchecked(x).1)
}
