//! Airy functions Ai, Bi and their derivatives on the non-negative axis.
//!
//! Three regimes:
//!
//! * `x ≤ 2`: Maclaurin series of the auxiliary functions
//!   `f(x) = Σ 3ᵏ(1/3)ₖ x³ᵏ/(3k)!` and `g(x) = Σ 3ᵏ(2/3)ₖ x³ᵏ⁺¹/(3k+1)!`,
//!   with `Ai = c₁f − c₂g` and `Bi = √3(c₁f + c₂g)`.
//! * `2 < x ≤ 8`: `Bi` still from the series (no cancellation), `Ai` by a
//!   short Taylor expansion of `u'' = xu` around tabulated nodes. The nodes
//!   are produced once by stepping the ODE backwards from `x = 12`, where the
//!   asymptotic expansion is exact to double precision; backwards the
//!   recessive solution `Ai` becomes dominant, so the stepping is stable.
//! * `x > 8`: the standard asymptotic expansions in `ζ = ⅔x^{3/2}`.
//!
//! The scaled variants carry `e^{ζ}` (for `Ai`) and `e^{−ζ}` (for `Bi`) so
//! products like `Ai(x)Bi(y)` stay representable for large arguments.

use std::sync::OnceLock;

use crate::error::{check_nonneg, Result};
use crate::special::gamma::gamma;
use crate::Real;

const SERIES_AI_MAX: f64 = 2.0;
const SERIES_BI_MAX: f64 = 8.0;
const NODE_SPACING: f64 = 0.25;
const NODE_LAST: f64 = 8.5;
const NODE_START: f64 = 12.0;
const MAX_TERMS: usize = 400;

/// Ai, Ai′, Bi, Bi′ at one argument.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AiryBundle<T> {
    pub ai: T,
    pub ai_prime: T,
    pub bi: T,
    pub bi_prime: T,
}

impl<T: Real> AiryBundle<T> {
    /// `Bi′·Ai − Ai′·Bi`, identically 1/π.
    pub fn wronskian(&self) -> T {
        self.bi_prime * self.ai - self.ai_prime * self.bi
    }
}

/// Airy bundle with `ai`, `ai_prime` multiplied by `e^{ζ}` and `bi`,
/// `bi_prime` multiplied by `e^{−ζ}`, where `zeta = ⅔x^{3/2}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScaledAiry<T> {
    pub ai: T,
    pub ai_prime: T,
    pub bi: T,
    pub bi_prime: T,
    pub zeta: T,
}

/// `ψ = Bi + √3·Ai`, the increasing solution with `ψ′(0) = 0`, and its
/// derivative, both multiplied by `e^{−ζ}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScaledPsi<T> {
    pub psi: T,
    pub psi_prime: T,
    pub zeta: T,
}

/// `Ai(0) = 1/(3^{2/3} Γ(2/3))`.
pub fn ai_zero<T: Real>() -> T {
    T::one() / (T::lit(3.0).powf(T::lit(2.0 / 3.0)) * gamma(T::lit(2.0 / 3.0)))
}

/// `Ai′(0) = −1/(3^{1/3} Γ(1/3))`.
pub fn ai_prime_zero<T: Real>() -> T {
    -T::one() / (T::lit(3.0).powf(T::lit(1.0 / 3.0)) * gamma(T::lit(1.0 / 3.0)))
}

/// `Bi(0) = √3·Ai(0)`.
pub fn bi_zero<T: Real>() -> T {
    T::lit(3.0).sqrt() * ai_zero::<T>()
}

#[inline]
pub(crate) fn zeta<T: Real>(x: T) -> T {
    T::lit(2.0 / 3.0) * x * x.sqrt()
}

/// Ai, Ai′, Bi, Bi′ at `x ≥ 0`.
pub fn airy<T: Real>(x: T) -> Result<AiryBundle<T>> {
    check_nonneg("x", x)?;
    Ok(airy_unchecked(x))
}

/// Exponentially scaled Airy bundle at `x ≥ 0`.
pub fn airy_scaled<T: Real>(x: T) -> Result<ScaledAiry<T>> {
    check_nonneg("x", x)?;
    Ok(airy_scaled_unchecked(x))
}

pub(crate) fn airy_unchecked<T: Real>(x: T) -> AiryBundle<T> {
    if x > T::lit(SERIES_BI_MAX) {
        let s = asymptotic(x);
        let grow = s.zeta.exp();
        let decay = T::one() / grow;
        AiryBundle {
            ai: s.ai * decay,
            ai_prime: s.ai_prime * decay,
            bi: s.bi * grow,
            bi_prime: s.bi_prime * grow,
        }
    } else {
        moderate(x)
    }
}

pub(crate) fn airy_scaled_unchecked<T: Real>(x: T) -> ScaledAiry<T> {
    if x > T::lit(SERIES_BI_MAX) {
        asymptotic(x)
    } else {
        let b = moderate(x);
        let z = zeta(x);
        let grow = z.exp();
        let decay = T::one() / grow;
        ScaledAiry {
            ai: b.ai * grow,
            ai_prime: b.ai_prime * grow,
            bi: b.bi * decay,
            bi_prime: b.bi_prime * decay,
            zeta: z,
        }
    }
}

/// Scaled `ψ = Bi + √3·Ai` and `ψ′` at `x ≥ 0`.
///
/// Below the asymptotic crossover `ψ = 2√3·Ai(0)·f(x)`, which avoids the
/// cancellation in `Bi′ + √3·Ai′` near the origin.
pub(crate) fn psi_scaled_unchecked<T: Real>(x: T) -> ScaledPsi<T> {
    let z = zeta(x);
    if x > T::lit(SERIES_BI_MAX) {
        let s = asymptotic(x);
        let sqrt3 = T::lit(3.0).sqrt();
        let tiny = (-(z + z)).exp();
        ScaledPsi {
            psi: s.bi + sqrt3 * s.ai * tiny,
            psi_prime: s.bi_prime + sqrt3 * s.ai_prime * tiny,
            zeta: z,
        }
    } else {
        let m = maclaurin(x);
        let k = T::lit(2.0) * T::lit(3.0).sqrt() * ai_zero::<T>();
        let decay = (-z).exp();
        ScaledPsi {
            psi: k * m.f * decay,
            psi_prime: k * m.fp * decay,
            zeta: z,
        }
    }
}

struct Aux<T> {
    f: T,
    fp: T,
    g: T,
    gp: T,
}

fn maclaurin<T: Real>(x: T) -> Aux<T> {
    let x3 = x * x * x;
    let eps = T::epsilon() * T::lit(0.25);
    let (mut f, mut ft) = (T::one(), T::one());
    let (mut g, mut gt) = (x, x);
    let (mut fp, mut fpt) = (T::zero(), x * x * T::lit(0.5));
    let (mut gp, mut gpt) = (T::one(), T::one());
    fp = fp + fpt;
    for k in 1..MAX_TERMS {
        let k3 = T::from_usize_lossy(3 * k);
        ft = ft * x3 / ((k3 - T::one()) * k3);
        gt = gt * x3 / (k3 * (k3 + T::one()));
        gpt = gpt * x3 / ((k3 - T::lit(2.0)) * k3);
        f = f + ft;
        g = g + gt;
        gp = gp + gpt;
        if k >= 2 {
            fpt = fpt * x3 / ((k3 - T::lit(3.0)) * (k3 - T::one()));
            fp = fp + fpt;
        }
        let done = ft <= eps * f && gt <= eps * g && gpt <= eps * gp && fpt <= eps * fp;
        if done || x3 == T::zero() {
            break;
        }
    }
    Aux { f, fp, g, gp }
}

fn moderate<T: Real>(x: T) -> AiryBundle<T> {
    let m = maclaurin(x);
    let c1 = ai_zero::<T>();
    let c2 = -ai_prime_zero::<T>();
    let sqrt3 = T::lit(3.0).sqrt();
    let bi = sqrt3 * (c1 * m.f + c2 * m.g);
    let bi_prime = sqrt3 * (c1 * m.fp + c2 * m.gp);
    let (ai, ai_prime) = if x <= T::lit(SERIES_AI_MAX) {
        (c1 * m.f - c2 * m.g, c1 * m.fp - c2 * m.gp)
    } else {
        ai_from_nodes(x)
    };
    AiryBundle {
        ai,
        ai_prime,
        bi,
        bi_prime,
    }
}

fn asymptotic<T: Real>(x: T) -> ScaledAiry<T> {
    let z = zeta(x);
    let inv = T::one() / z;
    let eps = T::epsilon() * T::lit(0.25);
    // u_k, v_k of the standard expansion.
    let (mut u, mut term_prev) = (T::one(), T::infinity());
    let (mut s_ai, mut s_bi) = (T::one(), T::one());
    let (mut s_aip, mut s_bip) = (T::one(), T::one());
    let mut pow = T::one();
    for k in 1..60 {
        let kf = T::from_usize_lossy(k);
        let six = T::lit(6.0) * kf;
        u = u * (six - T::lit(5.0)) * (six - T::lit(3.0)) * (six - T::one())
            / ((T::lit(2.0) * kf - T::one()) * T::lit(216.0) * kf);
        let v = -(six + T::one()) / (six - T::one()) * u;
        pow = pow * inv;
        let tu = u * pow;
        let tv = v * pow;
        let mag = tu.abs().max(tv.abs());
        if mag > term_prev {
            break;
        }
        term_prev = mag;
        let sign = if k % 2 == 1 { -T::one() } else { T::one() };
        s_ai = s_ai + sign * tu;
        s_aip = s_aip + sign * tv;
        s_bi = s_bi + tu;
        s_bip = s_bip + tv;
        if mag < eps {
            break;
        }
    }
    let rpi = T::PI().sqrt().recip();
    let q = x.sqrt().sqrt();
    ScaledAiry {
        ai: T::lit(0.5) * rpi / q * s_ai,
        ai_prime: -T::lit(0.5) * rpi * q * s_aip,
        bi: rpi / q * s_bi,
        bi_prime: rpi * q * s_bip,
        zeta: z,
    }
}

/// One Taylor step of `u'' = xu` from `x0` by `h`, returning `(u, u')`.
fn taylor_step<T: Real>(x0: T, u0: T, up0: T, h: T) -> (T, T) {
    let eps = T::epsilon() * T::lit(0.01);
    let mut a_nm1 = up0; // a_1
    let mut a_n = x0 * u0 * T::lit(0.5); // a_2
    let mut a_nm2 = u0; // a_0
    let mut hp = h * h; // h^2
    let mut u = u0 + up0 * h + a_n * hp;
    let mut up = up0 + T::lit(2.0) * a_n * h;
    let scale = u0.abs() + up0.abs();
    let mut small = 0;
    for n in 2..MAX_TERMS {
        // a_{n+1} = (x0 a_{n-1} + a_{n-2}) / ((n+1) n)
        let nf = T::from_usize_lossy(n);
        let a_np1 = (x0 * a_nm1 + a_nm2) / ((nf + T::one()) * nf);
        let hn = hp; // h^n
        hp = hp * h;
        let du = a_np1 * hp;
        let dup = (nf + T::one()) * a_np1 * hn;
        u = u + du;
        up = up + dup;
        if du.abs().max(dup.abs()) <= eps * scale {
            small += 1;
            if small >= 2 {
                break;
            }
        } else {
            small = 0;
        }
        a_nm2 = a_nm1;
        a_nm1 = a_n;
        a_n = a_np1;
    }
    (u, up)
}

fn nodes() -> &'static [(f64, f64)] {
    static NODES: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    NODES.get_or_init(|| {
        let steps_total = (NODE_START / NODE_SPACING).round() as usize;
        let kept = (NODE_LAST / NODE_SPACING).round() as usize;
        let s = asymptotic(NODE_START);
        let decay = (-s.zeta).exp();
        let (mut u, mut up) = (s.ai * decay, s.ai_prime * decay);
        let mut table = vec![(0.0, 0.0); kept + 1];
        for j in (0..steps_total).rev() {
            let x0 = (j + 1) as f64 * NODE_SPACING;
            let next = taylor_step(x0, u, up, -NODE_SPACING);
            u = next.0;
            up = next.1;
            if j <= kept {
                table[j] = (u, up);
            }
        }
        table
    })
}

fn ai_from_nodes<T: Real>(x: T) -> (T, T) {
    let table = nodes();
    let j = (x.as_f64() / NODE_SPACING).round() as usize;
    let j = j.min(table.len() - 1);
    let x0 = j as f64 * NODE_SPACING;
    let (u, up) = table[j];
    taylor_step(T::lit(x0), T::lit(u), T::lit(up), x - T::lit(x0))
}
