//! Airy and Scorer functions and the closed-form quantities built on them.
//!
//! The killed-diffusion analytics in [`green`] are stated for γ = 1/2. For
//! a general rate the ratchet is a space-time rescaling of that one: lengths
//! scale by `(2γ)^{-1/3}` and times by `(2γ)^{-2/3}` ([`length_scale`],
//! [`time_scale`]).

pub mod airy;
pub mod gamma;
pub mod green;
pub mod integrals;
pub mod quad;

use serde::{Deserialize, Serialize};

use crate::error::{check_positive, Result};
use crate::Real;

pub use airy::{ai_prime_zero, ai_zero, airy, airy_scaled, bi_zero, AiryBundle, ScaledAiry};
pub use green::{
    expected_jump_position, expected_jump_time, green, invariant_cdf, invariant_density,
    invariant_mean_gap, invariant_mean_time, killing_cdf, killing_position_density, GreenEval,
};
pub use integrals::{ai_integral, ai_tail_integral, bi_integral, scorer_gi, scorer_gi_prime};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticConstants<T> {
    /// `C_γ`, the almost-sure limit of `X_t/t`.
    pub speed: T,
    /// `√(1 − 2/π)`, the numerically conjectured diffusion constant.
    pub sigma_conjectured: T,
}

/// `C_γ = Γ(2/3)/Γ(1/3)·(3γ/4)^{1/3}` and the conjectured σ.
pub fn asymptotic_constants<T: Real>(gamma: T) -> Result<AsymptoticConstants<T>> {
    check_positive("gamma", gamma)?;
    let ratio = gamma::gamma(T::lit(2.0 / 3.0)) / gamma::gamma(T::lit(1.0 / 3.0));
    Ok(AsymptoticConstants {
        speed: ratio * (T::lit(0.75) * gamma).cbrt(),
        sigma_conjectured: (T::one() - T::lit(2.0) * T::FRAC_1_PI()).sqrt(),
    })
}

/// `C_γ` alone.
pub fn speed<T: Real>(gamma: T) -> Result<T> {
    Ok(asymptotic_constants(gamma)?.speed)
}

/// Factor mapping γ = 1/2 lengths to rate-`gamma` lengths.
pub fn length_scale<T: Real>(gamma: T) -> Result<T> {
    check_positive("gamma", gamma)?;
    Ok((T::lit(2.0) * gamma).cbrt().recip())
}

/// Factor mapping γ = 1/2 times to rate-`gamma` times.
pub fn time_scale<T: Real>(gamma: T) -> Result<T> {
    let l = length_scale(gamma)?;
    Ok(l * l)
}
