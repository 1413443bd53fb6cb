//! Lanczos approximation of the gamma function (g = 7, nine terms).

use crate::Real;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Γ(z) for z > 0.
///
/// Arguments below 1/2 are lifted with Γ(z) = Γ(z + 1)/z rather than the
/// reflection formula, so reflection stays available as an independent check.
pub fn gamma<T: Real>(z: T) -> T {
    debug_assert!(z > T::zero());
    if z < T::lit(0.5) {
        return gamma(z + T::one()) / z;
    }
    let z = z - T::one();
    let mut acc = T::lit(LANCZOS[0]);
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        acc = acc + T::lit(c) / (z + T::from_usize_lossy(i));
    }
    let t = z + T::lit(LANCZOS_G + 0.5);
    (T::lit(2.0) * T::PI()).sqrt() * t.powf(z + T::lit(0.5)) * (-t).exp() * acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn integer_and_half_integer_values() {
        assert_relative_eq!(gamma(1.0_f64), 1.0, max_relative = 1e-14);
        assert_relative_eq!(gamma(5.0_f64), 24.0, max_relative = 1e-14);
        assert_relative_eq!(
            gamma(0.5_f64),
            std::f64::consts::PI.sqrt(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn thirds_satisfy_reflection() {
        let lhs = gamma(1.0_f64 / 3.0) * gamma(2.0_f64 / 3.0);
        let rhs = std::f64::consts::PI / (std::f64::consts::PI / 3.0).sin();
        assert!((lhs - rhs).abs() < 1e-13, "{lhs} vs {rhs}");
    }

    #[test]
    fn single_precision_is_close() {
        assert_relative_eq!(gamma(1.0_f32 / 3.0), 2.678_938_5, max_relative = 1e-5);
    }
}
