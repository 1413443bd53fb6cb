//! Goodness-of-fit and summary statistics.

use serde::{Deserialize, Serialize};

use crate::error::{check_positive, Error, Result};
use crate::special::speed;
use crate::Real;

const KS_MIN: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    /// Effective sample size entering the asymptotic distribution.
    pub n_eff: f64,
}

impl KsResult {
    pub fn passes(&self, alpha: f64) -> bool {
        self.p_value > alpha
    }
}

/// Survival function `P(K > λ)` of the Kolmogorov distribution.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        // P(K ≤ λ) = √(2π)/λ · Σ_{k odd} exp(−k²π²/(8λ²))
        let c = -std::f64::consts::PI.powi(2) / (8.0 * lambda * lambda);
        let mut sum = 0.0;
        for k in (1..40).step_by(2) {
            let term = (c * (k * k) as f64).exp();
            sum += term;
            if term < 1e-18 {
                break;
            }
        }
        (1.0 - (2.0 * std::f64::consts::PI).sqrt() / lambda * sum).clamp(0.0, 1.0)
    } else {
        let mut sum = 0.0;
        let mut sign = 1.0;
        for k in 1..100 {
            let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
            sum += sign * term;
            sign = -sign;
            if term < 1e-18 {
                break;
            }
        }
        (2.0 * sum).clamp(0.0, 1.0)
    }
}

fn sorted_f64<T: Real>(v: &[T]) -> Vec<f64> {
    let mut s: Vec<f64> = v.iter().map(|x| x.as_f64()).collect();
    s.sort_by(f64::total_cmp);
    s
}

fn ensure_finite(v: &[f64]) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite { name: "samples" })
    }
}

/// One-sample Kolmogorov–Smirnov test with asymptotic p-value.
pub fn ks_one_sample<T: Real, F: Fn(f64) -> f64>(samples: &[T], cdf: F) -> Result<KsResult> {
    if samples.len() < KS_MIN {
        return Err(Error::TooFew {
            what: "samples",
            got: samples.len(),
            min: KS_MIN,
        });
    }
    let s = sorted_f64(samples);
    ensure_finite(&s)?;
    let n = s.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in s.iter().enumerate() {
        let c = cdf(x);
        d = d.max(c - i as f64 / n).max((i + 1) as f64 / n - c);
    }
    Ok(KsResult {
        statistic: d,
        p_value: kolmogorov_survival(n.sqrt() * d),
        n_eff: n,
    })
}

/// Two-sample Kolmogorov–Smirnov test with asymptotic p-value.
pub fn ks_two_sample<T: Real>(a: &[T], b: &[T]) -> Result<KsResult> {
    for v in [a, b] {
        if v.len() < KS_MIN {
            return Err(Error::TooFew {
                what: "samples",
                got: v.len(),
                min: KS_MIN,
            });
        }
    }
    let (sa, sb) = (sorted_f64(a), sorted_f64(b));
    ensure_finite(&sa)?;
    ensure_finite(&sb)?;
    let (n, m) = (sa.len() as f64, sb.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < sa.len() && j < sb.len() {
        let x = sa[i].min(sb[j]);
        while i < sa.len() && sa[i] <= x {
            i += 1;
        }
        while j < sb.len() && sb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    let n_eff = n * m / (n + m);
    Ok(KsResult {
        statistic: d,
        p_value: kolmogorov_survival(n_eff.sqrt() * d),
        n_eff,
    })
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Mean and standard error of the mean.
pub fn mean_se<T: Real>(v: &[T]) -> (f64, f64) {
    let n = v.len() as f64;
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = v.iter().map(|x| x.as_f64()).sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = v.iter().map(|x| (x.as_f64() - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Sample standard deviation.
pub fn std_dev<T: Real>(v: &[T]) -> f64 {
    let (_, se) = mean_se(v);
    se * (v.len() as f64).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CltResult {
    /// Ensemble standard deviation of `X_t` divided by `√t`.
    pub sigma_hat: f64,
    /// Approximate standard error of `sigma_hat` (normal theory).
    pub sigma_se: f64,
    pub mean_standardized: f64,
    pub ks_normal: KsResult,
}

/// Standardize `(X_t − C_γ t)/(σ̂√t)` and test against `N(0, 1)`.
pub fn clt_check<T: Real>(ensemble: &[T], t: f64, gamma: f64) -> Result<CltResult> {
    const MIN: usize = 500;
    if ensemble.len() < MIN {
        return Err(Error::TooFew {
            what: "replicas",
            got: ensemble.len(),
            min: MIN,
        });
    }
    check_positive("t", t)?;
    let c = speed(gamma)?;
    let sd = std_dev(ensemble);
    if !(sd > 0.0) {
        return Err(Error::Degenerate("ensemble has zero spread"));
    }
    let sigma_hat = sd / t.sqrt();
    let z: Vec<f64> = ensemble
        .iter()
        .map(|x| (x.as_f64() - c * t) / (sigma_hat * t.sqrt()))
        .collect();
    let n = ensemble.len() as f64;
    Ok(CltResult {
        sigma_hat,
        sigma_se: sigma_hat / (2.0 * (n - 1.0)).sqrt(),
        mean_standardized: z.iter().sum::<f64>() / n,
        ks_normal: ks_one_sample(&z, normal_cdf)?,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    pub rate: f64,
    pub r_squared: f64,
    pub points: usize,
}

/// Least-squares fit of `ln P̂(T > t)` against `t` over the sample points
/// above the median.
pub fn exp_tail_fit<T: Real>(samples: &[T]) -> Result<TailFit> {
    const MIN: usize = 100;
    if samples.len() < MIN {
        return Err(Error::TooFew {
            what: "samples",
            got: samples.len(),
            min: MIN,
        });
    }
    let s = sorted_f64(samples);
    ensure_finite(&s)?;
    let n = s.len();
    if s[0] == s[n - 1] {
        return Err(Error::Degenerate("constant sample"));
    }
    let mut pts = Vec::with_capacity(n / 2);
    for i in n / 2..n {
        // Fraction strictly above s[i]; ties collapse to their last index.
        if i + 1 < n && s[i + 1] == s[i] {
            continue;
        }
        let surv = (n - i - 1) as f64 / n as f64;
        if surv > 0.0 {
            pts.push((s[i], surv.ln()));
        }
    }
    if pts.len() < 3 {
        return Err(Error::Degenerate("too few distinct tail points"));
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Degenerate("no spread in the tail"));
    }
    let slope = sxy / sxx;
    Ok(TailFit {
        rate: -slope,
        r_squared: sxy * sxy / (sxx * syy),
        points: pts.len(),
    })
}

/// Lag-1 sample autocorrelation.
pub fn lag1_autocorrelation<T: Real>(v: &[T]) -> Result<f64> {
    if v.len() < 3 {
        return Err(Error::TooFew {
            what: "values",
            got: v.len(),
            min: 3,
        });
    }
    let x: Vec<f64> = v.iter().map(|a| a.as_f64()).collect();
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let den: f64 = x.iter().map(|a| (a - mean).powi(2)).sum();
    if den == 0.0 {
        return Err(Error::Degenerate("constant sequence"));
    }
    let num: f64 = x.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum();
    Ok(num / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Exp, StandardNormal};

    #[test]
    fn kolmogorov_reference_values() {
        // Branches agree where they meet and match textbook quantiles.
        assert!((kolmogorov_survival(1.628_0) - 0.01).abs() < 2e-4);
        assert!((kolmogorov_survival(1.358_1) - 0.05).abs() < 2e-4);
        let below = kolmogorov_survival(1.18 - 1e-9);
        let above = kolmogorov_survival(1.18 + 1e-9);
        assert!((below - above).abs() < 1e-8);
        assert_eq!(kolmogorov_survival(0.0), 1.0);
        assert!(kolmogorov_survival(0.2) > 0.999_99);
    }

    #[test]
    fn quantile_grid_has_small_statistic() {
        let n = 1000;
        let q: Vec<f64> = (1..=n).map(|i| i as f64 / (n + 1) as f64).collect();
        let r = ks_one_sample(&q, |x| x.clamp(0.0, 1.0)).unwrap();
        assert!(r.statistic <= 1.0 / (n + 1) as f64 + 1e-12);
        assert!(r.p_value > 0.99);
    }

    #[test]
    fn power_against_shift() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let u: Vec<f64> = (0..10_000).map(|_| rng.random::<f64>() + 0.1).collect();
        let r = ks_one_sample(&u, |x| x.clamp(0.0, 1.0)).unwrap();
        assert!(r.p_value < 1e-6);
        let a: Vec<f64> = (0..10_000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let b: Vec<f64> = (0..10_000)
            .map(|_| { let z: f64 = StandardNormal.sample(&mut rng); z + 0.2 })
            .collect::<Vec<f64>>();
        assert!(ks_two_sample(&a, &b).unwrap().p_value < 1e-6);
    }

    #[test]
    fn identical_samples() {
        let a: Vec<f64> = (0..50).map(|i| (i as f64).sin()).collect();
        let r = ks_two_sample(&a, &a).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn small_and_bad_samples_are_errors() {
        assert!(ks_one_sample(&[0.1_f64; 5], |x| x).is_err());
        assert!(ks_two_sample(&[0.1_f64; 20], &[0.2; 3]).is_err());
        let mut v = vec![0.5_f64; 20];
        v[3] = f64::NAN;
        assert!(ks_one_sample(&v, |x| x).is_err());
    }

    #[test]
    fn normal_cdf_values() {
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-16);
        assert!((normal_cdf(1.959_963_984_540_054) - 0.975).abs() < 1e-12);
        assert!(normal_cdf(-40.0) >= 0.0);
    }

    #[test]
    fn clt_on_synthetic_ensemble() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let (t, g) = (400.0_f64, 1.0_f64);
        let c = speed(g).unwrap();
        let ens: Vec<f64> = (0..2000)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                c * t + 0.6 * t.sqrt() * z
            })
            .collect();
        let r = clt_check(&ens, t, g).unwrap();
        assert!((r.sigma_hat - 0.6).abs() < 4.0 * r.sigma_se);
        assert!(r.ks_normal.p_value > 0.01);
        assert!(clt_check(&ens[..100], t, g).is_err());
    }

    #[test]
    fn tail_fit_calibration() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let e = Exp::new(2.0).unwrap();
        let s: Vec<f64> = (0..10_000).map(|_| e.sample(&mut rng)).collect();
        let f = exp_tail_fit(&s).unwrap();
        assert!((f.rate - 2.0).abs() < 0.1, "{f:?}");
        assert!(f.r_squared >= 0.99);

        let u: Vec<f64> = (0..10_000).map(|_| rng.random::<f64>()).collect();
        let g = exp_tail_fit(&u).unwrap();
        assert!(g.r_squared < 0.9 || g.rate > 5.0, "{g:?}");
        assert!(exp_tail_fit(&vec![1.0_f64; 200]).is_err());
    }

    #[test]
    fn autocorrelation_of_iid_and_ar1() {
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        let iid: Vec<f64> = (0..20_000).map(|_| rng.random()).collect();
        assert!(lag1_autocorrelation(&iid).unwrap().abs() < 3.0 / (20_000f64).sqrt());
        let mut x = 0.0;
        let ar: Vec<f64> = (0..20_000)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                x = 0.7 * x + z;
                x
            })
            .collect();
        assert!((lag1_autocorrelation(&ar).unwrap() - 0.7).abs() < 0.03);
    }
}
