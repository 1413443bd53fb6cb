use approx::assert_relative_eq;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ratchet::engine::simulate_path;
use ratchet::io;
use ratchet::jumpchain::{chain_step, sample_killing_position};
use ratchet::rng::ReplicaStreams;
use ratchet::special::{killing_cdf, speed};
use ratchet::variants::BoundSet;
use ratchet::{rescale_trajectory, Params};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn killing_cdf_is_a_distribution(x in 0.0..6.0_f64, a in 0.0..8.0_f64, b in 0.0..8.0_f64) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let f_lo = killing_cdf(x, lo).unwrap();
        let f_hi = killing_cdf(x, hi).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&f_lo));
        prop_assert!(f_hi >= f_lo - 1e-12);
        prop_assert!(killing_cdf(x, 0.0).unwrap().abs() < 1e-12);
    }

    #[test]
    fn killing_sampler_inverts_the_cdf(x in 0.0..5.0_f64, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y = sample_killing_position(x, &mut rng).unwrap();
        prop_assert!(y.is_finite() && y >= 0.0);
        let mut again = ChaCha8Rng::seed_from_u64(seed);
        prop_assert_eq!(sample_killing_position(x, &mut again).unwrap(), y);
    }

    #[test]
    fn chain_step_lands_below_the_killing_position(y in 0.0..5.0_f64, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = chain_step(y, &mut rng).unwrap();
        prop_assert!(r.y >= 0.0 && r.w >= 0.0 && r.eta_expected > 0.0);
    }

    #[test]
    fn speed_scales_as_cube_root(g in 1e-3..1e3_f64, k in 1e-2..1e2_f64) {
        let ratio = speed(g * k).unwrap() / speed(g).unwrap();
        prop_assert!((ratio - k.cbrt()).abs() <= 1e-12 * k.cbrt());
    }

    #[test]
    fn bound_set_reflects_at_its_maximum(points in prop::collection::vec(0.0..100.0_f64, 1..60), seed in any::<u64>()) {
        let mut set = BoundSet::new();
        for &p in &points {
            set.insert(p).unwrap();
        }
        prop_assert_eq!(set.len(), points.len());
        let max = points.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert_eq!(set.reflection_point(), max);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gone = set.remove_random(&mut rng).unwrap();
        prop_assert!(points.contains(&gone));
        let rest = set.positions().fold(f64::NEG_INFINITY, f64::max);
        if set.is_empty() {
            prop_assert_eq!(set.reflection_point(), 0.0);
        } else {
            prop_assert_eq!(set.reflection_point(), rest);
        }
    }

    #[test]
    fn rescaling_round_trips(g in 0.1..10.0_f64, to in 0.1..10.0_f64, seed in 0..1000_u64) {
        let p = Params::new(g, 2.0, 1e-3).with_stride(50);
        let tr = simulate_path(&p, ReplicaStreams::new(seed, 0)).unwrap();
        let back = rescale_trajectory(&rescale_trajectory(&tr, to).unwrap(), g).unwrap();
        for (u, v) in back.samples.iter().zip(&tr.samples) {
            assert_relative_eq!(u.x, v.x, max_relative = 1e-12, epsilon = 1e-14);
            assert_relative_eq!(u.t, v.t, max_relative = 1e-12, epsilon = 1e-14);
        }
        prop_assert_eq!(back.jumps.len(), tr.jumps.len());
    }

    #[test]
    fn trajectories_survive_csv(seed in 0..1000_u64) {
        let p = Params::new(1.0, 3.0, 1e-3).with_stride(25);
        let tr = simulate_path(&p, ReplicaStreams::new(seed, 1)).unwrap();
        let (mut a, mut b) = (Vec::new(), Vec::new());
        io::write_trajectory(&tr, &mut a).unwrap();
        io::write_jumps(&tr.jumps, &mut b).unwrap();
        let back = io::read_trajectory(p, &a[..], &b[..]).unwrap();
        prop_assert_eq!(back.samples.len(), tr.samples.len());
        for (u, v) in back.jumps.iter().zip(&tr.jumps) {
            assert_relative_eq!(u.r_post, v.r_post, max_relative = 1e-13, epsilon = 1e-300);
            assert_relative_eq!(u.tau, v.tau, max_relative = 1e-13, epsilon = 1e-300);
        }
    }
}

#[test]
fn paths_are_reflected_and_ratcheted() {
    for seed in 0..20 {
        let p = Params::new(2.0, 5.0, 1e-3);
        let tr = simulate_path(&p, ReplicaStreams::new(seed, 0)).unwrap();
        let mut r_prev = 0.0;
        for s in &tr.samples {
            assert!(s.x >= s.r - 1e-12, "{s:?}");
            assert!(s.r >= r_prev);
            r_prev = s.r;
        }
        for j in &tr.jumps {
            assert!(j.r_pre <= j.r_post && j.r_post <= j.x_pre);
        }
    }
}
