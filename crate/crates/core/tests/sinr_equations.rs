mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ncr_sim::phy::{interference_power, sinr, Direction, RbGains};

#[test]
fn hundred_random_instances_match_brute_force() {
    let t = std::time::Instant::now();
    let err = common::sinr_oracle_max_error(100, 11);
    assert!(err <= 1e-10, "max relative error {err:e}");
    assert!(t.elapsed().as_secs_f64() < 1.0);
}

#[test]
fn many_more_instances_match_brute_force() {
    for seed in 0..20 {
        let err = common::sinr_oracle_max_error(500, seed);
        assert!(err <= 1e-10, "seed {seed}: {err:e}");
    }
}

#[test]
fn lone_signal_sees_no_interference() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut seen = 0;
    while seen < 50 {
        let inst = common::random_instance(&mut rng);
        if inst.power.len() != 1 {
            continue;
        }
        seen += 1;
        assert_eq!(interference_power(&common::to_gains(&inst), 0).unwrap(), 0.0);
    }
}

fn scale_powers(g: &RbGains, c: f64) -> RbGains {
    RbGains { tx_power: g.tx_power.iter().map(|p| p * c).collect(), ..g.clone() }
}

proptest! {
    #[test]
    fn sinr_scales_like_power_over_noise(seed in 0u64..10_000, c in 0.01..100.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = common::to_gains(&common::random_instance(&mut rng));
        let h = scale_powers(&g, c);
        for x in 0..g.num_signals() {
            let a = sinr(&g, x, 0, Direction::Dl).unwrap();
            let b = sinr(&h, x, 0, Direction::Dl).unwrap();
            prop_assert!((b.useful - c * a.useful).abs() <= 1e-12 * b.useful.max(f64::MIN_POSITIVE));
            prop_assert!((b.interference - c * a.interference).abs() <= 1e-12 * b.interference.max(f64::MIN_POSITIVE));
            prop_assert_eq!(a.noise, b.noise);
        }
    }

    #[test]
    fn sinr_is_bounded_by_total_snr(seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = common::random_instance(&mut rng);
        let g = common::to_gains(&inst);
        for x in 0..g.num_signals() {
            let s = sinr(&g, x, 0, Direction::Ul).unwrap();
            prop_assert!(s.sinr <= s.useful / g.noise * (1.0 + 1e-12));
        }
    }
}
