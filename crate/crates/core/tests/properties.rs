use aecomm::channel::{noise_variance, transmit, ChannelSpec, Rate};
use aecomm::codecs::{
    hamming_bpsk_codeword, hamming_hard_decode, hamming_mld_index, message_index,
};
use aecomm::harness::bler::{wilson_interval, BernoulliSystem, BlerEstimator, StopRule, Z_95};
use aecomm::harness::config::ExperimentConfig;
use aecomm::harness::train::train_autoencoder;
use aecomm::rng::substream;
use aecomm::shiftmetrics::{overlap_same_mean_1d, overlap_same_mean_isotropic};
use proptest::prelude::*;

proptest! {
    #[test]
    fn noise_variance_decreases_in_snr_and_rate(db in -20.0f64..30.0, step in 0.01f64..5.0, k in 1u32..7) {
        let r = f64::from(k) / 7.0;
        prop_assert!(noise_variance(db + step, r) < noise_variance(db, r));
        prop_assert!(noise_variance(db, f64::from(k + 1) / 7.0) < noise_variance(db, r));
    }

    #[test]
    fn overlap_is_symmetric_and_bounded(a in 1e-3f64..1e3, b in 1e-3f64..1e3, d in 1u32..32) {
        let ab = overlap_same_mean_isotropic(a, b, d).unwrap();
        let ba = overlap_same_mean_isotropic(b, a, d).unwrap();
        prop_assert!((ab - ba).abs() <= 1e-15);
        prop_assert!(ab > 0.0 && ab <= 1.0);
        prop_assert_eq!(overlap_same_mean_1d(a, b).unwrap(), overlap_same_mean_1d(b, a).unwrap());
    }

    #[test]
    fn overlap_falls_with_distance_from_training_snr(train in -5.0f64..10.0, near in 0.1f64..6.0, extra in 0.1f64..6.0) {
        let r = 4.0 / 7.0;
        let at = |test: f64| overlap_same_mean_1d(noise_variance(train, r), noise_variance(test, r)).unwrap();
        prop_assert!(at(train + near + extra) < at(train + near));
        prop_assert!(at(train - near - extra) < at(train - near));
        prop_assert!(at(train + near) < 1.0);
    }

    #[test]
    fn wilson_interval_brackets_the_estimate(blocks in 1u64..1_000_000, frac in 0.0f64..=1.0) {
        let errors = ((blocks as f64) * frac).floor() as u64;
        let (lo, hi) = wilson_interval(errors, blocks, Z_95);
        let p = errors as f64 / blocks as f64;
        prop_assert!(0.0 <= lo && lo <= p && p <= hi && hi <= 1.0);
    }

    #[test]
    fn hamming_decoders_undo_single_errors(m in 0usize..16, flip in 0usize..8, amp in 0.1f64..3.0) {
        let mut y = hamming_bpsk_codeword(m).map(|v| v * amp);
        if flip < 7 {
            y[flip] = -y[flip];
        }
        prop_assert_eq!(message_index(&hamming_hard_decode(&y)), m);
        prop_assert_eq!(hamming_mld_index(&y), m);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn bler_estimate_ignores_worker_count(p in 0.001f64..0.5, seed in any::<u64>(), workers in 2usize..6) {
        let stop = StopRule { target_errors: 100, max_blocks: 40_000, chunk_blocks: 777 };
        let sys = BernoulliSystem { error_probability: p };
        let one = BlerEstimator::new(stop, seed, 1).unwrap().estimate(&sys, 1.5).unwrap();
        let many = BlerEstimator::new(stop, seed, workers).unwrap().estimate(&sys, 1.5).unwrap();
        prop_assert_eq!(one, many);
    }

    #[test]
    fn training_is_bitwise_reproducible(seed in any::<u64>(), db in -4.0f64..8.0) {
        let mut c = ExperimentConfig::default();
        c.training.steps = 40;
        c.training.log_every = 1;
        let a = train_autoencoder(&c, db, seed).unwrap();
        let b = train_autoencoder(&c, db, seed).unwrap();
        prop_assert_eq!(a.0.to_flat().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                        b.0.to_flat().iter().map(|v| v.to_bits()).collect::<Vec<_>>());
        prop_assert_eq!(a.1, b.1);
    }
}

#[test]
fn additive_noise_has_zero_mean_for_every_kind() {
    let x = [1.0, -0.5, 0.25, 2.0, -1.5, 0.0, 0.75];
    let specs = [
        ChannelSpec::awgn(2.0, Rate::HAMMING_7_4),
        ChannelSpec::correlated(2.0, Rate::HAMMING_7_4, 0.7),
        ChannelSpec::rayleigh(2.0, Rate::HAMMING_7_4, true),
        ChannelSpec::rayleigh(2.0, Rate::HAMMING_7_4, false),
    ];
    for (s, spec) in specs.iter().enumerate() {
        let mut rng = substream(5, "mean", &[s as u64]);
        let draws = 100_000;
        let mut sum = [0.0; 7];
        for _ in 0..draws {
            let (y, fade) = transmit(spec, &x, &mut rng).unwrap();
            for i in 0..7 {
                sum[i] += y[i] - fade.gain(i) * x[i];
            }
        }
        let se = (spec.noise_variance() / draws as f64).sqrt();
        for (i, total) in sum.iter().enumerate() {
            let mean = total / draws as f64;
            assert!(mean.abs() < 4.0 * se, "{:?} dim {i}: {mean}", spec.kind);
        }
    }
}
