use aecomm::channel::{ChannelSpec, Rate};
use aecomm::harness::bler::*;

#[test]
fn wilson_interval_coverage_is_calibrated() {
    for (p, blocks) in [(0.1, 2_000u64), (0.01, 20_000)] {
        let stop = StopRule {
            target_errors: 0,
            max_blocks: blocks,
            chunk_blocks: 5_000,
        };
        let covered = (0..100)
            .filter(|&seed| {
                estimate_bler(
                    &BernoulliSystem {
                        error_probability: p,
                    },
                    0.0,
                    stop,
                    seed,
                )
                .unwrap()
                .contains(p)
            })
            .count();
        assert!(covered >= 90, "p = {p}: {covered}/100");
    }
}

#[test]
fn stop_rule_halts_at_target() {
    let stop = StopRule::default();
    let p = estimate_bler(
        &BernoulliSystem {
            error_probability: 0.05,
        },
        1.0,
        stop,
        3,
    )
    .unwrap();
    assert_eq!(p.block_errors, 200);
    assert!(p.blocks < 10_000);
    let p = estimate_bler(
        &BernoulliSystem {
            error_probability: 1e-5,
        },
        1.0,
        stop,
        3,
    )
    .unwrap();
    assert_eq!(p.blocks, 1_000_000);
    assert!(p.block_errors < 200);
}

#[test]
fn real_link_estimates_ignore_worker_count() {
    let stop = StopRule {
        target_errors: 300,
        max_blocks: 300_000,
        chunk_blocks: 1_000,
    };
    let link = CodedLink::new(
        HammingCodec::MaximumLikelihood,
        &ChannelSpec::awgn(5.0, Rate::HAMMING_7_4),
    )
    .unwrap();
    let points: Vec<BlerPoint> = [1, 2, 3, 8]
        .iter()
        .map(|&w| {
            BlerEstimator::new(stop, 11, w)
                .unwrap()
                .estimate(&link, 5.0)
                .unwrap()
        })
        .collect();
    assert!(points.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn baselines_are_ordered() {
    let est = BlerEstimator::new(StopRule::default(), 42, 0).unwrap();
    let grid: Vec<f64> = (0..=8).map(f64::from).collect();
    let curve = |codec: HammingCodec| {
        est.curve("h", "h", None, &grid, |db| {
            Ok(Box::new(CodedLink::new(
                codec,
                &ChannelSpec::awgn(db, Rate::HAMMING_7_4),
            )?) as Box<dyn LinkSystem>)
        })
        .unwrap()
    };
    let hard = curve(HammingCodec::HardDecision);
    let mld = curve(HammingCodec::MaximumLikelihood);
    let uncoded = est
        .curve("u", "u", None, &grid, |db| {
            Ok(Box::new(CodedLink::new(
                UncodedBpsk::new(4),
                &ChannelSpec::awgn(db, Rate::HAMMING_7_4),
            )?) as Box<dyn LinkSystem>)
        })
        .unwrap();
    for ((h, m), u) in hard.points.iter().zip(&mld.points).zip(&uncoded.points) {
        assert!(m.ci_low <= h.ci_high && m.bler <= h.bler, "{m:?} vs {h:?}");
        if h.test_ebn0_db >= 3.0 {
            assert!(h.bler <= u.bler, "hard {h:?} vs uncoded {u:?}");
        }
    }
    for c in [&hard, &mld, &uncoded] {
        assert!(c.is_monotone_within_ci());
    }
}
