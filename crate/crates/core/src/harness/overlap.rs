use serde::Serialize;

use crate::channel::{noise_variance, Rate};
use crate::error::Result;
use crate::shiftmetrics::OverlapResult;

pub const OVERLAP_CSV_HEADER: &str = "test_ebn0_db,overlap_pct,kl_nats";

/// One row of the train/test shift table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OverlapRow {
    pub test_ebn0_db: f64,
    /// Univariate overlap of the per-dimension noise marginals, in percent.
    pub overlap_pct: f64,
    /// `KL(train || test)` of the same marginals.
    pub kl_nats: f64,
}

/// Overlap between the training and each test received-signal distribution,
/// ordered by test Eb/N0.
pub fn overlap_table(train_ebn0_db: f64, tests: &[f64], rate: Rate) -> Result<Vec<OverlapRow>> {
    rate.validate()?;
    let sigma2_train = noise_variance(train_ebn0_db, rate.value());
    let mut sorted = tests.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted
        .into_iter()
        .map(|test| {
            let r = OverlapResult::compute(sigma2_train, noise_variance(test, rate.value()), 1)?;
            Ok(OverlapRow {
                test_ebn0_db: test,
                overlap_pct: 100.0 * r.overlap,
                kl_nats: r.kl_nats,
            })
        })
        .collect()
}

pub fn overlap_csv(rows: &[OverlapRow]) -> String {
    let mut out = format!("{OVERLAP_CSV_HEADER}\n");
    for r in rows {
        out.push_str(&format!(
            "{},{:.4},{}\n",
            r.test_ebn0_db, r.overlap_pct, r.kl_nats
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_the_table() {
        let rows = overlap_table(7.0, &[8.0, -4.0, 5.0, 0.0], Rate::HAMMING_7_4).unwrap();
        let expected = [(-4.0, 45.70), (0.0, 62.97), (5.0, 88.91), (8.0, 94.43)];
        for (row, (db, pct)) in rows.iter().zip(expected) {
            assert_eq!(row.test_ebn0_db, db);
            assert!(
                (row.overlap_pct - pct).abs() <= 0.05,
                "{db}: {}",
                row.overlap_pct
            );
        }
    }

    #[test]
    fn same_snr_is_full_overlap() {
        let rows = overlap_table(7.0, &[7.0], Rate::HAMMING_7_4).unwrap();
        assert_eq!(rows[0].overlap_pct, 100.0);
        assert_eq!(rows[0].kl_nats, 0.0);
    }

    #[test]
    fn overlap_grows_toward_training_point() {
        let tests: Vec<f64> = (-8..=14).map(|i| i as f64 * 0.5).collect();
        let rows = overlap_table(7.0, &tests, Rate::HAMMING_7_4).unwrap();
        assert!(rows.windows(2).all(|w| w[0].overlap_pct < w[1].overlap_pct));
        let csv = overlap_csv(&rows);
        assert!(csv.starts_with("test_ebn0_db,overlap_pct,kl_nats\n"));
        assert_eq!(csv.lines().count(), rows.len() + 1);
    }
}
