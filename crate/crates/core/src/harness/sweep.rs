use std::sync::Arc;

use super::bler::{
    AutoencoderCodec, BlerCurve, BlerEstimator, BlerPoint, CodedLink, HammingCodec, LinkSystem,
    StopRule, UncodedBpsk,
};
use super::config::ExperimentConfig;
use super::train::{train_autoencoder, TrainingHistory};
use crate::channel::Rate;
use crate::codecs;
use crate::error::Result;
use crate::nncore::ModelParams;

pub const SYSTEM_AUTOENCODER: &str = "autoencoder";
pub const SYSTEM_HAMMING_HARD: &str = "hamming_hard";
pub const SYSTEM_HAMMING_MLD: &str = "hamming_mld";
pub const SYSTEM_UNCODED: &str = "uncoded";

pub const SWEEP_CSV_COLUMNS: [&str; 10] = [
    "system",
    "label",
    "train_ebn0_db",
    "test_ebn0_db",
    "blocks",
    "block_errors",
    "bler",
    "ci_low",
    "ci_high",
    "seed_count",
];

/// An autoencoder trained during a sweep.
#[derive(Clone, Debug)]
pub struct TrainedModel {
    pub train_ebn0_db: f64,
    pub seed: u64,
    pub params: Arc<ModelParams>,
    pub history: TrainingHistory,
}

#[derive(Clone, Debug)]
pub struct SweepResult {
    /// Seed-averaged autoencoder curves followed by the baselines.
    pub curves: Vec<BlerCurve>,
    /// One autoencoder curve per (training Eb/N0, seed), in model order.
    pub seed_curves: Vec<BlerCurve>,
    pub models: Vec<TrainedModel>,
}

impl SweepResult {
    pub fn curve(&self, system: &str, train_ebn0_db: Option<f64>) -> Option<&BlerCurve> {
        self.curves
            .iter()
            .find(|c| c.system == system && c.train_ebn0_db == train_ebn0_db)
    }

    pub fn model(&self, train_ebn0_db: f64, seed: u64) -> Option<&TrainedModel> {
        self.models
            .iter()
            .find(|m| m.train_ebn0_db == train_ebn0_db && m.seed == seed)
    }

    pub fn to_csv(&self) -> String {
        curves_csv(&self.curves)
    }
}

pub fn estimator_for(config: &ExperimentConfig) -> Result<BlerEstimator> {
    let s = &config.sweep;
    BlerEstimator::new(
        StopRule {
            target_errors: s.target_block_errors,
            max_blocks: s.max_blocks,
            chunk_blocks: s.chunk_blocks,
        },
        config.top_seed(),
        s.workers,
    )
}

pub fn autoencoder_label(train_ebn0_db: f64) -> String {
    format!("AE train {train_ebn0_db} dB")
}

/// BLER curve of one trained autoencoder under the configured channel.
pub fn autoencoder_curve(
    config: &ExperimentConfig,
    estimator: &BlerEstimator,
    params: Arc<ModelParams>,
    label: &str,
    train_ebn0_db: Option<f64>,
) -> Result<BlerCurve> {
    let codec = AutoencoderCodec::new(params)?;
    let grid = config.sweep.test_grid();
    estimator.curve(SYSTEM_AUTOENCODER, label, train_ebn0_db, &grid, |ebn0| {
        Ok(
            Box::new(CodedLink::new(codec.clone(), &config.channel_at(ebn0))?)
                as Box<dyn LinkSystem>,
        )
    })
}

/// Hamming hard/MLD (rate 4/7 only) and uncoded BPSK curves.
pub fn baseline_curves(
    config: &ExperimentConfig,
    estimator: &BlerEstimator,
) -> Result<Vec<BlerCurve>> {
    let grid = config.sweep.test_grid();
    let mut curves = Vec::new();
    if config.channel.rate == Rate::HAMMING_7_4 {
        for (name, label, codec) in [
            (
                SYSTEM_HAMMING_HARD,
                "Hamming (7,4) hard",
                HammingCodec::HardDecision,
            ),
            (
                SYSTEM_HAMMING_MLD,
                "Hamming (7,4) MLD",
                HammingCodec::MaximumLikelihood,
            ),
        ] {
            curves.push(estimator.curve(name, label, None, &grid, |ebn0| {
                Ok(Box::new(CodedLink::new(codec, &config.channel_at(ebn0))?)
                    as Box<dyn LinkSystem>)
            })?);
        }
    }
    let k = config.channel.rate.k;
    let uncoded = UncodedBpsk::new(k);
    let label = format!("Uncoded BPSK ({k},{k})");
    curves.push(
        estimator.curve(SYSTEM_UNCODED, &label, None, &grid, |ebn0| {
            Ok(
                Box::new(CodedLink::new(uncoded.clone(), &config.channel_at(ebn0))?)
                    as Box<dyn LinkSystem>,
            )
        })?,
    );
    Ok(curves)
}

/// Closed-form BLER for a baseline system, where one exists.
pub fn closed_form_bler(system: &str, test_ebn0_db: f64, k: u32) -> Option<f64> {
    match system {
        SYSTEM_HAMMING_HARD => Some(codecs::hamming_hard_bler_closed_form(test_ebn0_db)),
        SYSTEM_UNCODED => Some(codecs::uncoded_bler_closed_form(test_ebn0_db, k)),
        _ => None,
    }
}

pub fn run_sweep(config: &ExperimentConfig) -> Result<SweepResult> {
    run_sweep_with_progress(config, &mut |_| {})
}

/// Trains one autoencoder per (training Eb/N0, seed), evaluates each over
/// the test grid, averages over seeds and adds the baseline curves.
pub fn run_sweep_with_progress(
    config: &ExperimentConfig,
    progress: &mut dyn FnMut(&str),
) -> Result<SweepResult> {
    config.validate()?;
    let estimator = estimator_for(config)?;
    let mut curves = Vec::new();
    let mut models = Vec::new();
    let mut seed_curves = Vec::new();
    for &train in &config.sweep.train_ebn0_db {
        let label = autoencoder_label(train);
        let mut runs = Vec::new();
        for &seed in &config.seeds.values {
            progress(&format!("training {label}, seed {seed}"));
            let (params, history) = train_autoencoder(config, train, seed)
                .map_err(|e| e.context(format!("{label}, seed {seed}")))?;
            let params = Arc::new(params);
            progress(&format!("evaluating {label}, seed {seed}"));
            runs.push(autoencoder_curve(
                config,
                &estimator,
                params.clone(),
                &label,
                Some(train),
            )?);
            models.push(TrainedModel {
                train_ebn0_db: train,
                seed,
                params,
                history,
            });
        }
        curves.push(BlerCurve::seed_average(
            SYSTEM_AUTOENCODER,
            &label,
            Some(train),
            &runs,
        )?);
        seed_curves.extend(runs);
    }
    progress("evaluating baselines");
    curves.extend(baseline_curves(config, &estimator)?);
    Ok(SweepResult {
        curves,
        seed_curves,
        models,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn csv_fields(c: &BlerCurve, p: &BlerPoint) -> Vec<String> {
    vec![
        c.system.clone(),
        c.label.clone(),
        opt(c.train_ebn0_db),
        p.test_ebn0_db.to_string(),
        p.blocks.to_string(),
        p.block_errors.to_string(),
        p.bler.to_string(),
        p.ci_low.to_string(),
        p.ci_high.to_string(),
        c.seed_count.to_string(),
    ]
}

fn write_csv(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

/// Sweep CSV, one row per curve point.
pub fn curves_csv(curves: &[BlerCurve]) -> String {
    let rows = curves
        .iter()
        .flat_map(|c| c.points.iter().map(move |p| csv_fields(c, p)));
    write_csv(&SWEEP_CSV_COLUMNS, rows)
}

/// Sweep CSV plus a `closed_form_bler` column (empty where none exists).
pub fn baseline_csv(curves: &[BlerCurve], k: u32) -> String {
    let mut header = SWEEP_CSV_COLUMNS.to_vec();
    header.push("closed_form_bler");
    let rows = curves.iter().flat_map(|c| {
        c.points.iter().map(move |p| {
            let mut row = csv_fields(c, p);
            row.push(opt(closed_form_bler(&c.system, p.test_ebn0_db, k)));
            row
        })
    });
    write_csv(&header, rows)
}

/// Matplotlib script that renders a sweep CSV: BLER on a log axis against
/// test Eb/N0, one style per curve.
pub fn plot_script(csv_name: &str, title: &str) -> String {
    format!(
        r#"#!/usr/bin/env python3
"""Plot BLER versus test Eb/N0 from {csv_name}."""
import csv
import sys
from collections import OrderedDict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

path = sys.argv[1] if len(sys.argv) > 1 else "{csv_name}"
out = sys.argv[2] if len(sys.argv) > 2 else path.rsplit(".", 1)[0] + ".png"

curves = OrderedDict()
with open(path, newline="") as f:
    for row in csv.DictReader(f):
        key = (row["system"], row["label"])
        curves.setdefault(key, []).append(
            (float(row["test_ebn0_db"]), float(row["bler"]), float(row["ci_low"]), float(row["ci_high"]))
        )

markers = "os^vD<>ph*"
fig, ax = plt.subplots(figsize=(7, 5))
for i, ((system, label), pts) in enumerate(curves.items()):
    pts.sort()
    x = [p[0] for p in pts]
    y = [p[1] if p[1] > 0 else float("nan") for p in pts]
    style = "--" if system != "autoencoder" else "-"
    ax.semilogy(x, y, style, marker=markers[i % len(markers)], markersize=4, label=label)
    lo = [max(p[2], 1e-9) for p in pts]
    hi = [max(p[3], 1e-9) for p in pts]
    ax.fill_between(x, lo, hi, alpha=0.12)
ax.set_xlabel("Test $E_b/N_0$ [dB]")
ax.set_ylabel("BLER")
ax.set_title("{title}")
ax.grid(True, which="both", alpha=0.3)
ax.legend(fontsize=8)
fig.tight_layout()
fig.savefig(out, dpi=150)
print("wrote", out)
"#
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_with_commas_are_quoted() {
        let p = BlerPoint::from_counts(1.0, 100, 5).unwrap();
        let c = BlerCurve::new(SYSTEM_HAMMING_HARD, "Hamming (7,4) hard", None, vec![p]).unwrap();
        let csv = baseline_csv(&[c], 4);
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            format!("{},closed_form_bler", SWEEP_CSV_COLUMNS.join(","))
        );
        assert!(lines
            .next()
            .unwrap()
            .starts_with("hamming_hard,\"Hamming (7,4) hard\",,1,100,5,0.05,"));
    }

    #[test]
    fn closed_forms_only_for_baselines() {
        assert!(closed_form_bler(SYSTEM_HAMMING_HARD, 4.0, 4).is_some());
        assert!(closed_form_bler(SYSTEM_UNCODED, 4.0, 4).is_some());
        assert!(closed_form_bler(SYSTEM_HAMMING_MLD, 4.0, 4).is_none());
        assert!(closed_form_bler(SYSTEM_AUTOENCODER, 4.0, 4).is_none());
    }
}
