//! Experiment configuration. Every default lives here and is mirrored in
//! `configs/reference.toml`.

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelKind, ChannelSpec, Rate};
use crate::error::{Error, Result};
use crate::nncore::Layout;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub channel: ChannelConfig,
    pub training: TrainingConfig,
    pub sweep: SweepConfig,
    pub seeds: SeedConfig,
    pub overlap: OverlapConfig,
    pub robustness: RobustnessConfig,
    pub width_sweep: WidthSweepConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelConfig {
    pub kind: ChannelKind,
    /// `k/n`: the autoencoder sends one of `2^k` messages in `n` channel uses.
    pub rate: Rate,
    pub rho: f64,
    pub block_fading: bool,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        ChannelConfig {
            kind: ChannelKind::Awgn,
            rate: Rate::HAMMING_7_4,
            rho: 0.0,
            block_fading: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingConfig {
    pub steps: u64,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Loss is recorded every `log_every` steps.
    pub log_every: u64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            steps: 10_000,
            batch_size: 256,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            log_every: 100,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub train_ebn0_db: Vec<f64>,
    pub test_ebn0_min_db: f64,
    pub test_ebn0_max_db: f64,
    pub test_ebn0_step_db: f64,
    /// Stop a BLER point after this many block errors...
    pub target_block_errors: u64,
    /// ...or after this many blocks, whichever comes first.
    pub max_blocks: u64,
    /// Blocks per random substream; results depend on this, not on `workers`.
    pub chunk_blocks: u64,
    /// Worker threads for BLER estimation; 0 uses all cores.
    pub workers: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            train_ebn0_db: vec![-4.0, 0.0, 5.0, 7.0, 8.0],
            test_ebn0_min_db: -4.0,
            test_ebn0_max_db: 8.0,
            test_ebn0_step_db: 0.5,
            target_block_errors: 200,
            max_blocks: 1_000_000,
            chunk_blocks: 10_000,
            workers: 0,
        }
    }
}

impl SweepConfig {
    /// Test Eb/N0 grid, endpoints included.
    pub fn test_grid(&self) -> Vec<f64> {
        let span = self.test_ebn0_max_db - self.test_ebn0_min_db;
        let count = (span / self.test_ebn0_step_db + 1e-9).floor() as usize + 1;
        (0..count)
            .map(|i| self.test_ebn0_min_db + i as f64 * self.test_ebn0_step_db)
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeedConfig {
    /// One autoencoder is trained per seed for every training Eb/N0. The
    /// first seed also drives evaluation.
    pub values: Vec<u64>,
}

impl Default for SeedConfig {
    fn default() -> Self {
        SeedConfig {
            values: vec![42, 43, 44],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OverlapConfig {
    pub train_ebn0_db: f64,
    pub test_ebn0_db: Vec<f64>,
}

impl Default for OverlapConfig {
    fn default() -> Self {
        OverlapConfig {
            train_ebn0_db: 7.0,
            test_ebn0_db: vec![-4.0, 0.0, 5.0, 8.0],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RobustnessConfig {
    /// Training Eb/N0 of the probed AWGN model.
    pub train_ebn0_db: f64,
    pub rho: Vec<f64>,
}

impl Default for RobustnessConfig {
    fn default() -> Self {
        RobustnessConfig {
            train_ebn0_db: 7.0,
            rho: vec![0.5, 0.9],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WidthSweepConfig {
    /// Decoder hidden widths.
    pub widths: Vec<usize>,
    pub train_ebn0_db: f64,
    /// Size of the fixed training set of (message, noise) samples.
    pub train_set_size: usize,
    pub test_set_size: usize,
    pub steps: u64,
    pub batch_size: usize,
}

impl Default for WidthSweepConfig {
    fn default() -> Self {
        WidthSweepConfig {
            widths: vec![2, 4, 8, 16, 32, 64, 128],
            train_ebn0_db: 0.0,
            train_set_size: 512,
            test_set_size: 10_000,
            steps: 4_000,
            batch_size: 64,
        }
    }
}

/// Validation failure that names the offending config key.
#[derive(Clone, Debug, PartialEq)]
pub struct InvalidKey {
    /// Dotted key, e.g. `channel.rate`.
    pub key: String,
    pub message: String,
}

impl ExperimentConfig {
    pub fn layout(&self) -> Layout {
        let Rate { k, n } = self.channel.rate;
        Layout::autoencoder(1usize << k, n as usize)
    }

    pub fn message_count(&self) -> usize {
        1usize << self.channel.rate.k
    }

    /// Channel template for training and evaluation at `ebn0_db`.
    pub fn channel_at(&self, ebn0_db: f64) -> ChannelSpec {
        ChannelSpec {
            kind: self.channel.kind,
            ebn0_db,
            rate: self.channel.rate,
            rho: self.channel.rho,
            block_fading: self.channel.block_fading,
        }
    }

    /// The evaluation seed: first of the configured seeds.
    pub fn top_seed(&self) -> u64 {
        self.seeds.values.first().copied().unwrap_or(0)
    }

    /// Replaces the seed list with `seed, seed + 1, ...`, keeping its length.
    pub fn override_seed(&mut self, seed: u64) {
        let count = self.seeds.values.len().max(1);
        self.seeds.values = (0..count as u64).map(|i| seed.wrapping_add(i)).collect();
    }

    pub fn check(&self) -> std::result::Result<(), InvalidKey> {
        let bad = |key: &str, message: String| {
            Err(InvalidKey {
                key: key.to_string(),
                message,
            })
        };
        let Rate { k, n } = self.channel.rate;
        if k == 0 || n == 0 || k > n {
            return bad("channel.rate", format!("rate {k}/{n} must lie in (0, 1]"));
        }
        if k > 16 {
            return bad("channel.rate", format!("k = {k} gives too many messages"));
        }
        if !(0.0..1.0).contains(&self.channel.rho) {
            return bad(
                "channel.rho",
                format!("{} outside [0, 1)", self.channel.rho),
            );
        }
        let t = &self.training;
        if t.batch_size == 0 {
            return bad("training.batch_size", "must be positive".into());
        }
        if t.log_every == 0 {
            return bad("training.log_every", "must be positive".into());
        }
        for (key, v) in [
            ("training.learning_rate", t.learning_rate),
            ("training.epsilon", t.epsilon),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(key, format!("{v} must be positive"));
            }
        }
        for (key, v) in [("training.beta1", t.beta1), ("training.beta2", t.beta2)] {
            if !(v > 0.0 && v < 1.0) {
                return bad(key, format!("{v} must lie in (0, 1)"));
            }
        }
        let s = &self.sweep;
        if s.train_ebn0_db.is_empty() {
            return bad("sweep.train_ebn0_db", "must not be empty".into());
        }
        if s.train_ebn0_db.iter().any(|v| !v.is_finite()) {
            return bad("sweep.train_ebn0_db", "values must be finite".into());
        }
        if s.test_ebn0_step_db.is_nan() || s.test_ebn0_step_db <= 0.0 {
            return bad("sweep.test_ebn0_step_db", "must be positive".into());
        }
        if !(s.test_ebn0_min_db.is_finite() && s.test_ebn0_max_db.is_finite()) {
            return bad(
                "sweep.test_ebn0_min_db",
                "grid bounds must be finite".into(),
            );
        }
        if s.test_ebn0_max_db < s.test_ebn0_min_db {
            return bad(
                "sweep.test_ebn0_max_db",
                "must not be below test_ebn0_min_db".into(),
            );
        }
        if s.test_grid().len() > 10_000 {
            return bad("sweep.test_ebn0_step_db", "grid has too many points".into());
        }
        if s.max_blocks == 0 {
            return bad("sweep.max_blocks", "must be at least 1".into());
        }
        if s.chunk_blocks == 0 {
            return bad("sweep.chunk_blocks", "must be at least 1".into());
        }
        if self.seeds.values.is_empty() {
            return bad("seeds.values", "must not be empty".into());
        }
        let o = &self.overlap;
        if !o.train_ebn0_db.is_finite() || o.test_ebn0_db.iter().any(|v| !v.is_finite()) {
            return bad("overlap.test_ebn0_db", "values must be finite".into());
        }
        if self.robustness.rho.iter().any(|r| !(0.0..1.0).contains(r)) {
            return bad("robustness.rho", "values must lie in [0, 1)".into());
        }
        let w = &self.width_sweep;
        if w.widths.is_empty() || w.widths.contains(&0) {
            return bad(
                "width_sweep.widths",
                "widths must be non-empty and positive".into(),
            );
        }
        for (key, v) in [
            ("width_sweep.train_set_size", w.train_set_size),
            ("width_sweep.test_set_size", w.test_set_size),
            ("width_sweep.batch_size", w.batch_size),
        ] {
            if v == 0 {
                return bad(key, "must be positive".into());
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.check()
            .map_err(|e| Error::Config(format!("`{}`: {}", e.key, e.message)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_has_25_points() {
        let grid = SweepConfig::default().test_grid();
        assert_eq!(grid.len(), 25);
        assert_eq!(grid[0], -4.0);
        assert_eq!(grid[24], 8.0);
        assert_eq!(grid[9], 0.5);
    }

    #[test]
    fn defaults_are_valid() {
        ExperimentConfig::default().validate().unwrap();
        assert_eq!(
            ExperimentConfig::default().layout(),
            Layout::autoencoder(16, 7)
        );
    }

    #[test]
    fn seed_override_keeps_count() {
        let mut c = ExperimentConfig::default();
        c.override_seed(7);
        assert_eq!(c.seeds.values, vec![7, 8, 9]);
        assert_eq!(c.top_seed(), 7);
    }

    #[test]
    fn invalid_values_name_their_key() {
        let mut c = ExperimentConfig::default();
        c.channel.rate = Rate { k: 0, n: 1 };
        assert_eq!(c.check().unwrap_err().key, "channel.rate");
        let mut c = ExperimentConfig::default();
        c.sweep.max_blocks = 0;
        assert_eq!(c.check().unwrap_err().key, "sweep.max_blocks");
    }
}
