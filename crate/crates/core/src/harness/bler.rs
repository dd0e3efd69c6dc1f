//! Monte Carlo block error rate estimation.
//!
//! Blocks are simulated in fixed-size chunks, each with its own substream
//! derived from `(seed, stream key, chunk index)`. Chunks run in parallel
//! waves and are folded in chunk order, stopping at the exact block where
//! the error target is reached, so the result does not depend on how many
//! workers ran.

use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{ChannelSampler, ChannelSpec, Rate, Realization};
use crate::codecs;
use crate::error::{Error, Result};
use crate::nncore::{DecoderScratch, ModelParams};
use crate::rng::{substream, SimRng, STREAM_BLER};

/// Two-sided 95% standard normal quantile.
pub const Z_95: f64 = 1.959_963_984_540_054;

/// Wilson score interval for `errors` successes out of `blocks` trials.
pub fn wilson_interval(errors: u64, blocks: u64, z: f64) -> (f64, f64) {
    assert!(blocks > 0 && errors <= blocks);
    let n = blocks as f64;
    let p = errors as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((center - half).clamp(0.0, p), (center + half).clamp(p, 1.0))
}

/// One BLER estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BlerPoint {
    pub test_ebn0_db: f64,
    pub blocks: u64,
    pub block_errors: u64,
    pub bler: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl BlerPoint {
    pub fn from_counts(test_ebn0_db: f64, blocks: u64, block_errors: u64) -> Result<Self> {
        if blocks == 0 {
            return Err(Error::NoBlocks);
        }
        let (ci_low, ci_high) = wilson_interval(block_errors, blocks, Z_95);
        Ok(BlerPoint {
            test_ebn0_db,
            blocks,
            block_errors,
            bler: block_errors as f64 / blocks as f64,
            ci_low,
            ci_high,
        })
    }

    pub fn contains(&self, value: f64) -> bool {
        self.ci_low <= value && value <= self.ci_high
    }
}

/// A BLER-vs-Eb/N0 curve for one system and training condition.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlerCurve {
    /// System kind, e.g. `autoencoder` or `hamming_mld`.
    pub system: String,
    pub label: String,
    pub train_ebn0_db: Option<f64>,
    pub seed_count: usize,
    pub points: Vec<BlerPoint>,
    /// Per-point (min, max) BLER over seeds; equal to the BLER for a single seed.
    pub seed_band: Vec<(f64, f64)>,
}

impl BlerCurve {
    pub fn new(
        system: &str,
        label: &str,
        train_ebn0_db: Option<f64>,
        points: Vec<BlerPoint>,
    ) -> Result<Self> {
        if points.windows(2).any(|w| {
            w[0].test_ebn0_db.partial_cmp(&w[1].test_ebn0_db) != Some(std::cmp::Ordering::Less)
        }) {
            return Err(Error::Config(format!(
                "curve `{label}` points must be strictly increasing in Eb/N0"
            )));
        }
        let seed_band = points.iter().map(|p| (p.bler, p.bler)).collect();
        Ok(BlerCurve {
            system: system.into(),
            label: label.into(),
            train_ebn0_db,
            seed_count: 1,
            points,
            seed_band,
        })
    }

    /// Averages per-seed curves over a shared grid: mean BLER, pooled
    /// counts, and the envelope of the per-seed confidence intervals.
    pub fn seed_average(
        system: &str,
        label: &str,
        train_ebn0_db: Option<f64>,
        runs: &[BlerCurve],
    ) -> Result<Self> {
        let first = runs.first().ok_or(Error::NoBlocks)?;
        let grid: Vec<f64> = first.points.iter().map(|p| p.test_ebn0_db).collect();
        if runs.iter().any(|r| {
            r.points
                .iter()
                .map(|p| p.test_ebn0_db)
                .ne(grid.iter().copied())
        }) {
            return Err(Error::ShapeMismatch(format!(
                "seed runs of `{label}` use different grids"
            )));
        }
        let count = runs.len() as f64;
        let mut points = Vec::with_capacity(grid.len());
        let mut seed_band = Vec::with_capacity(grid.len());
        for (i, &ebn0) in grid.iter().enumerate() {
            let at = || runs.iter().map(move |r| r.points[i]);
            let bler = at().map(|p| p.bler).sum::<f64>() / count;
            let lo = at().map(|p| p.bler).fold(f64::INFINITY, f64::min);
            let hi = at().map(|p| p.bler).fold(f64::NEG_INFINITY, f64::max);
            points.push(BlerPoint {
                test_ebn0_db: ebn0,
                blocks: at().map(|p| p.blocks).sum(),
                block_errors: at().map(|p| p.block_errors).sum(),
                bler,
                ci_low: at()
                    .map(|p| p.ci_low)
                    .fold(f64::INFINITY, f64::min)
                    .min(bler),
                ci_high: at()
                    .map(|p| p.ci_high)
                    .fold(f64::NEG_INFINITY, f64::max)
                    .max(bler),
            });
            seed_band.push((lo, hi));
        }
        Ok(BlerCurve {
            system: system.into(),
            label: label.into(),
            train_ebn0_db,
            seed_count: runs.len(),
            points,
            seed_band,
        })
    }

    pub fn point_at(&self, ebn0_db: f64) -> Option<&BlerPoint> {
        self.points.iter().find(|p| p.test_ebn0_db == ebn0_db)
    }

    /// Non-increasing up to confidence: no later point's interval lies
    /// entirely above an earlier point's interval.
    pub fn is_monotone_within_ci(&self) -> bool {
        self.points
            .iter()
            .enumerate()
            .all(|(i, p)| self.points[i + 1..].iter().all(|q| q.ci_low <= p.ci_high))
    }

    /// Eb/N0 where the curve crosses `level`, interpolating linearly in
    /// `log10(BLER)` between the first bracketing pair of points.
    pub fn crossing_db(&self, level: f64) -> Option<f64> {
        self.points.windows(2).find_map(|w| {
            let (a, b) = (w[0], w[1]);
            if a.bler >= level && b.bler < level {
                if b.bler <= 0.0 {
                    return Some(b.test_ebn0_db);
                }
                let (la, lb, l) = (a.bler.log10(), b.bler.log10(), level.log10());
                let t = if la == lb { 0.0 } else { (la - l) / (la - lb) };
                Some(a.test_ebn0_db + t * (b.test_ebn0_db - a.test_ebn0_db))
            } else {
                None
            }
        })
    }
}

/// When to stop simulating one point.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StopRule {
    /// Stop once this many block errors were seen; 0 disables the target.
    pub target_errors: u64,
    pub max_blocks: u64,
    pub chunk_blocks: u64,
}

impl Default for StopRule {
    fn default() -> Self {
        StopRule {
            target_errors: 200,
            max_blocks: 1_000_000,
            chunk_blocks: 10_000,
        }
    }
}

/// Anything that carries a uniformly drawn message through a link and
/// makes a decision.
pub trait LinkSystem: Sync {
    /// Simulates `count` blocks from `rng`, returning the in-chunk indices
    /// of blocks decoded in error, in increasing order.
    fn simulate(&self, count: u64, rng: &mut SimRng) -> Vec<u64>;
}

/// Maps messages to real channel symbols and back.
pub trait BlockCodec: Sync {
    type Scratch: Default;

    fn message_count(&self) -> usize;
    fn rate(&self) -> Rate;
    fn codeword(&self, message: usize) -> &[f64];
    fn decide(&self, received: &[f64], scratch: &mut Self::Scratch) -> usize;
}

/// A codec behind a channel at a fixed Eb/N0.
pub struct CodedLink<C> {
    codec: C,
    sampler: ChannelSampler,
}

impl<C: BlockCodec> CodedLink<C> {
    /// `channel` supplies kind, Eb/N0 and correlation; its rate is replaced
    /// by the codec's.
    pub fn new(codec: C, channel: &ChannelSpec) -> Result<Self> {
        let spec = ChannelSpec {
            rate: codec.rate(),
            ..*channel
        };
        let sampler = spec.sampler(codec.rate().n as usize)?;
        Ok(CodedLink { codec, sampler })
    }
}

impl<C: BlockCodec> LinkSystem for CodedLink<C> {
    fn simulate(&self, count: u64, rng: &mut SimRng) -> Vec<u64> {
        let n = self.sampler.block_len();
        let m_count = self.codec.message_count();
        let mut realization = Realization::clean(n);
        let mut received = vec![0.0; n];
        let mut scratch = C::Scratch::default();
        let mut errors = Vec::new();
        for block in 0..count {
            let message = rng.random_range(0..m_count);
            self.sampler.draw_into(rng, &mut realization);
            realization.apply_into(self.codec.codeword(message), &mut received);
            if self.codec.decide(&received, &mut scratch) != message {
                errors.push(block);
            }
        }
        errors
    }
}

/// Synthetic system that errs independently with a fixed probability.
#[derive(Clone, Copy, Debug)]
pub struct BernoulliSystem {
    pub error_probability: f64,
}

impl LinkSystem for BernoulliSystem {
    fn simulate(&self, count: u64, rng: &mut SimRng) -> Vec<u64> {
        (0..count)
            .filter(|_| rng.random::<f64>() < self.error_probability)
            .collect()
    }
}

/// Trained autoencoder with its constellation cached.
#[derive(Clone, Debug)]
pub struct AutoencoderCodec {
    params: Arc<ModelParams>,
    constellation: Vec<Vec<f64>>,
    rate: Rate,
}

impl AutoencoderCodec {
    pub fn new(params: Arc<ModelParams>) -> Result<Self> {
        params.validate()?;
        if !params.message_count.is_power_of_two() {
            return Err(Error::Config(
                "autoencoder message count must be a power of two".into(),
            ));
        }
        let rate = Rate {
            k: params.message_count.trailing_zeros(),
            n: params.channel_uses as u32,
        };
        let constellation = params.constellation()?;
        Ok(AutoencoderCodec {
            params,
            constellation,
            rate,
        })
    }
}

#[derive(Default)]
pub struct AutoencoderScratch {
    decoder: DecoderScratch,
    logits: Vec<f64>,
}

impl BlockCodec for AutoencoderCodec {
    type Scratch = AutoencoderScratch;

    fn message_count(&self) -> usize {
        self.params.message_count
    }

    fn rate(&self) -> Rate {
        self.rate
    }

    fn codeword(&self, message: usize) -> &[f64] {
        &self.constellation[message]
    }

    fn decide(&self, received: &[f64], scratch: &mut Self::Scratch) -> usize {
        self.params
            .predict_with(received, &mut scratch.decoder, &mut scratch.logits)
    }
}

/// Hamming(7,4) over BPSK.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HammingCodec {
    HardDecision,
    MaximumLikelihood,
}

static HAMMING_BPSK: std::sync::OnceLock<Vec<[f64; 7]>> = std::sync::OnceLock::new();

impl BlockCodec for HammingCodec {
    type Scratch = ();

    fn message_count(&self) -> usize {
        16
    }

    fn rate(&self) -> Rate {
        Rate::HAMMING_7_4
    }

    fn codeword(&self, message: usize) -> &[f64] {
        &HAMMING_BPSK.get_or_init(|| (0..16).map(codecs::hamming_bpsk_codeword).collect())[message]
    }

    fn decide(&self, received: &[f64], _: &mut ()) -> usize {
        match self {
            HammingCodec::HardDecision => {
                let y: &[f64; 7] = received.try_into().expect("Hamming blocks have 7 symbols");
                codecs::message_index(&codecs::hamming_hard_decode(y))
            }
            HammingCodec::MaximumLikelihood => codecs::hamming_mld_index(received),
        }
    }
}

/// `k` information bits sent as `k` BPSK symbols.
#[derive(Clone, Debug)]
pub struct UncodedBpsk {
    k: u32,
    codebook: Vec<Vec<f64>>,
}

impl UncodedBpsk {
    pub fn new(k: u32) -> Self {
        assert!((1..=16).contains(&k));
        let codebook = (0..1usize << k)
            .map(|m| {
                let bits: Vec<u8> = (0..k).map(|i| ((m >> (k - 1 - i)) & 1) as u8).collect();
                codecs::bpsk_map(&bits)
            })
            .collect();
        UncodedBpsk { k, codebook }
    }
}

impl BlockCodec for UncodedBpsk {
    type Scratch = ();

    fn message_count(&self) -> usize {
        self.codebook.len()
    }

    fn rate(&self) -> Rate {
        Rate {
            k: self.k,
            n: self.k,
        }
    }

    fn codeword(&self, message: usize) -> &[f64] {
        &self.codebook[message]
    }

    fn decide(&self, received: &[f64], _: &mut ()) -> usize {
        received
            .iter()
            .fold(0, |acc, &v| (acc << 1) | usize::from(v < 0.0))
    }
}

/// Runs BLER estimates on a fixed worker pool.
pub struct BlerEstimator {
    pub stop: StopRule,
    pub seed: u64,
    pool: rayon::ThreadPool,
}

impl BlerEstimator {
    /// `workers == 0` uses all available cores.
    pub fn new(stop: StopRule, seed: u64, workers: usize) -> Result<Self> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
        Ok(BlerEstimator { stop, seed, pool })
    }

    pub fn workers(&self) -> usize {
        self.pool.current_num_threads()
    }

    /// Estimates the BLER of `system`, labelled with `test_ebn0_db`. The
    /// random stream is keyed by the Eb/N0 value, so systems evaluated at
    /// the same point see the same messages and noise.
    pub fn estimate(&self, system: &dyn LinkSystem, test_ebn0_db: f64) -> Result<BlerPoint> {
        let stop = self.stop;
        if stop.max_blocks == 0 || stop.chunk_blocks == 0 {
            return Err(Error::NoBlocks);
        }
        let key = test_ebn0_db.to_bits();
        let chunk_count = stop.max_blocks.div_ceil(stop.chunk_blocks);
        let wave = self.workers().max(1) as u64;
        let (mut blocks, mut errors) = (0u64, 0u64);
        let mut next = 0u64;
        'outer: while next < chunk_count {
            let end = (next + wave).min(chunk_count);
            let results: Vec<(u64, Vec<u64>)> = self.pool.install(|| {
                (next..end)
                    .into_par_iter()
                    .map(|chunk| {
                        let start = chunk * stop.chunk_blocks;
                        let len = stop.chunk_blocks.min(stop.max_blocks - start);
                        let mut rng = substream(self.seed, STREAM_BLER, &[key, chunk]);
                        (len, system.simulate(len, &mut rng))
                    })
                    .collect()
            });
            for (len, chunk_errors) in results {
                let needed = stop.target_errors.saturating_sub(errors);
                if stop.target_errors > 0 && chunk_errors.len() as u64 >= needed {
                    blocks += chunk_errors[needed as usize - 1] + 1;
                    errors += needed;
                    break 'outer;
                }
                blocks += len;
                errors += chunk_errors.len() as u64;
            }
            next = end;
        }
        BlerPoint::from_counts(test_ebn0_db, blocks, errors)
    }

    /// Estimates a whole curve.
    pub fn curve(
        &self,
        system_name: &str,
        label: &str,
        train_ebn0_db: Option<f64>,
        grid: &[f64],
        mut build: impl FnMut(f64) -> Result<Box<dyn LinkSystem>>,
    ) -> Result<BlerCurve> {
        let points = grid
            .iter()
            .map(|&ebn0| {
                let system = build(ebn0)?;
                self.estimate(system.as_ref(), ebn0)
            })
            .collect::<Result<Vec<_>>>()
            .map_err(|e| e.context(label))?;
        BlerCurve::new(system_name, label, train_ebn0_db, points)
    }
}

/// One-off estimate on a single-threaded pool.
pub fn estimate_bler(
    system: &dyn LinkSystem,
    test_ebn0_db: f64,
    stop: StopRule,
    seed: u64,
) -> Result<BlerPoint> {
    BlerEstimator::new(stop, seed, 1)?.estimate(system, test_ebn0_db)
}
