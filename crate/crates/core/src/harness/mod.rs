//! Experiment drivers: configuration, training, BLER sweeps and the
//! distribution-shift tables.

pub mod bler;
pub mod config;
pub mod gradcheck;
pub mod overlap;
pub mod robustness;
pub mod sweep;
pub mod train;
pub mod widths;

pub use bler::{
    estimate_bler, wilson_interval, AutoencoderCodec, BernoulliSystem, BlerCurve, BlerEstimator,
    BlerPoint, BlockCodec, CodedLink, HammingCodec, LinkSystem, StopRule, UncodedBpsk, Z_95,
};
pub use config::{ExperimentConfig, InvalidKey};
pub use gradcheck::{gradient_check, GradcheckReport};
pub use overlap::{overlap_csv, overlap_table, OverlapRow};
pub use robustness::{robustness_probe, ChannelVariant};
pub use sweep::{run_sweep, run_sweep_with_progress, SweepResult, TrainedModel};
pub use train::{train_autoencoder, train_model, TrainingHistory};
pub use widths::{width_csv, width_sweep, WidthRow};
