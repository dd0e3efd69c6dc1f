//! End-to-end autoencoder link simulation over AWGN, correlated-noise and
//! Rayleigh channels, with Hamming(7,4) and uncoded BPSK baselines and
//! train/test distribution-shift metrics.

pub mod channel;
pub mod cli;
pub mod codecs;
pub mod error;
pub mod harness;
pub mod nncore;
pub mod rng;
pub mod shiftmetrics;

pub use error::{Error, Result};
