use std::sync::Arc;

use super::bler::{AutoencoderCodec, BlerCurve, BlerEstimator, BlockCodec, CodedLink, LinkSystem};
use super::sweep::SYSTEM_AUTOENCODER;
use crate::channel::{ChannelKind, ChannelSpec, Rate};
use crate::error::{Error, Result};
use crate::nncore::ModelParams;

/// A channel the AWGN-trained model is probed under.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChannelVariant {
    pub kind: ChannelKind,
    pub rho: f64,
    pub block_fading: bool,
}

impl ChannelVariant {
    pub const AWGN: ChannelVariant = ChannelVariant {
        kind: ChannelKind::Awgn,
        rho: 0.0,
        block_fading: true,
    };
    pub const RAYLEIGH_BLOCK: ChannelVariant = ChannelVariant {
        kind: ChannelKind::Rayleigh,
        rho: 0.0,
        block_fading: true,
    };

    pub fn correlated(rho: f64) -> Self {
        ChannelVariant {
            kind: ChannelKind::CorrelatedAwgn,
            rho,
            block_fading: true,
        }
    }

    /// AWGN, correlated noise at each `rho`, and block Rayleigh fading.
    pub fn standard_set(rhos: &[f64]) -> Vec<ChannelVariant> {
        let mut v = vec![Self::AWGN];
        v.extend(rhos.iter().map(|&r| Self::correlated(r)));
        v.push(Self::RAYLEIGH_BLOCK);
        v
    }

    pub fn spec(&self, ebn0_db: f64, rate: Rate) -> ChannelSpec {
        ChannelSpec {
            kind: self.kind,
            ebn0_db,
            rate,
            rho: self.rho,
            block_fading: self.block_fading,
        }
    }

    pub fn name(&self) -> String {
        match self.kind {
            ChannelKind::Awgn => "awgn".into(),
            ChannelKind::CorrelatedAwgn => format!("correlated rho={}", self.rho),
            ChannelKind::Rayleigh if self.block_fading => "rayleigh block".into(),
            ChannelKind::Rayleigh => "rayleigh fast".into(),
        }
    }
}

/// Evaluates one trained model under each channel variant. All variants
/// share the estimator's streams, so messages and noise are paired across
/// curves at every test point.
pub fn robustness_probe(
    params: Arc<ModelParams>,
    train_ebn0_db: f64,
    variants: &[ChannelVariant],
    grid: &[f64],
    estimator: &BlerEstimator,
) -> Result<Vec<BlerCurve>> {
    if variants.is_empty() {
        return Err(Error::Config("no channel variants to probe".into()));
    }
    let codec = AutoencoderCodec::new(params)?;
    let rate = codec.rate();
    variants
        .iter()
        .map(|variant| {
            let label = format!("AE train {train_ebn0_db} dB / {}", variant.name());
            estimator.curve(
                SYSTEM_AUTOENCODER,
                &label,
                Some(train_ebn0_db),
                grid,
                |ebn0| {
                    Ok(
                        Box::new(CodedLink::new(codec.clone(), &variant.spec(ebn0, rate))?)
                            as Box<dyn LinkSystem>,
                    )
                },
            )
        })
        .collect()
}
