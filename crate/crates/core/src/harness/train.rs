use serde::Serialize;

use super::config::{ExperimentConfig, TrainingConfig};
use crate::channel::{ChannelSpec, Realization};
use crate::error::{Error, Result};
use crate::nncore::{
    adam_step, init_params, loss_and_gradients_fixed, AdamState, Batch, Layout, ModelParams,
};
use crate::rng::{substream, STREAM_CHANNEL, STREAM_TRAIN};

/// Loss recorded during training.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct TrainingHistory {
    /// `(step, mean batch cross-entropy)` before the update at `step`.
    pub records: Vec<(u64, f64)>,
}

impl TrainingHistory {
    pub fn final_loss(&self) -> Option<f64> {
        self.records.last().map(|r| r.1)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,loss\n");
        for (step, loss) in &self.records {
            out.push_str(&format!("{step},{loss}\n"));
        }
        out
    }
}

/// Trains an autoencoder with freshly drawn messages and channel noise at
/// every step. Messages come from the seed's `train` stream and noise from
/// its `channel` stream, so the run is a pure function of its inputs.
pub fn train_model(
    layout: &Layout,
    training: &TrainingConfig,
    channel: &ChannelSpec,
    seed: u64,
) -> Result<(ModelParams, TrainingHistory)> {
    let mut params = init_params(layout, seed)?;
    let mut state = AdamState::new(
        &params,
        training.learning_rate,
        training.beta1,
        training.beta2,
        training.epsilon,
    )?;
    let sampler = channel.sampler(layout.channel_uses)?;
    let mut message_rng = substream(seed, STREAM_TRAIN, &[]);
    let mut noise_rng = substream(seed, STREAM_CHANNEL, &[]);
    let mut realizations: Vec<Realization> = (0..training.batch_size)
        .map(|_| Realization::clean(layout.channel_uses))
        .collect();
    let mut history = TrainingHistory::default();

    for step in 0..training.steps {
        let batch = Batch::sample(training.batch_size, layout.message_count, &mut message_rng)?;
        for r in realizations.iter_mut() {
            sampler.draw_into(&mut noise_rng, r);
        }
        let (loss, grads) =
            loss_and_gradients_fixed(&params, &batch, &realizations).map_err(|e| match e {
                Error::Divergence { loss, .. } => Error::Divergence {
                    step: Some(step),
                    loss,
                },
                other => other,
            })?;
        if step % training.log_every == 0 || step + 1 == training.steps {
            history.records.push((step, loss));
        }
        adam_step(&mut params, &grads, &mut state)?;
        if !params.is_finite() {
            return Err(Error::Divergence {
                step: Some(step),
                loss: f64::NAN,
            });
        }
    }
    Ok((params, history))
}

/// Trains the configured autoencoder at one training Eb/N0.
pub fn train_autoencoder(
    config: &ExperimentConfig,
    train_ebn0_db: f64,
    seed: u64,
) -> Result<(ModelParams, TrainingHistory)> {
    config.validate()?;
    train_model(
        &config.layout(),
        &config.training,
        &config.channel_at(train_ebn0_db),
        seed,
    )
}
