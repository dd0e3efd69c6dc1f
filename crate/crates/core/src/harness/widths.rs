//! Decoder width sweep on a fixed, finite training set.

use rand::seq::SliceRandom;
use serde::Serialize;

use super::config::{ExperimentConfig, WidthSweepConfig};
use crate::channel::Realization;
use crate::error::{Error, Result};
use crate::nncore::{
    adam_step, init_params, loss_and_gradients_fixed, AdamState, Batch, Layout, ModelParams,
};
use crate::rng::{substream, SimRng};

pub const WIDTH_CSV_HEADER: &str = "width,parameter_count,train_loss,test_loss";

const STREAM_WIDTH_SETS: &str = "width-sets";
const STREAM_WIDTH_ORDER: &str = "width-order";

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WidthRow {
    pub width: usize,
    pub parameter_count: usize,
    pub train_loss: f64,
    pub test_loss: f64,
}

/// Fixed (message, channel realization) pairs.
#[derive(Clone, Debug)]
pub struct SampleSet {
    pub messages: Vec<usize>,
    pub realizations: Vec<Realization>,
}

impl SampleSet {
    fn draw(config: &ExperimentConfig, size: usize, rng: &mut SimRng) -> Result<Self> {
        let spec = config.channel_at(config.width_sweep.train_ebn0_db);
        let sampler = spec.sampler(config.channel.rate.n as usize)?;
        let m = config.message_count();
        let mut messages = Vec::with_capacity(size);
        let mut realizations = Vec::with_capacity(size);
        for _ in 0..size {
            messages.push(rand::Rng::random_range(rng, 0..m));
            realizations.push(sampler.draw(rng));
        }
        Ok(SampleSet {
            messages,
            realizations,
        })
    }

    pub fn len(&self) -> usize {
        self.messages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.messages.is_empty()
    }

    /// Mean cross-entropy of `params` over the whole set.
    pub fn loss(&self, params: &ModelParams) -> Result<f64> {
        let batch = Batch::new(self.messages.clone(), params.message_count)?;
        Ok(loss_and_gradients_fixed(params, &batch, &self.realizations)?.0)
    }
}

/// Training and test sets shared by every width, drawn from `seed`.
pub fn width_sets(config: &ExperimentConfig, seed: u64) -> Result<(SampleSet, SampleSet)> {
    let w = &config.width_sweep;
    let train = SampleSet::draw(
        config,
        w.train_set_size,
        &mut substream(seed, STREAM_WIDTH_SETS, &[0]),
    )?;
    let test = SampleSet::draw(
        config,
        w.test_set_size,
        &mut substream(seed, STREAM_WIDTH_SETS, &[1]),
    )?;
    Ok((train, test))
}

/// Trains a model with decoder hidden width `width` by minibatch Adam over
/// reshuffled epochs of `train`.
pub fn train_on_set(
    config: &ExperimentConfig,
    width: usize,
    train: &SampleSet,
    seed: u64,
) -> Result<ModelParams> {
    let WidthSweepConfig {
        steps, batch_size, ..
    } = config.width_sweep;
    let t = &config.training;
    let layout = Layout::with_decoder_hidden(
        config.message_count(),
        config.channel.rate.n as usize,
        width,
    );
    let mut params = init_params(&layout, seed)?;
    let mut state = AdamState::new(&params, t.learning_rate, t.beta1, t.beta2, t.epsilon)?;
    let mut order_rng = substream(seed, STREAM_WIDTH_ORDER, &[width as u64]);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut cursor = order.len();
    let size = batch_size.min(train.len());
    for step in 0..steps {
        let mut messages = Vec::with_capacity(size);
        let mut realizations = Vec::with_capacity(size);
        for _ in 0..size {
            if cursor == order.len() {
                order.shuffle(&mut order_rng);
                cursor = 0;
            }
            let i = order[cursor];
            cursor += 1;
            messages.push(train.messages[i]);
            realizations.push(train.realizations[i].clone());
        }
        let batch = Batch::new(messages, params.message_count)?;
        let (_, grads) =
            loss_and_gradients_fixed(&params, &batch, &realizations).map_err(|e| match e {
                Error::Divergence { loss, .. } => Error::Divergence {
                    step: Some(step),
                    loss,
                },
                other => other,
            })?;
        adam_step(&mut params, &grads, &mut state)?;
    }
    Ok(params)
}

/// Final training and test loss for each decoder width.
pub fn width_sweep(
    config: &ExperimentConfig,
    seed: u64,
    progress: &mut dyn FnMut(&str),
) -> Result<Vec<WidthRow>> {
    config.validate()?;
    let (train, test) = width_sets(config, seed)?;
    config
        .width_sweep
        .widths
        .iter()
        .map(|&width| {
            progress(&format!("training decoder width {width}"));
            let params = train_on_set(config, width, &train, seed)?;
            Ok(WidthRow {
                width,
                parameter_count: params.parameter_count(),
                train_loss: train.loss(&params)?,
                test_loss: test.loss(&params)?,
            })
        })
        .collect()
}

pub fn width_csv(rows: &[WidthRow]) -> String {
    let mut out = format!("{WIDTH_CSV_HEADER}\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.width, r.parameter_count, r.train_loss, r.test_loss
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        let mut c = ExperimentConfig::default();
        c.width_sweep.widths = vec![2, 32];
        c.width_sweep.train_set_size = 64;
        c.width_sweep.test_set_size = 500;
        c.width_sweep.steps = 300;
        c.width_sweep.batch_size = 32;
        c
    }

    #[test]
    fn sets_are_reproducible() {
        let c = small();
        let (a, _) = width_sets(&c, 3).unwrap();
        let (b, _) = width_sets(&c, 3).unwrap();
        assert_eq!(a.messages, b.messages);
        assert_eq!(a.realizations[5].noise, b.realizations[5].noise);
        assert_eq!(a.len(), 64);
    }

    #[test]
    fn wider_decoder_fits_training_set_better() {
        let rows = width_sweep(&small(), 1, &mut |_| {}).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows[0].parameter_count < rows[1].parameter_count);
        assert!(rows[1].train_loss < rows[0].train_loss, "{rows:?}");
        assert!(width_csv(&rows).starts_with(WIDTH_CSV_HEADER));
    }
}
