use rand::Rng;

use super::{normalize, Dense, ModelParams};
use crate::channel::{ChannelSampler, ChannelSpec, Realization};
use crate::error::{Error, Result};

/// Message indices of one training batch.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Batch {
    messages: Vec<usize>,
}

impl Batch {
    pub fn new(messages: Vec<usize>, message_count: usize) -> Result<Self> {
        if messages.is_empty() {
            return Err(Error::Config("empty batch".into()));
        }
        if let Some(&message) = messages.iter().find(|&&m| m >= message_count) {
            return Err(Error::MessageOutOfRange {
                message,
                count: message_count,
            });
        }
        Ok(Batch { messages })
    }

    /// `size` messages drawn uniformly from `0..message_count`.
    pub fn sample<R: Rng + ?Sized>(size: usize, message_count: usize, rng: &mut R) -> Result<Self> {
        Self::new(
            (0..size)
                .map(|_| rng.random_range(0..message_count))
                .collect(),
            message_count,
        )
    }

    pub fn messages(&self) -> &[usize] {
        &self.messages
    }

    pub fn len(&self) -> usize {
        self.messages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.messages.is_empty()
    }
}

/// Mean cross-entropy over `batch` and its exact gradient, with one fresh
/// channel realization per sample drawn from `rng`.
pub fn loss_and_gradients<R: Rng + ?Sized>(
    params: &ModelParams,
    batch: &Batch,
    channel: &ChannelSpec,
    rng: &mut R,
) -> Result<(f64, ModelParams)> {
    let sampler = channel.sampler(params.channel_uses)?;
    let realizations = draw_realizations(&sampler, batch.len(), rng);
    loss_and_gradients_fixed(params, batch, &realizations)
}

pub(crate) fn draw_realizations<R: Rng + ?Sized>(
    sampler: &ChannelSampler,
    count: usize,
    rng: &mut R,
) -> Vec<Realization> {
    (0..count).map(|_| sampler.draw(rng)).collect()
}

/// Activations of a layer stack: `acts[0]` is the input and `acts[i + 1]`
/// the output of layer `i`.
fn activation_buffers(layers: &[Dense]) -> Vec<Vec<f64>> {
    let mut acts = vec![vec![0.0; layers[0].inputs]];
    acts.extend(layers.iter().map(|l| vec![0.0; l.outputs]));
    acts
}

fn forward_stack(layers: &[Dense], acts: &mut [Vec<f64>]) {
    for (i, layer) in layers.iter().enumerate() {
        let (done, rest) = acts.split_at_mut(i + 1);
        layer.forward_into(&done[i], &mut rest[0]);
    }
}

/// Backpropagates through `layers`. On entry `deltas[last]` holds the loss
/// gradient with respect to the last layer's pre-activation; on return
/// `input_grad` holds the gradient with respect to the stack input.
fn backward_stack(
    layers: &[Dense],
    grads: &mut [Dense],
    acts: &[Vec<f64>],
    deltas: &mut [Vec<f64>],
    input_grad: Option<&mut [f64]>,
) {
    let last = layers.len() - 1;
    let mut input_grad = input_grad;
    for l in (0..=last).rev() {
        let layer = &layers[l];
        let grad = &mut grads[l];
        let input = &acts[l];
        let (lower, upper) = deltas.split_at_mut(l);
        let delta = &upper[0];
        for (o, &d) in delta.iter().enumerate() {
            if d == 0.0 {
                continue;
            }
            let row = &mut grad.weights[o * layer.inputs..(o + 1) * layer.inputs];
            for (g, &a) in row.iter_mut().zip(input) {
                *g += d * a;
            }
            grad.bias[o] += d;
        }
        let target: Option<&mut [f64]> = if l > 0 {
            Some(&mut lower[l - 1])
        } else {
            input_grad.as_deref_mut()
        };
        if let Some(target) = target {
            target.iter_mut().for_each(|t| *t = 0.0);
            for (o, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                for (t, &w) in target.iter_mut().zip(row) {
                    *t += w * d;
                }
            }
            if l > 0 {
                let below = layers[l - 1].activation;
                for (t, &a) in target.iter_mut().zip(&acts[l]) {
                    *t *= below.derivative_from_output(a);
                }
            }
        }
    }
}

struct EncodedMessage {
    acts: Vec<Vec<f64>>,
    codeword: Vec<f64>,
    norm: f64,
    grad_codeword: Vec<f64>,
}

/// Mean cross-entropy and exact gradient for explicitly given channel
/// realizations, one per batch entry.
///
/// The energy normalization is differentiated as the projection it is:
/// `dL/dz = sqrt(n)/|z| (g - u (u . g))` with `u = z/|z|`.
pub fn loss_and_gradients_fixed(
    params: &ModelParams,
    batch: &Batch,
    realizations: &[Realization],
) -> Result<(f64, ModelParams)> {
    let n = params.channel_uses;
    let m_count = params.message_count;
    if realizations.len() != batch.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} realizations for a batch of {}",
            realizations.len(),
            batch.len()
        )));
    }
    if realizations.iter().any(|r| r.noise.len() != n) {
        return Err(Error::ShapeMismatch(
            "realization length differs from n".into(),
        ));
    }
    if let Some(&message) = batch.messages().iter().find(|&&m| m >= m_count) {
        return Err(Error::MessageOutOfRange {
            message,
            count: m_count,
        });
    }

    let mut grads = params.zeros_like();

    // Each distinct message goes through the encoder once.
    let mut encoded: Vec<Option<EncodedMessage>> = (0..m_count).map(|_| None).collect();
    for &m in batch.messages() {
        if encoded[m].is_none() {
            let mut acts = activation_buffers(&params.encoder);
            acts[0][m] = 1.0;
            forward_stack(&params.encoder, &mut acts);
            let (codeword, norm) = normalize(acts.last().unwrap(), m)?;
            encoded[m] = Some(EncodedMessage {
                acts,
                codeword,
                norm,
                grad_codeword: vec![0.0; n],
            });
        }
    }

    let scale = 1.0 / batch.len() as f64;
    let mut acts = activation_buffers(&params.decoder);
    let mut deltas: Vec<Vec<f64>> = params
        .decoder
        .iter()
        .map(|l| vec![0.0; l.outputs])
        .collect();
    let mut grad_received = vec![0.0; n];
    let last = params.decoder.len() - 1;
    let mut loss = 0.0;

    for (&m, realization) in batch.messages().iter().zip(realizations) {
        let enc = encoded[m].as_mut().expect("encoded above");
        realization.apply_into(&enc.codeword, &mut acts[0]);
        forward_stack(&params.decoder, &mut acts);

        let logits = &acts[last + 1];
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let sum_exp: f64 = logits.iter().map(|z| (z - max).exp()).sum();
        let log_norm = max + sum_exp.ln();
        loss += log_norm - logits[m];

        let out_act = params.decoder[last].activation;
        for (k, (d, &z)) in deltas[last].iter_mut().zip(logits).enumerate() {
            let p = (z - log_norm).exp();
            let target = if k == m { 1.0 } else { 0.0 };
            *d = scale * (p - target) * out_act.derivative_from_output(z);
        }
        backward_stack(
            &params.decoder,
            &mut grads.decoder,
            &acts,
            &mut deltas,
            Some(&mut grad_received),
        );

        // y = h x + w, so dL/dx = h dL/dy.
        for (i, (gx, &gy)) in enc.grad_codeword.iter_mut().zip(&grad_received).enumerate() {
            *gx += realization.fade.gain(i) * gy;
        }
    }
    loss *= scale;
    if !loss.is_finite() {
        return Err(Error::Divergence { step: None, loss });
    }

    let enc_last = params.encoder.len() - 1;
    let mut enc_deltas: Vec<Vec<f64>> = params
        .encoder
        .iter()
        .map(|l| vec![0.0; l.outputs])
        .collect();
    for enc in encoded.iter().flatten() {
        let root_n = (n as f64).sqrt();
        let unit: Vec<f64> = enc.codeword.iter().map(|x| x / root_n).collect();
        let proj: f64 = unit
            .iter()
            .zip(&enc.grad_codeword)
            .map(|(u, g)| u * g)
            .sum();
        let factor = root_n / enc.norm;
        let raw_act = params.encoder[enc_last].activation;
        for (i, d) in enc_deltas[enc_last].iter_mut().enumerate() {
            let g = factor * (enc.grad_codeword[i] - unit[i] * proj);
            *d = g * raw_act.derivative_from_output(enc.acts[enc_last + 1][i]);
        }
        backward_stack(
            &params.encoder,
            &mut grads.encoder,
            &enc.acts,
            &mut enc_deltas,
            None,
        );
    }

    Ok((loss, grads))
}
