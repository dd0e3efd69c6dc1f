//! Dense feed-forward autoencoder: one-hot message in, `n` real channel
//! uses out (energy-normalized), and a softmax decoder back to `M` messages.
//!
//! Default architecture, for `M` messages and `n` channel uses:
//!
//! ```text
//! encoder: dense(M -> M, relu) -> dense(M -> n, linear) -> x * sqrt(n) / |x|
//! decoder: dense(n -> M, relu) -> dense(M -> M, linear) -> softmax
//! ```

mod adam;
mod backprop;
mod checkpoint;

pub use adam::{adam_step, AdamState};
pub use backprop::{loss_and_gradients, loss_and_gradients_fixed, Batch};
pub use checkpoint::{read_checkpoint, write_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng::{substream, STREAM_MODEL_INIT};

/// Pre-normalization norms below this are rejected.
pub const MIN_CODEWORD_NORM: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Linear,
    Relu,
}

impl Activation {
    #[inline]
    fn apply(self, v: f64) -> f64 {
        match self {
            Activation::Linear => v,
            Activation::Relu => v.max(0.0),
        }
    }

    /// Derivative, expressed through the activation's output.
    #[inline]
    fn derivative_from_output(self, out: f64) -> f64 {
        match self {
            Activation::Linear => 1.0,
            Activation::Relu => {
                if out > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Fully connected layer; `weights` is `outputs x inputs`, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize, activation: Activation) -> Self {
        Dense {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
            activation,
        }
    }

    pub fn parameter_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    #[inline]
    fn forward_into(&self, input: &[f64], out: &mut [f64]) {
        for (o, (row, b)) in out
            .iter_mut()
            .zip(self.weights.chunks_exact(self.inputs).zip(&self.bias))
        {
            let z: f64 = row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>() + b;
            *o = self.activation.apply(z);
        }
    }

    fn same_shape(&self, other: &Dense) -> bool {
        self.inputs == other.inputs
            && self.outputs == other.outputs
            && self.weights.len() == other.weights.len()
            && self.bias.len() == other.bias.len()
    }
}

/// Layer widths of the encoder and decoder, input and output included.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Layout {
    pub message_count: usize,
    pub channel_uses: usize,
    pub encoder_widths: Vec<usize>,
    pub decoder_widths: Vec<usize>,
}

impl Layout {
    /// The default `(M, n)` autoencoder.
    pub fn autoencoder(message_count: usize, channel_uses: usize) -> Self {
        Self::with_decoder_hidden(message_count, channel_uses, message_count)
    }

    /// Default encoder with a decoder hidden layer of `hidden` units.
    pub fn with_decoder_hidden(message_count: usize, channel_uses: usize, hidden: usize) -> Self {
        Layout {
            message_count,
            channel_uses,
            encoder_widths: vec![message_count, message_count, channel_uses],
            decoder_widths: vec![channel_uses, hidden, message_count],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (m, n) = (self.message_count, self.channel_uses);
        let check = |widths: &[usize], input: usize, output: usize, name: &str| -> Result<()> {
            if widths.len() < 2 || widths.contains(&0) {
                return Err(Error::Config(format!(
                    "{name} widths {widths:?} need at least two non-zero entries"
                )));
            }
            if widths[0] != input || widths[widths.len() - 1] != output {
                return Err(Error::Config(format!(
                    "{name} widths {widths:?} must run from {input} to {output}"
                )));
            }
            Ok(())
        };
        if m < 2 || n == 0 {
            return Err(Error::Config(format!(
                "need M >= 2 and n >= 1, got M={m}, n={n}"
            )));
        }
        check(&self.encoder_widths, m, n, "encoder")?;
        check(&self.decoder_widths, n, m, "decoder")
    }

    pub fn parameter_count(&self) -> usize {
        let count = |w: &[usize]| w.windows(2).map(|p| p[0] * p[1] + p[1]).sum::<usize>();
        count(&self.encoder_widths) + count(&self.decoder_widths)
    }
}

fn stack(widths: &[usize]) -> Vec<Dense> {
    let last = widths.len() - 2;
    widths
        .windows(2)
        .enumerate()
        .map(|(i, p)| {
            let act = if i == last {
                Activation::Linear
            } else {
                Activation::Relu
            };
            Dense::zeros(p[0], p[1], act)
        })
        .collect()
}

/// Trainable state of the autoencoder.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    pub encoder: Vec<Dense>,
    pub decoder: Vec<Dense>,
    pub message_count: usize,
    pub channel_uses: usize,
}

impl ModelParams {
    /// All-zero parameters for `layout`.
    pub fn zeros(layout: &Layout) -> Result<Self> {
        layout.validate()?;
        Ok(ModelParams {
            encoder: stack(&layout.encoder_widths),
            decoder: stack(&layout.decoder_widths),
            message_count: layout.message_count,
            channel_uses: layout.channel_uses,
        })
    }

    /// Zeros with the same shape as `self`.
    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        for layer in z.layers_mut() {
            layer.weights.iter_mut().for_each(|w| *w = 0.0);
            layer.bias.iter_mut().for_each(|b| *b = 0.0);
        }
        z
    }

    pub fn layout(&self) -> Layout {
        let widths = |layers: &[Dense]| {
            let mut w: Vec<usize> = layers.iter().map(|l| l.inputs).collect();
            w.extend(layers.last().map(|l| l.outputs));
            w
        };
        Layout {
            message_count: self.message_count,
            channel_uses: self.channel_uses,
            encoder_widths: widths(&self.encoder),
            decoder_widths: widths(&self.decoder),
        }
    }

    /// Checks widths chain correctly and every value is finite.
    pub fn validate(&self) -> Result<()> {
        self.layout().validate()?;
        for layer in self.layers() {
            let chained = layer.weights.len() == layer.inputs * layer.outputs
                && layer.bias.len() == layer.outputs;
            if !chained {
                return Err(Error::Config(
                    "layer storage does not match its widths".into(),
                ));
            }
        }
        for pair in self.encoder.windows(2).chain(self.decoder.windows(2)) {
            if pair[0].outputs != pair[1].inputs {
                return Err(Error::Config("consecutive layer widths disagree".into()));
            }
        }
        if !self.is_finite() {
            return Err(Error::NonFinite("model parameters".into()));
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.layers()
            .all(|l| l.weights.iter().chain(&l.bias).all(|v| v.is_finite()))
    }

    /// Encoder layers followed by decoder layers.
    pub fn layers(&self) -> impl Iterator<Item = &Dense> {
        self.encoder.iter().chain(&self.decoder)
    }

    pub fn layers_mut(&mut self) -> impl Iterator<Item = &mut Dense> {
        self.encoder.iter_mut().chain(self.decoder.iter_mut())
    }

    pub fn parameter_count(&self) -> usize {
        self.layers().map(Dense::parameter_count).sum()
    }

    pub fn same_shape(&self, other: &ModelParams) -> bool {
        self.encoder.len() == other.encoder.len()
            && self.decoder.len() == other.decoder.len()
            && self
                .layers()
                .zip(other.layers())
                .all(|(a, b)| a.same_shape(b))
    }

    /// Flattened parameter vector in checkpoint order.
    pub fn to_flat(&self) -> Vec<f64> {
        self.layers()
            .flat_map(|l| l.weights.iter().chain(&l.bias).copied())
            .collect()
    }

    pub fn flat_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers_mut()
            .flat_map(|l| l.weights.iter_mut().chain(l.bias.iter_mut()))
    }

    /// Pre-normalization encoder output for `message`.
    fn encoder_raw(&self, message: usize) -> Result<Vec<f64>> {
        if message >= self.message_count {
            return Err(Error::MessageOutOfRange {
                message,
                count: self.message_count,
            });
        }
        let first = &self.encoder[0];
        // One-hot input selects a column of the first weight matrix.
        let mut act: Vec<f64> = (0..first.outputs)
            .map(|o| {
                first
                    .activation
                    .apply(first.weights[o * first.inputs + message] + first.bias[o])
            })
            .collect();
        for layer in &self.encoder[1..] {
            let mut next = vec![0.0; layer.outputs];
            layer.forward_into(&act, &mut next);
            act = next;
        }
        Ok(act)
    }

    /// Codewords for every message, in message order.
    pub fn constellation(&self) -> Result<Vec<Vec<f64>>> {
        (0..self.message_count).map(|m| encode(self, m)).collect()
    }

    /// Decoder logits into `out`, using `scratch` for hidden activations.
    pub(crate) fn decoder_logits_into(
        &self,
        received: &[f64],
        scratch: &mut DecoderScratch,
        out: &mut [f64],
    ) {
        let layers = &self.decoder;
        let last = layers.len() - 1;
        scratch.ensure(layers);
        for (i, layer) in layers[..last].iter().enumerate() {
            let (done, rest) = scratch.bufs.split_at_mut(i);
            let input = if i == 0 { received } else { &done[i - 1] };
            layer.forward_into(input, &mut rest[0]);
        }
        let input = if last == 0 {
            received
        } else {
            &scratch.bufs[last - 1]
        };
        layers[last].forward_into(input, out);
    }

    /// Most likely message for `received`, lowest index on ties.
    pub fn predict_with(
        &self,
        received: &[f64],
        scratch: &mut DecoderScratch,
        logits: &mut Vec<f64>,
    ) -> usize {
        logits.resize(self.message_count, 0.0);
        self.decoder_logits_into(received, scratch, logits);
        argmax(logits)
    }
}

/// Reusable hidden-activation buffers for decoder evaluation.
#[derive(Clone, Debug, Default)]
pub struct DecoderScratch {
    bufs: Vec<Vec<f64>>,
}

impl DecoderScratch {
    fn ensure(&mut self, layers: &[Dense]) {
        let hidden = layers.len() - 1;
        self.bufs.resize(hidden.max(1), Vec::new());
        for (buf, layer) in self.bufs.iter_mut().zip(&layers[..hidden]) {
            buf.resize(layer.outputs, 0.0);
        }
    }
}

/// Index of the largest entry; the lowest index wins ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Random initial parameters: weights `N(0, 1/fan_in)`, biases zero.
pub fn init_params(layout: &Layout, seed: u64) -> Result<ModelParams> {
    let mut params = ModelParams::zeros(layout)?;
    let mut rng = substream(seed, STREAM_MODEL_INIT, &[]);
    for layer in params.layers_mut() {
        let scale = 1.0 / (layer.inputs as f64).sqrt();
        for w in layer.weights.iter_mut() {
            *w = scale * rng.sample::<f64, _>(StandardNormal);
        }
    }
    Ok(params)
}

/// Scales `raw` to squared norm `n`; returns the original norm.
fn normalize(raw: &[f64], message: usize) -> Result<(Vec<f64>, f64)> {
    let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !norm.is_finite() {
        return Err(Error::NonFinite(format!(
            "encoder output for message {message}"
        )));
    }
    if norm < MIN_CODEWORD_NORM {
        return Err(Error::DegenerateCodeword { message, norm });
    }
    let scale = (raw.len() as f64).sqrt() / norm;
    Ok((raw.iter().map(|v| v * scale).collect(), norm))
}

/// Energy-normalized codeword for `message`: `|x|^2 = n`.
pub fn encode(params: &ModelParams, message: usize) -> Result<Vec<f64>> {
    let raw = params.encoder_raw(message)?;
    Ok(normalize(&raw, message)?.0)
}

/// Softmax posterior over messages.
pub fn decode(params: &ModelParams, received: &[f64]) -> Result<Vec<f64>> {
    if received.len() != params.channel_uses {
        return Err(Error::ShapeMismatch(format!(
            "received length {} != {}",
            received.len(),
            params.channel_uses
        )));
    }
    if received.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("received block".into()));
    }
    let mut logits = vec![0.0; params.message_count];
    params.decoder_logits_into(received, &mut DecoderScratch::default(), &mut logits);
    softmax_in_place(&mut logits);
    Ok(logits)
}

/// Message decision for `received`.
pub fn predict(params: &ModelParams, received: &[f64]) -> Result<usize> {
    Ok(argmax(&decode(params, received)?))
}

pub(crate) fn softmax_in_place(v: &mut [f64]) {
    let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for x in v.iter_mut() {
        *x = (*x - max).exp();
        sum += *x;
    }
    for x in v.iter_mut() {
        *x /= sum;
    }
}
