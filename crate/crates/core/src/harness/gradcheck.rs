//! Finite-difference check of the analytic gradients.

use rand::Rng;
use serde::Serialize;

use crate::channel::{ChannelKind, ChannelSpec, Rate, Realization};
use crate::error::Result;
use crate::nncore::{init_params, loss_and_gradients_fixed, Batch, Layout, ModelParams};
use crate::rng::substream;

const STREAM_GRADCHECK: &str = "gradcheck";

/// Central difference step.
pub const FD_STEP: f64 = 1e-5;
/// Relative errors are taken against `max(|analytic|, |numeric|, REL_FLOOR)`.
pub const REL_FLOOR: f64 = 1e-6;
pub const TOLERANCE: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GradcheckCase {
    pub message_count: usize,
    pub channel_uses: usize,
    pub decoder_hidden: usize,
    pub channel: ChannelKind,
    pub ebn0_db: f64,
    pub batch_size: usize,
    pub parameters: usize,
    pub max_rel_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GradcheckReport {
    pub cases: Vec<GradcheckCase>,
}

impl GradcheckReport {
    pub fn max_rel_error(&self) -> f64 {
        self.cases
            .iter()
            .map(|c| c.max_rel_error)
            .fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.max_rel_error() < TOLERANCE
    }
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_FLOOR)
}

/// Largest relative error between the analytic gradient and central
/// differences over every parameter, for a fixed batch and channel draw.
pub fn check_gradients(
    params: &ModelParams,
    batch: &Batch,
    realizations: &[Realization],
) -> Result<f64> {
    let (_, grads) = loss_and_gradients_fixed(params, batch, realizations)?;
    let analytic = grads.to_flat();
    let base = params.to_flat();
    let mut probe = params.clone();
    let mut worst = 0.0f64;
    let set =
        |p: &mut ModelParams, i: usize, v: f64| *p.flat_mut().nth(i).expect("index in range") = v;
    for (i, &a) in analytic.iter().enumerate() {
        set(&mut probe, i, base[i] + FD_STEP);
        let plus = loss_and_gradients_fixed(&probe, batch, realizations)?.0;
        set(&mut probe, i, base[i] - FD_STEP);
        let minus = loss_and_gradients_fixed(&probe, batch, realizations)?.0;
        set(&mut probe, i, base[i]);
        worst = worst.max(relative_error(a, (plus - minus) / (2.0 * FD_STEP)));
    }
    Ok(worst)
}

/// Checks `cases` randomly drawn architectures, channels and batches.
pub fn gradient_check(cases: usize, seed: u64) -> Result<GradcheckReport> {
    let mut out = Vec::with_capacity(cases);
    for case in 0..cases {
        let mut rng = substream(seed, STREAM_GRADCHECK, &[case as u64]);
        let k = rng.random_range(1..=4u32);
        let n = rng.random_range(k..=7u32);
        let m = 1usize << k;
        let hidden = rng.random_range(2..=20usize);
        let layout = Layout::with_decoder_hidden(m, n as usize, hidden);
        let ebn0_db = rng.random_range(-2.0..8.0);
        let rate = Rate { k, n };
        let channel = match rng.random_range(0..3) {
            0 => ChannelSpec::awgn(ebn0_db, rate),
            1 => ChannelSpec::correlated(ebn0_db, rate, rng.random_range(0.0..0.9)),
            _ => ChannelSpec::rayleigh(ebn0_db, rate, rng.random()),
        };
        let batch_size = rng.random_range(4..=32usize);
        // Small one-hot encoders can map a message to zero at init; redraw.
        let params = loop {
            let p = init_params(&layout, rng.random())?;
            if p.constellation().is_ok() {
                break p;
            }
        };
        let batch = Batch::sample(batch_size, m, &mut rng)?;
        let sampler = channel.sampler(n as usize)?;
        let realizations: Vec<Realization> =
            (0..batch_size).map(|_| sampler.draw(&mut rng)).collect();
        out.push(GradcheckCase {
            message_count: m,
            channel_uses: n as usize,
            decoder_hidden: hidden,
            channel: channel.kind,
            ebn0_db,
            batch_size,
            parameters: params.parameter_count(),
            max_rel_error: check_gradients(&params, &batch, &realizations)?,
        });
    }
    Ok(GradcheckReport { cases: out })
}
