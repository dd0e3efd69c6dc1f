//! Binary model checkpoints.
//!
//! Layout, all integers `u32` little-endian:
//!
//! ```text
//! magic "AECOMMNN" | version | M | k | n | encoder layers | decoder layers
//! per layer (encoder then decoder): inputs | outputs | activation (u8: 0 linear, 1 relu)
//! per layer, same order: weights row-major, then bias, as f64 little-endian
//! ```

use std::io::{Read, Write};

use super::{Activation, Dense, ModelParams};
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"AECOMMNN";
pub const CHECKPOINT_VERSION: u32 = 1;

fn put_u32<W: Write>(w: &mut W, v: usize) -> Result<()> {
    let v = u32::try_from(v).map_err(|_| Error::Checkpoint(format!("{v} does not fit in u32")))?;
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn get_u32<R: Read>(r: &mut R) -> Result<usize> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b) as usize)
}

pub fn write_checkpoint<W: Write>(params: &ModelParams, mut w: W) -> Result<()> {
    params.validate()?;
    if !params.message_count.is_power_of_two() {
        return Err(Error::Checkpoint(format!(
            "M = {} is not a power of two",
            params.message_count
        )));
    }
    w.write_all(CHECKPOINT_MAGIC)?;
    w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
    put_u32(&mut w, params.message_count)?;
    put_u32(&mut w, params.message_count.trailing_zeros() as usize)?;
    put_u32(&mut w, params.channel_uses)?;
    put_u32(&mut w, params.encoder.len())?;
    put_u32(&mut w, params.decoder.len())?;
    for layer in params.layers() {
        put_u32(&mut w, layer.inputs)?;
        put_u32(&mut w, layer.outputs)?;
        w.write_all(&[match layer.activation {
            Activation::Linear => 0,
            Activation::Relu => 1,
        }])?;
    }
    for v in params.to_flat() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<ModelParams> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(Error::Checkpoint("bad magic".into()));
    }
    let version = get_u32(&mut r)? as u32;
    if version != CHECKPOINT_VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let message_count = get_u32(&mut r)?;
    let k = get_u32(&mut r)?;
    let channel_uses = get_u32(&mut r)?;
    if k >= usize::BITS as usize || 1usize << k != message_count {
        return Err(Error::Checkpoint(format!(
            "M = {message_count} inconsistent with k = {k}"
        )));
    }
    let n_enc = get_u32(&mut r)?;
    let n_dec = get_u32(&mut r)?;
    if n_enc == 0 || n_dec == 0 || n_enc + n_dec > 64 {
        return Err(Error::Checkpoint(format!(
            "implausible layer counts {n_enc}/{n_dec}"
        )));
    }
    let mut layers = Vec::with_capacity(n_enc + n_dec);
    for _ in 0..n_enc + n_dec {
        let inputs = get_u32(&mut r)?;
        let outputs = get_u32(&mut r)?;
        let mut tag = [0u8; 1];
        r.read_exact(&mut tag)?;
        let activation = match tag[0] {
            0 => Activation::Linear,
            1 => Activation::Relu,
            t => return Err(Error::Checkpoint(format!("unknown activation tag {t}"))),
        };
        if inputs.checked_mul(outputs).is_none_or(|c| c > 1 << 24) {
            return Err(Error::Checkpoint(format!(
                "implausible layer {inputs}x{outputs}"
            )));
        }
        layers.push(Dense::zeros(inputs, outputs, activation));
    }
    let mut buf = [0u8; 8];
    for layer in layers.iter_mut() {
        for v in layer.weights.iter_mut().chain(layer.bias.iter_mut()) {
            r.read_exact(&mut buf)?;
            *v = f64::from_le_bytes(buf);
        }
    }
    let decoder = layers.split_off(n_enc);
    let params = ModelParams {
        encoder: layers,
        decoder,
        message_count,
        channel_uses,
    };
    params
        .validate()
        .map_err(|e| Error::Checkpoint(e.to_string()))?;
    Ok(params)
}
