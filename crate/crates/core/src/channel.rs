//! Channel models: Eb/N0 to noise variance, and samplers for AWGN,
//! exponentially correlated AWGN and flat Rayleigh fading.
//!
//! All channels are real-valued. The noise variance per real dimension is
//! `1 / (2 R Eb/N0)` with `Eb/N0` in linear units, which for unit-energy
//! channel uses is the usual BPSK convention.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Code rate `k/n`: information bits per channel use.
///
/// The numerator and denominator are kept as given (not reduced) because
/// the autoencoder takes its message count `2^k` and block length `n` from
/// them.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Rate {
    pub k: u32,
    pub n: u32,
}

impl Rate {
    pub const HAMMING_7_4: Rate = Rate { k: 4, n: 7 };

    pub fn new(k: u32, n: u32) -> Result<Self> {
        let rate = Rate { k, n };
        rate.validate()?;
        Ok(rate)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.n == 0 || self.k > self.n {
            return Err(Error::Domain(format!("rate {self} must lie in (0, 1]")));
        }
        Ok(())
    }

    pub fn value(&self) -> f64 {
        f64::from(self.k) / f64::from(self.n)
    }
}

impl fmt::Display for Rate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.k, self.n)
    }
}

impl FromStr for Rate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parse = |t: &str| {
            t.trim()
                .parse::<u32>()
                .map_err(|_| Error::Domain(format!("invalid rate `{s}`, expected k/n")))
        };
        match s.split_once('/') {
            Some((k, n)) => Ok(Rate {
                k: parse(k)?,
                n: parse(n)?,
            }),
            None => {
                let k = parse(s)?;
                Ok(Rate { k, n: 1 })
            }
        }
    }
}

impl Serialize for Rate {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Rate {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Int(u32),
            Text(String),
        }
        match Repr::deserialize(deserializer)? {
            // Validation (k > 0, k <= n) happens later so that the error can
            // name the config key and line.
            Repr::Int(k) => Ok(Rate { k, n: 1 }),
            Repr::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Noise variance per real dimension for a given Eb/N0 (dB) and rate.
///
/// `ebn0_db = +inf` yields zero variance.
pub fn noise_variance(ebn0_db: f64, rate: f64) -> f64 {
    assert!(rate > 0.0, "rate must be positive");
    1.0 / (2.0 * rate * 10f64.powf(ebn0_db / 10.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelKind {
    Awgn,
    CorrelatedAwgn,
    Rayleigh,
}

impl fmt::Display for ChannelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ChannelKind::Awgn => "awgn",
            ChannelKind::CorrelatedAwgn => "correlated_awgn",
            ChannelKind::Rayleigh => "rayleigh",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChannelSpec {
    pub kind: ChannelKind,
    pub ebn0_db: f64,
    pub rate: Rate,
    /// Correlation coefficient between adjacent channel uses (correlated kind).
    pub rho: f64,
    /// One fade per block rather than one per channel use (Rayleigh kind).
    pub block_fading: bool,
}

impl ChannelSpec {
    pub fn awgn(ebn0_db: f64, rate: Rate) -> Self {
        ChannelSpec {
            kind: ChannelKind::Awgn,
            ebn0_db,
            rate,
            rho: 0.0,
            block_fading: true,
        }
    }

    pub fn correlated(ebn0_db: f64, rate: Rate, rho: f64) -> Self {
        ChannelSpec {
            kind: ChannelKind::CorrelatedAwgn,
            rho,
            ..Self::awgn(ebn0_db, rate)
        }
    }

    pub fn rayleigh(ebn0_db: f64, rate: Rate, block_fading: bool) -> Self {
        ChannelSpec {
            kind: ChannelKind::Rayleigh,
            block_fading,
            ..Self::awgn(ebn0_db, rate)
        }
    }

    /// The same channel at a different Eb/N0.
    pub fn at(&self, ebn0_db: f64) -> Self {
        ChannelSpec { ebn0_db, ..*self }
    }

    pub fn validate(&self) -> Result<()> {
        self.rate.validate()?;
        if self.ebn0_db.is_nan() || self.ebn0_db == f64::NEG_INFINITY {
            return Err(Error::Domain(format!("invalid Eb/N0 {}", self.ebn0_db)));
        }
        if !(0.0..1.0).contains(&self.rho) {
            return Err(Error::Domain(format!("rho {} outside [0, 1)", self.rho)));
        }
        Ok(())
    }

    pub fn noise_variance(&self) -> f64 {
        noise_variance(self.ebn0_db, self.rate.value())
    }

    /// Precomputes the noise scale and covariance factor for blocks of `n`
    /// channel uses.
    pub fn sampler(&self, n: usize) -> Result<ChannelSampler> {
        self.validate()?;
        let sigma = self.noise_variance().sqrt();
        let factor = match self.kind {
            ChannelKind::CorrelatedAwgn if self.rho > 0.0 => Some(
                cholesky(&toeplitz_exponential(n, self.rho), n)
                    .ok_or(Error::Factorization { rho: self.rho })?,
            ),
            _ => None,
        };
        Ok(ChannelSampler {
            spec: *self,
            n,
            sigma,
            factor,
        })
    }
}

/// Channel gain applied to a block.
#[derive(Clone, Debug, PartialEq)]
pub enum Fade {
    None,
    Block(f64),
    PerSymbol(Vec<f64>),
}

impl Fade {
    #[inline]
    pub fn gain(&self, i: usize) -> f64 {
        match self {
            Fade::None => 1.0,
            Fade::Block(h) => *h,
            Fade::PerSymbol(h) => h[i],
        }
    }

    /// The scalar fade, when there is exactly one.
    pub fn scalar(&self) -> Option<f64> {
        match self {
            Fade::Block(h) => Some(*h),
            _ => None,
        }
    }
}

/// One sampled channel state: additive noise and fade.
#[derive(Clone, Debug, PartialEq)]
pub struct Realization {
    pub noise: Vec<f64>,
    pub fade: Fade,
}

impl Realization {
    /// A noiseless, unfaded realization.
    pub fn clean(n: usize) -> Self {
        Realization {
            noise: vec![0.0; n],
            fade: Fade::None,
        }
    }

    /// `y = h * x + w`.
    pub fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        for (i, (yi, (&xi, &wi))) in y.iter_mut().zip(x.iter().zip(&self.noise)).enumerate() {
            *yi = self.fade.gain(i) * xi + wi;
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; x.len()];
        self.apply_into(x, &mut y);
        y
    }
}

/// Draws channel realizations for fixed-length blocks.
#[derive(Clone, Debug)]
pub struct ChannelSampler {
    spec: ChannelSpec,
    n: usize,
    sigma: f64,
    /// Lower-triangular factor of the correlation matrix, row-major.
    factor: Option<Vec<f64>>,
}

impl ChannelSampler {
    pub fn spec(&self) -> &ChannelSpec {
        &self.spec
    }

    pub fn block_len(&self) -> usize {
        self.n
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Realization {
        let mut r = Realization::clean(self.n);
        self.draw_into(rng, &mut r);
        r
    }

    /// Noise is drawn before the fade so that AWGN and Rayleigh runs on the
    /// same stream share their noise realizations.
    pub fn draw_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut Realization) {
        let n = self.n;
        out.noise.resize(n, 0.0);
        for w in out.noise.iter_mut() {
            *w = rng.sample::<f64, _>(StandardNormal);
        }
        if let Some(l) = &self.factor {
            // Lower-triangular product in place, from the bottom row up.
            for i in (0..n).rev() {
                let row = &l[i * n..i * n + i + 1];
                out.noise[i] = row.iter().zip(&out.noise[..=i]).map(|(a, b)| a * b).sum();
            }
        }
        for w in out.noise.iter_mut() {
            *w *= self.sigma;
        }
        out.fade = match self.spec.kind {
            ChannelKind::Rayleigh if self.spec.block_fading => Fade::Block(rayleigh_fade(rng)),
            ChannelKind::Rayleigh => Fade::PerSymbol((0..n).map(|_| rayleigh_fade(rng)).collect()),
            _ => Fade::None,
        };
    }
}

/// Rayleigh amplitude with unit second moment: `h^2 ~ Exp(1)`.
fn rayleigh_fade<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample::<f64, _>(Exp1).sqrt()
}

/// Passes `x` through the channel, returning the received block and fade.
pub fn transmit<R: Rng + ?Sized>(
    spec: &ChannelSpec,
    x: &[f64],
    rng: &mut R,
) -> Result<(Vec<f64>, Fade)> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("channel input".into()));
    }
    let realization = spec.sampler(x.len())?.draw(rng);
    let y = realization.apply(x);
    Ok((y, realization.fade))
}

/// `T[i][j] = rho^|i-j|`, row-major.
pub fn toeplitz_exponential(n: usize, rho: f64) -> Vec<f64> {
    let mut t = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            t[i * n + j] = rho.powi((i as i32 - j as i32).abs());
        }
    }
    t
}

/// Cholesky factor `L` with `A = L L^T`; `None` if `A` is not numerically
/// positive definite.
fn cholesky(a: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let dot: f64 = (0..j).map(|p| l[i * n + p] * l[j * n + p]).sum();
            if i == j {
                let d = a[i * n + i] - dot;
                if d.is_nan() || d <= f64::EPSILON * n as f64 {
                    return None;
                }
                l[i * n + j] = d.sqrt();
            } else {
                l[i * n + j] = (a[i * n + j] - dot) / l[j * n + j];
            }
        }
    }
    Some(l)
}
