//! Distribution-shift metrics between zero-mean Gaussian received-signal
//! distributions: overlapping coefficient `∫ min(p, q)` and KL divergence.
//!
//! The univariate overlap of the per-dimension noise marginals is the
//! tabulated train/test shift quantity. The isotropic `d`-dimensional
//! overlap and the Monte Carlo estimators are extensions of it.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("normal_cdf({x})")));
    }
    Ok(0.5 * libm::erfc(-x / std::f64::consts::SQRT_2))
}

/// CDF of the chi-square distribution with `dof` degrees of freedom.
pub fn chi_square_cdf(x: f64, dof: u32) -> Result<f64> {
    if dof == 0 || !x.is_finite() || x < 0.0 {
        return Err(Error::Domain(format!("chi_square_cdf({x}, {dof})")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    Ok(statrs::function::gamma::gamma_lr(
        f64::from(dof) / 2.0,
        x / 2.0,
    ))
}

fn chi_square_sf(x: f64, dof: u32) -> f64 {
    if x == 0.0 {
        return 1.0;
    }
    statrs::function::gamma::gamma_ur(f64::from(dof) / 2.0, x / 2.0)
}

fn check_variances(a: f64, b: f64) -> Result<()> {
    if !(a > 0.0 && a.is_finite() && b > 0.0 && b.is_finite()) {
        return Err(Error::Domain(format!(
            "variances must be positive and finite, got {a} and {b}"
        )));
    }
    Ok(())
}

/// Squared crossover radius where `N(0, lo I_d)` and `N(0, hi I_d)` have
/// equal density, for `lo < hi`.
fn crossover_radius2(lo: f64, hi: f64, d: f64) -> f64 {
    d * (hi / lo).ln() / (1.0 / lo - 1.0 / hi)
}

/// Overlapping coefficient of `N(0, a)` and `N(0, b)`.
pub fn overlap_same_mean_1d(sigma2_a: f64, sigma2_b: f64) -> Result<f64> {
    check_variances(sigma2_a, sigma2_b)?;
    if sigma2_a == sigma2_b {
        return Ok(1.0);
    }
    let (lo, hi) = (sigma2_a.min(sigma2_b), sigma2_a.max(sigma2_b));
    let x = crossover_radius2(lo, hi, 1.0).sqrt();
    // Inside |t| < x the wider density is smaller, outside the narrower one.
    let inner = libm::erf(x / (2.0 * hi).sqrt());
    let outer = libm::erfc(x / (2.0 * lo).sqrt());
    Ok(inner + outer)
}

/// Overlapping coefficient of `N(0, a I_d)` and `N(0, b I_d)`.
pub fn overlap_same_mean_isotropic(sigma2_a: f64, sigma2_b: f64, dimension: u32) -> Result<f64> {
    check_variances(sigma2_a, sigma2_b)?;
    if dimension == 0 {
        return Err(Error::Domain("dimension must be at least 1".into()));
    }
    if sigma2_a == sigma2_b {
        return Ok(1.0);
    }
    let (lo, hi) = (sigma2_a.min(sigma2_b), sigma2_a.max(sigma2_b));
    let r2 = crossover_radius2(lo, hi, f64::from(dimension));
    Ok(chi_square_cdf(r2 / hi, dimension)? + chi_square_sf(r2 / lo, dimension))
}

/// `KL(N(0, a I_d) || N(0, b I_d))` in nats.
pub fn kl_same_mean(sigma2_a: f64, sigma2_b: f64, dimension: u32) -> Result<f64> {
    check_variances(sigma2_a, sigma2_b)?;
    let ratio = sigma2_a / sigma2_b;
    Ok(0.5 * f64::from(dimension) * (ratio - 1.0 - ratio.ln()))
}

/// Monte Carlo estimate with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub samples: u64,
}

impl McEstimate {
    fn from_moments(sum: f64, sum_sq: f64, samples: u64) -> Self {
        let n = samples as f64;
        let mean = sum / n;
        let var = if samples > 1 {
            ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0)
        } else {
            0.0
        };
        McEstimate {
            estimate: mean,
            std_error: (var / n).sqrt(),
            samples,
        }
    }
}

/// Estimates `∫ min(p, q)` by sampling the mixture `(p + q) / 2` and
/// averaging `2 min(p, q) / (p + q)`.
pub fn overlap_monte_carlo<R: Rng + ?Sized>(
    sigma2_a: f64,
    sigma2_b: f64,
    dimension: u32,
    samples: u64,
    rng: &mut R,
) -> Result<McEstimate> {
    check_variances(sigma2_a, sigma2_b)?;
    if samples == 0 || dimension == 0 {
        return Err(Error::Domain(
            "samples and dimension must be positive".into(),
        ));
    }
    let d = f64::from(dimension);
    let half_log_ratio = 0.5 * d * (sigma2_a / sigma2_b).ln();
    let half_prec_diff = 0.5 * (1.0 / sigma2_a - 1.0 / sigma2_b);
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..samples {
        let s2 = if rng.random::<bool>() {
            sigma2_a
        } else {
            sigma2_b
        };
        let r2: f64 = (0..dimension)
            .map(|_| {
                let z: f64 = rng.sample(StandardNormal);
                z * z * s2
            })
            .sum();
        // log p - log q
        let diff = -half_log_ratio - r2 * half_prec_diff;
        let v = 2.0 / (1.0 + diff.abs().exp());
        sum += v;
        sum_sq += v * v;
    }
    Ok(McEstimate::from_moments(sum, sum_sq, samples))
}

/// Like [`overlap_monte_carlo`] but for equal-weight Gaussian mixtures
/// centred on `means` (e.g. a codeword constellation), with isotropic
/// component variances `a` and `b`.
pub fn overlap_monte_carlo_mixture<R: Rng + ?Sized>(
    means: &[Vec<f64>],
    sigma2_a: f64,
    sigma2_b: f64,
    samples: u64,
    rng: &mut R,
) -> Result<McEstimate> {
    check_variances(sigma2_a, sigma2_b)?;
    let d = means.first().map(Vec::len).unwrap_or(0);
    if samples == 0 || d == 0 || means.iter().any(|m| m.len() != d) {
        return Err(Error::Domain(
            "need samples and equal-length non-empty means".into(),
        ));
    }
    let log_mix = |x: &[f64], s2: f64| -> f64 {
        let logs: Vec<f64> = means
            .iter()
            .map(|mu| {
                let r2: f64 = mu.iter().zip(x).map(|(m, v)| (v - m) * (v - m)).sum();
                -0.5 * d as f64 * (LN_2PI + s2.ln()) - 0.5 * r2 / s2
            })
            .collect();
        let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        max + (logs.iter().map(|l| (l - max).exp()).sum::<f64>() / means.len() as f64).ln()
    };
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    let mut x = vec![0.0; d];
    for _ in 0..samples {
        let s2 = if rng.random::<bool>() {
            sigma2_a
        } else {
            sigma2_b
        };
        let mu = &means[rng.random_range(0..means.len())];
        for (xi, m) in x.iter_mut().zip(mu) {
            *xi = m + s2.sqrt() * rng.sample::<f64, _>(StandardNormal);
        }
        let diff = log_mix(&x, sigma2_a) - log_mix(&x, sigma2_b);
        let v = 2.0 / (1.0 + diff.abs().exp());
        sum += v;
        sum_sq += v * v;
    }
    Ok(McEstimate::from_moments(sum, sum_sq, samples))
}

/// Shift between a training and a test received-signal distribution.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OverlapResult {
    pub overlap: f64,
    /// `KL(train || test)`.
    pub kl_nats: f64,
    pub sigma2_train: f64,
    pub sigma2_test: f64,
    pub dimension: u32,
}

impl OverlapResult {
    pub fn compute(sigma2_train: f64, sigma2_test: f64, dimension: u32) -> Result<Self> {
        let overlap = if dimension == 1 {
            overlap_same_mean_1d(sigma2_train, sigma2_test)?
        } else {
            overlap_same_mean_isotropic(sigma2_train, sigma2_test, dimension)?
        };
        Ok(OverlapResult {
            overlap,
            kl_nats: kl_same_mean(sigma2_train, sigma2_test, dimension)?,
            sigma2_train,
            sigma2_test,
            dimension,
        })
    }
}
