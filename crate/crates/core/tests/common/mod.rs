#![allow(dead_code)]

/// Composite Simpson rule on [a, b] with `n` (even) intervals.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// `KL(N(0, a) || N(0, b))` by quadrature.
pub fn kl_quadrature(a: f64, b: f64) -> f64 {
    let log_pdf = |x: f64, s: f64| -x * x / (2.0 * s) - 0.5 * (2.0 * std::f64::consts::PI * s).ln();
    let w = 40.0 * a.sqrt();
    simpson(
        |x| log_pdf(x, a).exp() * (log_pdf(x, a) - log_pdf(x, b)),
        -w,
        w,
        400_000,
    )
}

pub const KL_CASES: [(f64, f64); 10] = [
    (1.0, 2.0),
    (2.0, 1.0),
    (0.1, 0.5),
    (0.5, 0.1),
    (1.0, 1.0),
    (0.25, 0.3),
    (3.0, 0.7),
    (0.05, 1.6),
    (1e-2, 1e-3),
    (0.429, 0.0867),
];

/// Variance ratios and dimensions of the overlap cross-check grid. Overlaps
/// on it stay above 3e-3; far smaller values are rare events the mixture
/// sampler cannot resolve at 10^6 samples.
pub const OVERLAP_RATIOS: [f64; 5] = [1.5, 2.0, 4.0, 10.0, 30.0];
pub const OVERLAP_DIMS: [u32; 5] = [1, 2, 3, 5, 7];
