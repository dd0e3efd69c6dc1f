//! Classical baselines: the (7,4) Hamming code over BPSK with hard-decision
//! syndrome decoding and soft maximum-likelihood decoding, uncoded BPSK, and
//! closed-form block error rates.
//!
//! The code is systematic, `G = [I4 | P]`, with
//!
//! ```text
//!        p0 p1 p2
//!   m0 [  1  1  0 ]
//!   m1 [  1  0  1 ]
//!   m2 [  0  1  1 ]
//!   m3 [  1  1  1 ]
//! ```
//!
//! and `H = [P^T | I3]`. Messages are indexed `0..16` with `m0` as the most
//! significant bit, so message 8 is `1000`.

use std::sync::OnceLock;

use crate::channel::Rate;

pub type Bit = u8;

pub const HAMMING_K: usize = 4;
pub const HAMMING_N: usize = 7;

/// Parity part of the systematic generator matrix.
pub const PARITY: [[Bit; 3]; 4] = [[1, 1, 0], [1, 0, 1], [0, 1, 1], [1, 1, 1]];

/// The (7,4) code: generator, parity-check matrix and full codebook.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HammingCode {
    pub generator: [[Bit; 7]; 4],
    pub parity_check: [[Bit; 7]; 3],
    pub codebook: [[Bit; 7]; 16],
}

impl HammingCode {
    pub fn new() -> Self {
        let mut generator = [[0; 7]; 4];
        for (i, row) in generator.iter_mut().enumerate() {
            row[i] = 1;
            row[4..].copy_from_slice(&PARITY[i]);
        }
        let mut parity_check = [[0; 7]; 3];
        for (j, row) in parity_check.iter_mut().enumerate() {
            for i in 0..4 {
                row[i] = PARITY[i][j];
            }
            row[4 + j] = 1;
        }
        let mut codebook = [[0; 7]; 16];
        for (m, cw) in codebook.iter_mut().enumerate() {
            *cw = hamming_encode(&message_bits(m));
        }
        HammingCode {
            generator,
            parity_check,
            codebook,
        }
    }

    pub fn syndrome(&self, word: &[Bit; 7]) -> [Bit; 3] {
        let mut s = [0; 3];
        for (j, row) in self.parity_check.iter().enumerate() {
            s[j] = row.iter().zip(word).fold(0, |acc, (h, b)| acc ^ (h & b));
        }
        s
    }
}

impl Default for HammingCode {
    fn default() -> Self {
        Self::new()
    }
}

fn code() -> &'static HammingCode {
    static CODE: OnceLock<HammingCode> = OnceLock::new();
    CODE.get_or_init(HammingCode::new)
}

/// BPSK images of the 16 codewords.
fn bpsk_codebook() -> &'static [[f64; 7]; 16] {
    static BOOK: OnceLock<[[f64; 7]; 16]> = OnceLock::new();
    BOOK.get_or_init(|| {
        let mut book = [[0.0; 7]; 16];
        for (m, c) in book.iter_mut().enumerate() {
            for (s, &b) in c.iter_mut().zip(&code().codebook[m]) {
                *s = bpsk_symbol(b);
            }
        }
        book
    })
}

/// Four message bits, most significant first.
pub fn message_bits(message: usize) -> [Bit; 4] {
    assert!(message < 16, "message {message} out of range");
    let mut bits = [0; 4];
    for (i, b) in bits.iter_mut().enumerate() {
        *b = ((message >> (3 - i)) & 1) as Bit;
    }
    bits
}

pub fn message_index(bits: &[Bit]) -> usize {
    bits.iter().fold(0, |acc, &b| (acc << 1) | b as usize)
}

pub fn hamming_encode(bits: &[Bit; 4]) -> [Bit; 7] {
    let mut cw = [0; 7];
    cw[..4].copy_from_slice(bits);
    for j in 0..3 {
        cw[4 + j] = (0..4).fold(0, |acc, i| acc ^ (bits[i] & PARITY[i][j]));
    }
    cw
}

#[inline]
fn bpsk_symbol(bit: Bit) -> f64 {
    if bit == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `0 -> +1`, `1 -> -1`.
pub fn bpsk_map(bits: &[Bit]) -> Vec<f64> {
    bits.iter().map(|&b| bpsk_symbol(b)).collect()
}

/// Sign slicer; zero maps to bit 0.
pub fn bpsk_demap(values: &[f64]) -> Vec<Bit> {
    values.iter().map(|&v| u8::from(v < 0.0)).collect()
}

/// Sign-slices `y`, corrects at most one bit from the syndrome and returns
/// the systematic part.
pub fn hamming_hard_decode(y: &[f64; 7]) -> [Bit; 4] {
    let mut word = [0; 7];
    for (b, &v) in word.iter_mut().zip(y) {
        *b = u8::from(v < 0.0);
    }
    let code = code();
    let s = code.syndrome(&word);
    if s != [0, 0, 0] {
        // The syndrome equals the column of H at the error position.
        if let Some(pos) = (0..7).find(|&i| (0..3).all(|j| code.parity_check[j][i] == s[j])) {
            word[pos] ^= 1;
        }
    }
    let mut bits = [0; 4];
    bits.copy_from_slice(&word[..4]);
    bits
}

/// Index of the BPSK codeword closest to `y`, lowest index on ties.
pub fn hamming_mld_index(y: &[f64]) -> usize {
    // All BPSK codewords have the same energy, so minimum distance is
    // maximum correlation.
    let mut best = 0;
    let mut best_corr = f64::NEG_INFINITY;
    for (m, c) in bpsk_codebook().iter().enumerate() {
        let corr: f64 = c.iter().zip(y).map(|(a, b)| a * b).sum();
        if corr > best_corr {
            best_corr = corr;
            best = m;
        }
    }
    best
}

pub fn hamming_mld_decode(y: &[f64; 7]) -> [Bit; 4] {
    message_bits(hamming_mld_index(y))
}

/// BPSK image of the codeword for `message`.
pub fn hamming_bpsk_codeword(message: usize) -> [f64; 7] {
    bpsk_codebook()[message]
}

/// Standard normal upper tail probability.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// Uncoded BPSK bit error probability at rate `rate`, `Q(sqrt(2 R Eb/N0))`.
pub fn bpsk_bit_error_probability(ebn0_db: f64, rate: f64) -> f64 {
    let ebn0 = 10f64.powf(ebn0_db / 10.0);
    q_function((2.0 * rate * ebn0).sqrt())
}

/// Block error probability of hard-decision Hamming(7,4) given the channel
/// bit error probability: two or more of seven bits in error.
pub fn hamming_hard_bler_from_p(p: f64) -> f64 {
    // Summing the failing terms directly avoids the cancellation in
    // 1 - (1-p)^7 - 7p(1-p)^6 at small p.
    const BINOM: [f64; 8] = [1.0, 7.0, 21.0, 35.0, 35.0, 21.0, 7.0, 1.0];
    (2..=7)
        .map(|j| BINOM[j] * p.powi(j as i32) * (1.0 - p).powi(7 - j as i32))
        .sum()
}

pub fn hamming_hard_bler_closed_form(ebn0_db: f64) -> f64 {
    hamming_hard_bler_from_p(bpsk_bit_error_probability(
        ebn0_db,
        Rate::HAMMING_7_4.value(),
    ))
}

/// Uncoded `k`-bit BPSK block error rate at matched Eb.
pub fn uncoded_bler_closed_form(ebn0_db: f64, k: u32) -> f64 {
    let p = bpsk_bit_error_probability(ebn0_db, 1.0);
    -((k as f64) * (-p).ln_1p()).exp_m1()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xor(a: &[Bit], b: &[Bit]) -> Vec<Bit> {
        a.iter().zip(b).map(|(x, y)| x ^ y).collect()
    }

    #[test]
    fn generator_is_orthogonal_to_parity_check() {
        let code = HammingCode::new();
        for g in &code.generator {
            assert_eq!(code.syndrome(g), [0, 0, 0]);
        }
    }

    #[test]
    fn golden_first_row() {
        let code = HammingCode::new();
        assert_eq!(hamming_encode(&[1, 0, 0, 0]), [1, 0, 0, 0, 1, 1, 0]);
        assert_eq!(hamming_encode(&[1, 0, 0, 0]), code.generator[0]);
        assert_eq!(hamming_encode(&[0, 0, 0, 0]), [0; 7]);
    }

    #[test]
    fn encoding_is_linear() {
        for a in 0..16 {
            for b in 0..16 {
                let sum = message_bits(a ^ b);
                let lhs = hamming_encode(&sum);
                let rhs = xor(
                    &hamming_encode(&message_bits(a)),
                    &hamming_encode(&message_bits(b)),
                );
                assert_eq!(lhs.to_vec(), rhs);
            }
        }
    }

    #[test]
    fn minimum_distance_is_three() {
        let code = HammingCode::new();
        let mut dmin = usize::MAX;
        for a in 0..16 {
            for b in 0..16 {
                if a != b {
                    let d = xor(&code.codebook[a], &code.codebook[b])
                        .iter()
                        .filter(|&&x| x == 1)
                        .count();
                    dmin = dmin.min(d);
                }
            }
        }
        assert_eq!(dmin, 3);
        assert_eq!(code.codebook.len(), 16);
    }

    #[test]
    fn bpsk_examples() {
        assert_eq!(bpsk_map(&[0, 1, 0, 1]), vec![1.0, -1.0, 1.0, -1.0]);
        assert_eq!(bpsk_demap(&[0.0]), vec![0]);
        assert_eq!(bpsk_demap(&[-0.0, -1e-300, 3.0]), vec![0, 1, 0]);
        for m in 0..128usize {
            let bits: Vec<Bit> = (0..7).map(|i| ((m >> i) & 1) as Bit).collect();
            assert_eq!(bpsk_demap(&bpsk_map(&bits)), bits);
        }
    }

    #[test]
    fn hard_decoder_corrects_all_single_errors() {
        for m in 0..16 {
            let bits = message_bits(m);
            let clean: [f64; 7] = bpsk_map(&hamming_encode(&bits)).try_into().unwrap();
            assert_eq!(hamming_hard_decode(&clean), bits);
            for pos in 0..7 {
                let mut y = clean;
                y[pos] = -y[pos];
                assert_eq!(hamming_hard_decode(&y), bits, "m={m} pos={pos}");
            }
        }
    }

    #[test]
    fn hard_decoder_fails_on_some_double_error() {
        // A perfect code maps every double error to a wrong codeword.
        let mut failures = 0;
        for m in 0..16 {
            let bits = message_bits(m);
            let clean: [f64; 7] = bpsk_map(&hamming_encode(&bits)).try_into().unwrap();
            for i in 0..7 {
                for j in i + 1..7 {
                    let mut y = clean;
                    y[i] = -y[i];
                    y[j] = -y[j];
                    if hamming_hard_decode(&y) != bits {
                        failures += 1;
                    }
                }
            }
        }
        assert!(failures > 0);
        assert_eq!(failures, 16 * 21);
    }

    #[test]
    fn mld_examples() {
        for m in 0..16 {
            assert_eq!(hamming_mld_index(&hamming_bpsk_codeword(m)), m);
        }
        let code = HammingCode::new();
        for a in 0..16 {
            for b in a + 1..16 {
                let d = xor(&code.codebook[a], &code.codebook[b])
                    .iter()
                    .filter(|&&x| x == 1)
                    .count();
                if d == 3 {
                    let ca = hamming_bpsk_codeword(a);
                    let cb = hamming_bpsk_codeword(b);
                    let mid: Vec<f64> = ca.iter().zip(&cb).map(|(x, y)| (x + y) / 2.0).collect();
                    assert_eq!(hamming_mld_index(&mid), a);
                }
            }
        }
    }

    #[test]
    fn q_function_values() {
        assert_eq!(q_function(0.0), 0.5);
        for i in -80..=80 {
            let x = i as f64 / 10.0;
            assert!((q_function(x) + q_function(-x) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn closed_form_limits() {
        assert_eq!(hamming_hard_bler_closed_form(f64::INFINITY), 0.0);
        assert_eq!(hamming_hard_bler_from_p(0.5), 0.9375);
        let p: f64 = 1e-3;
        let textbook = 1.0 - (1.0 - p).powi(7) - 7.0 * p * (1.0 - p).powi(6);
        assert!((hamming_hard_bler_from_p(p) - textbook).abs() < 1e-12);
        let u = uncoded_bler_closed_form(4.0, 4);
        let pb = q_function((2.0 * 10f64.powf(0.4)).sqrt());
        assert!((u - (1.0 - (1.0 - pb).powi(4))).abs() < 1e-14);
    }
}
