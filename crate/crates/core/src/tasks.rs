//! Benchmark targets: NARMA10, delayed input, CRC remainder and Hamming(7,4).
//!
//! Every generator returns one value (or bit vector) per input step, aligned
//! so that `out[t]` depends only on `u[..=t]`. Steps without enough history
//! are dropped from the front; each function documents its offset.

use serde::{Deserialize, Serialize};

use crate::error::{ErcError, Result};

/// Rows at the start of a NARMA10 target excluded from scoring.
pub const NARMA_WARMUP: usize = 200;

/// Divergence bound for NARMA10 outputs.
pub const NARMA_BOUND: f64 = 10.0;

/// Standard NARMA10 input scaling `zeta = delta (u + mu)`.
pub const NARMA_DEFAULT_DELTA: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "snake_case")]
pub enum TaskSpec {
    Narma10 { delta: f64, mu: f64 },
    DelayMemory { tau: usize },
    Crc,
    HammingEncode,
    HammingDecode,
}

impl TaskSpec {
    pub fn binary_input(&self) -> bool {
        matches!(
            self,
            TaskSpec::Crc | TaskSpec::HammingEncode | TaskSpec::HammingDecode
        )
    }
}

/// `out[t] = y_{t+1}` for
/// `y_{t+1} = 0.3 y_t + 0.05 y_t sum_{i=0}^{9} y_{t-i} + 1.5 zeta_{t-9} zeta_t + 0.1`,
/// `zeta = delta (u + mu)`, `y_t = 0` for `t < 10`.
/// The first 10 entries are the zero initialization.
pub fn narma10_target(u: &[f64], delta: f64, mu: f64) -> Result<Vec<f64>> {
    if u.len() < 11 {
        return Err(ErcError::invalid("NARMA10 needs at least 11 inputs"));
    }
    let zeta: Vec<f64> = u.iter().map(|x| delta * (x + mu)).collect();
    let n = u.len();
    let mut y = vec![0.0; n + 1];
    for t in 9..n {
        let window: f64 = y[t - 9..=t].iter().sum();
        let next = 0.3 * y[t] + 0.05 * y[t] * window + 1.5 * zeta[t - 9] * zeta[t] + 0.1;
        if !next.is_finite() || next.abs() > NARMA_BOUND {
            return Err(ErcError::NarmaInstability {
                step: t + 1,
                delta,
                mu,
            });
        }
        y[t + 1] = next;
    }
    y.remove(0);
    Ok(y)
}

/// `out[t] = u[t + 1 - tau]`; the first `tau - 1` steps are dropped.
pub fn delay_target(u: &[f64], tau: usize) -> Result<Vec<f64>> {
    if tau == 0 || tau > u.len() {
        return Err(ErcError::invalid(format!("delay {tau} out of range")));
    }
    Ok(u[..u.len() + 1 - tau].to_vec())
}

fn check_binary(u: &[u8]) -> Result<()> {
    match u.iter().position(|&b| b > 1) {
        Some(i) => Err(ErcError::invalid(format!(
            "non-binary value {} at index {i}",
            u[i]
        ))),
        None => Ok(()),
    }
}

/// Remainder bits `[r2, r1, r0]` of the 5-bit window `u_t x^4 + ... + u_{t-4}`
/// divided by `x^3 + x + 1`. `out[i]` belongs to step `t = i + 4`.
pub fn crc_target(u: &[u8]) -> Result<Vec<[u8; 3]>> {
    check_binary(u)?;
    if u.len() < 5 {
        return Err(ErcError::invalid("CRC needs at least 5 inputs"));
    }
    Ok((4..u.len())
        .map(|t| {
            [
                u[t] ^ u[t - 2],
                u[t] ^ u[t - 1] ^ u[t - 3],
                u[t - 1] ^ u[t - 4],
            ]
        })
        .collect())
}

/// Generator matrix, rows indexed by message bit.
pub const HAMMING_G: [[u8; 7]; 4] = [
    [1, 0, 0, 0, 1, 1, 0],
    [0, 1, 0, 0, 1, 0, 1],
    [0, 0, 1, 0, 0, 1, 1],
    [0, 0, 0, 1, 1, 1, 1],
];

/// Parity-check matrix with `H G^T = 0`.
pub const HAMMING_H: [[u8; 7]; 3] = [
    [1, 1, 0, 1, 1, 0, 0],
    [1, 0, 1, 1, 0, 1, 0],
    [0, 1, 1, 1, 0, 0, 1],
];

pub fn hamming_encode(w: [u8; 4]) -> [u8; 7] {
    let mut c = [0u8; 7];
    for (i, row) in HAMMING_G.iter().enumerate() {
        if w[i] == 1 {
            for (cj, g) in c.iter_mut().zip(row) {
                *cj ^= g;
            }
        }
    }
    c
}

pub fn hamming_syndrome(v: [u8; 7]) -> [u8; 3] {
    let mut p = [0u8; 3];
    for (pi, row) in p.iter_mut().zip(HAMMING_H) {
        *pi = row.iter().zip(v).fold(0, |acc, (h, b)| acc ^ (h & b));
    }
    p
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HammingDecoder {
    /// Flips the bit whose parity-check column equals the syndrome.
    #[default]
    Syndrome,
    /// The published AND/XOR formula, evaluated literally: complemented
    /// received bits, and the second and third message bits keyed to each
    /// other's syndrome columns.
    Printed,
}

/// Corrected message bits `(w1, w2, w3, w4)`.
pub fn hamming_decode(v: [u8; 7], decoder: HammingDecoder) -> [u8; 4] {
    let [p1, p2, p3] = hamming_syndrome(v);
    let flip = |a: u8, b: u8, c: u8| (p1 == a && p2 == b && p3 == c) as u8;
    match decoder {
        HammingDecoder::Syndrome => [
            v[0] ^ flip(1, 1, 0),
            v[1] ^ flip(1, 0, 1),
            v[2] ^ flip(0, 1, 1),
            v[3] ^ flip(1, 1, 1),
        ],
        HammingDecoder::Printed => [
            (1 - v[0]) ^ flip(1, 1, 0),
            (1 - v[1]) ^ flip(0, 1, 1),
            (1 - v[2]) ^ flip(1, 0, 1),
            (1 - v[3]) ^ flip(1, 1, 1),
        ],
    }
}

/// Codeword of the window `(u_t, u_{t-1}, u_{t-2}, u_{t-3})`; `out[i]` belongs to `t = i + 3`.
pub fn hamming_encode_target(u: &[u8]) -> Result<Vec<[u8; 7]>> {
    check_binary(u)?;
    if u.len() < 4 {
        return Err(ErcError::invalid(
            "Hamming encoding needs at least 4 inputs",
        ));
    }
    Ok((3..u.len())
        .map(|t| hamming_encode([u[t], u[t - 1], u[t - 2], u[t - 3]]))
        .collect())
}

/// Decodes the window `(v_t, v_{t-1}, ..., v_{t-6})`; `out[i]` belongs to `t = i + 6`.
pub fn hamming_decode_target(v: &[u8], decoder: HammingDecoder) -> Result<Vec<[u8; 4]>> {
    check_binary(v)?;
    if v.len() < 7 {
        return Err(ErcError::invalid(
            "Hamming decoding needs at least 7 inputs",
        ));
    }
    Ok((6..v.len())
        .map(|t| {
            let mut w = [0u8; 7];
            for (i, b) in w.iter_mut().enumerate() {
                *b = v[t - i];
            }
            hamming_decode(w, decoder)
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BitAccuracy {
    pub per_bit: Vec<f64>,
    pub overall: f64,
    pub threshold: f64,
}

/// Fraction of predictions on the right side of `threshold`; one column per bit.
pub fn score_bits(
    predictions: &[Vec<f64>],
    targets: &[Vec<u8>],
    threshold: f64,
) -> Result<BitAccuracy> {
    if predictions.len() != targets.len() {
        return Err(ErcError::DimensionMismatch {
            expected: targets.len(),
            actual: predictions.len(),
        });
    }
    let mut per_bit = Vec::with_capacity(targets.len());
    let (mut hits, mut total) = (0usize, 0usize);
    for (p, t) in predictions.iter().zip(targets) {
        if p.len() != t.len() {
            return Err(ErcError::DimensionMismatch {
                expected: t.len(),
                actual: p.len(),
            });
        }
        let h = p
            .iter()
            .zip(t)
            .filter(|(&x, &b)| u8::from(x > threshold) == b)
            .count();
        per_bit.push(if t.is_empty() {
            0.0
        } else {
            h as f64 / t.len() as f64
        });
        hits += h;
        total += t.len();
    }
    Ok(BitAccuracy {
        per_bit,
        overall: if total == 0 {
            0.0
        } else {
            hits as f64 / total as f64
        },
        threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn narma_zero_input_reaches_fixed_point() {
        let y = narma10_target(&vec![0.0; 2000], 1.0, 0.0).unwrap();
        // y = 0.3 y + 0.5 y^2 + 0.1
        let fixed = (0.7 - (0.49f64 - 0.2).sqrt()) / 1.0;
        assert!((y[1999] - fixed).abs() < 1e-6);
        assert!((fixed - 0.16148).abs() < 1e-5);
        assert_eq!(y, narma10_target(&vec![0.7; 2000], 0.0, 0.0).unwrap());
    }

    #[test]
    fn narma_standard_run_is_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u: Vec<f64> = (0..10_000).map(|_| rng.random_range(0.0..1.0)).collect();
        let y = narma10_target(&u, 0.2, 0.0).unwrap();
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        assert!((0.1..=0.4).contains(&mean), "mean {mean}");
    }

    #[test]
    fn narma_instability_is_reported() {
        let err = narma10_target(&vec![1.0; 500], 3.0, 0.5).unwrap_err();
        assert!(
            matches!(err, ErcError::NarmaInstability { delta, mu, .. } if delta == 3.0 && mu == 0.5)
        );
    }

    #[test]
    fn narma_is_causal() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let u: Vec<f64> = (0..300).map(|_| rng.random_range(0.0..1.0)).collect();
        let y = narma10_target(&u, 0.2, 0.0).unwrap();
        let mut v = u.clone();
        v[150] = 0.99;
        let z = narma10_target(&v, 0.2, 0.0).unwrap();
        assert_eq!(y[..150], z[..150]);
        assert_ne!(y[150], z[150]);
    }

    #[test]
    fn delay_target_alignment() {
        assert_eq!(
            delay_target(&[1.0, 2.0, 3.0], 1).unwrap(),
            vec![1.0, 2.0, 3.0]
        );
        assert_eq!(delay_target(&[1.0, 2.0, 3.0], 2).unwrap(), vec![1.0, 2.0]);
        assert!(delay_target(&[1.0], 0).is_err());
    }

    #[test]
    fn crc_examples() {
        assert!(crc_target(&[0; 9]).unwrap().iter().all(|r| r == &[0, 0, 0]));
        // (u_t, ..., u_{t-4}) = (1, 1, 0, 0, 1)
        assert_eq!(crc_target(&[1, 0, 0, 1, 1]).unwrap(), vec![[1, 0, 0]]);
        assert!(crc_target(&[0, 1, 2, 0, 1]).is_err());
    }

    #[test]
    fn generator_and_parity_are_orthogonal() {
        for g in HAMMING_G {
            assert_eq!(hamming_syndrome(g), [0, 0, 0]);
        }
        assert_eq!(hamming_encode([1, 0, 0, 0]), [1, 0, 0, 0, 1, 1, 0]);
    }

    #[test]
    fn printed_decoder_on_zero_word() {
        assert_eq!(
            hamming_decode([0; 7], HammingDecoder::Printed),
            [1, 1, 1, 1]
        );
        assert_eq!(
            hamming_decode([0; 7], HammingDecoder::Syndrome),
            [0, 0, 0, 0]
        );
    }

    #[test]
    fn encode_and_decode_targets_align() {
        let u = [1, 0, 1, 1, 0];
        let enc = hamming_encode_target(&u).unwrap();
        assert_eq!(enc.len(), 2);
        assert_eq!(enc[0], hamming_encode([1, 1, 0, 1]));
        let v = [0, 1, 1, 0, 1, 0, 0, 1];
        let dec = hamming_decode_target(&v, HammingDecoder::Syndrome).unwrap();
        assert_eq!(dec.len(), 2);
        assert_eq!(
            dec[1],
            hamming_decode([1, 0, 0, 1, 0, 1, 1], HammingDecoder::Syndrome)
        );
    }

    #[test]
    fn score_bits_examples() {
        let t = vec![vec![1u8, 0, 1, 1]];
        let exact: Vec<Vec<f64>> = t
            .iter()
            .map(|r| r.iter().map(|&b| f64::from(b)).collect())
            .collect();
        assert_eq!(score_bits(&exact, &t, 0.5).unwrap().overall, 1.0);
        let ones = vec![vec![1u8; 4]];
        assert_eq!(
            score_bits(&[vec![0.5 - 1e-9; 4]], &ones, 0.5)
                .unwrap()
                .overall,
            0.0
        );

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p: Vec<f64> = (0..10_000).map(|_| rng.random_range(0.0..1.0)).collect();
        let b: Vec<u8> = (0..10_000).map(|_| rng.random_range(0..=1u8)).collect();
        let acc = score_bits(&[p], &[b], 0.5).unwrap().overall;
        assert!((acc - 0.5).abs() < 0.02);
    }
}
