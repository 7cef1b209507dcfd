//! Brute-force reference computations for tiny instances.
//!
//! Everything here works straight from the definitions (explicit generator
//! matrices, exhaustive enumeration, log-sum-exp over candidate words) and
//! shares no code with the fast decoders beyond the bit-likelihood helper.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use thiserror::Error;

use crate::gf2lin::{log2_exact, mat_vec_mul, transform_matrix, BinVector, Gf2Error, KernelMatrix};
use crate::polar::{bit_log_prob, llr_from_log_weights, log_add, PolarError, PolarSpec, ScDecoder, SoftVector};

pub const POSTERIOR_MAX_N: usize = 16;
pub const STEP1_MAX_T: usize = 8;
pub const MAP_MAX_ACTIVE: usize = 16;
pub const MC_MIN_SAMPLES: usize = 10_000;
/// Empirical means above this are reported as `+INF`.
pub const MC_MEAN_CAP: f64 = 1e4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error(transparent)]
    Gf2(#[from] Gf2Error),
    #[error(transparent)]
    Polar(#[from] PolarError),
    #[error("{what} = {got} exceeds the oracle limit {max}")]
    TooLarge { what: &'static str, got: usize, max: usize },
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("at least {min} samples required, got {got}")]
    TooFewSamples { min: usize, got: usize },
    #[error("invalid mean {0}")]
    InvalidMean(f64),
}

fn too_large(what: &'static str, got: usize, max: usize) -> Result<(), OracleError> {
    if got > max {
        Err(OracleError::TooLarge { what, got, max })
    } else {
        Ok(())
    }
}

fn word_log_likelihood(x: &BinVector, llr: &[f64]) -> f64 {
    x.as_slice().iter().zip(llr).map(|(&b, &l)| bit_log_prob(l, b)).sum()
}

/// Exact LLR of `u[i]`, `i = prefix.len()`, given the channel LLRs and the
/// true prefix, marginalizing uniformly over `u[i+1..N]`.
pub fn bit_channel_posteriors(llr: &[f64], prefix: &[u8]) -> Result<f64, OracleError> {
    let n = llr.len();
    too_large("N", n, POSTERIOR_MAX_N)?;
    let g = transform_matrix(n)?;
    let i = prefix.len();
    if i >= n {
        return Err(OracleError::LengthMismatch { expected: n - 1, got: i });
    }
    let free = n - i - 1;
    let mut lse = [f64::NEG_INFINITY; 2];
    for bit in 0..2u8 {
        for tail in 0u32..(1 << free) {
            let mut u = prefix.to_vec();
            u.push(bit);
            u.extend((0..free).map(|k| ((tail >> k) & 1) as u8));
            let x = mat_vec_mul(&BinVector::from_bits(u)?, &g)?;
            lse[bit as usize] = log_add(lse[bit as usize], word_log_likelihood(&x, llr));
        }
    }
    Ok(llr_from_log_weights(lse[0], lse[1]))
}

/// Exact LLR of `z_s` at one coded position. `llrs[r]` is the x-domain LLR
/// of block `r` and `known[r]` a known z-value (later decoded blocks or
/// shortening zeros); all other z-values are marginalized uniformly.
/// Transmitted bits are `x = z · R`.
pub fn step1_marginal(kernel: &KernelMatrix, llrs: &[f64], known: &[Option<u8>], s: usize) -> Result<f64, OracleError> {
    let t = llrs.len();
    too_large("t", t, STEP1_MAX_T)?;
    if kernel.size() < t || known.len() != t {
        return Err(OracleError::LengthMismatch {
            expected: t,
            got: kernel.size().min(known.len()),
        });
    }
    if s >= t {
        return Err(OracleError::LengthMismatch { expected: t, got: s });
    }
    let r = kernel.matrix().leading(t, t)?;
    let mut lse = [f64::NEG_INFINITY; 2];
    for word in 0u32..(1 << t) {
        let z: Vec<u8> = (0..t).map(|k| ((word >> k) & 1) as u8).collect();
        if known.iter().zip(&z).any(|(k, &b)| matches!(k, Some(v) if *v != b)) {
            continue;
        }
        let x = mat_vec_mul(&BinVector::from_bits(z.clone())?, &r)?;
        let ll = word_log_likelihood(&x, llrs);
        lse[z[s] as usize] = log_add(lse[z[s] as usize], ll);
    }
    Ok(llr_from_log_weights(lse[0], lse[1]))
}

/// Exhaustive block-MAP decoding: the full u-vector of the most likely data
/// word (lowest data word index on ties). Known bits may only be fixed.
pub fn map_decode(llr: &[f64], spec: &PolarSpec) -> Result<BinVector, OracleError> {
    let n = spec.len();
    if llr.len() != n {
        return Err(OracleError::LengthMismatch { expected: n, got: llr.len() });
    }
    let k = spec.active_count();
    too_large("active bits", k, MAP_MAX_ACTIVE)?;
    log2_exact(n)?;
    let g = transform_matrix(n)?;
    let mut best: Option<(f64, BinVector)> = None;
    for word in 0u32..(1 << k) {
        let data: Vec<u8> = (0..k).map(|b| ((word >> (k - 1 - b)) & 1) as u8).collect();
        let u = spec.place(&data, &[])?;
        let ll = word_log_likelihood(&mat_vec_mul(&u, &g)?, llr);
        if best.as_ref().is_none_or(|(b, _)| ll > *b) {
            best = Some((ll, u));
        }
    }
    Ok(best.expect("at least one candidate").1)
}

/// Transform whose output LLR means are estimated by [`mc_density`].
#[derive(Debug, Clone)]
pub enum Transform {
    /// Synthesized channels of a length-`N` polar transform; output `i` is
    /// the genie-aided LLR of `u[i]`.
    Polar,
    /// Step-one LLR of block `target` for one coded position; inputs are the
    /// per-block means, `known_zero[r]` marks z-values known to be zero.
    Step1 {
        kernel: KernelMatrix,
        target: usize,
        known_zero: Vec<bool>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct McEstimate {
    pub means: Vec<f64>,
    /// Fraction of samples with a non-positive output LLR (ties count as
    /// half an error).
    pub error_rates: Vec<f64>,
}

const MC_CHUNK: usize = 4096;

fn sample_llr(rng: &mut ChaCha8Rng, mean: f64) -> f64 {
    if mean == 0.0 || mean.is_infinite() {
        return mean;
    }
    Normal::new(mean, (2.0 * mean).sqrt()).unwrap().sample(rng)
}

/// Monte-Carlo density evolution: transmits the all-zero word over
/// consistent Gaussian channels `N(m, 2m)` and averages the exact output
/// LLRs. Deterministic for a given seed.
pub fn mc_density(transform: &Transform, init_means: &[f64], samples: usize, seed: u64) -> Result<McEstimate, OracleError> {
    if samples < MC_MIN_SAMPLES {
        return Err(OracleError::TooFewSamples {
            min: MC_MIN_SAMPLES,
            got: samples,
        });
    }
    if let Some(&bad) = init_means.iter().find(|m| m.is_nan() || **m < 0.0) {
        return Err(OracleError::InvalidMean(bad));
    }
    let outputs = match transform {
        Transform::Polar => {
            log2_exact(init_means.len())?;
            init_means.len()
        }
        Transform::Step1 {
            kernel,
            target,
            known_zero,
        } => {
            let t = init_means.len();
            too_large("t", t, STEP1_MAX_T)?;
            if known_zero.len() != t || kernel.size() < t || *target >= t {
                return Err(OracleError::LengthMismatch {
                    expected: t,
                    got: known_zero.len(),
                });
            }
            1
        }
    };

    let chunks = samples.div_ceil(MC_CHUNK);
    let partial: Vec<Result<(Vec<f64>, Vec<f64>), OracleError>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let count = MC_CHUNK.min(samples - c * MC_CHUNK);
            let mut sum = vec![0.0; outputs];
            let mut err = vec![0.0; outputs];
            let mut sc = match transform {
                Transform::Polar => Some(ScDecoder::new(outputs)?),
                Transform::Step1 { .. } => None,
            };
            let zeros = BinVector::zeros(init_means.len());
            let mut input = vec![0.0; init_means.len()];
            for _ in 0..count {
                for (v, &m) in input.iter_mut().zip(init_means) {
                    *v = sample_llr(&mut rng, m);
                }
                let out = match transform {
                    Transform::Polar => sc
                        .as_mut()
                        .unwrap()
                        .genie_bit_llrs(&SoftVector::new(input.clone()).unwrap(), &zeros)?,
                    Transform::Step1 {
                        kernel,
                        target,
                        known_zero,
                    } => {
                        let known: Vec<Option<u8>> = known_zero.iter().map(|&k| k.then_some(0)).collect();
                        vec![step1_marginal(kernel, &input, &known, *target)?]
                    }
                };
                for (k, &l) in out.iter().enumerate() {
                    sum[k] += l;
                    err[k] += if l < 0.0 {
                        1.0
                    } else if l == 0.0 {
                        0.5
                    } else {
                        0.0
                    };
                }
            }
            Ok((sum, err))
        })
        .collect();

    let mut sum = vec![0.0; outputs];
    let mut err = vec![0.0; outputs];
    for p in partial {
        let (s, e) = p?;
        for k in 0..outputs {
            sum[k] += s[k];
            err[k] += e[k];
        }
    }
    let n = samples as f64;
    Ok(McEstimate {
        means: sum
            .iter()
            .map(|&s| {
                let m = s / n;
                if m > MC_MEAN_CAP || m.is_nan() {
                    f64::INFINITY
                } else {
                    m
                }
            })
            .collect(),
        error_rates: err.iter().map(|&e| e / n).collect(),
    })
}
