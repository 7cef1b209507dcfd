//! BPSK over AWGN with reproducible per-frame noise.
//!
//! Randomness is keyed by `(seed, frame, lane)`: the frame selects a ChaCha
//! stream and the lane a disjoint region of its keystream, so any frame can
//! be regenerated without touching the others.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gf2lin::BinVector;
use crate::polar::SoftVector;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("noise variance must be positive and finite, got {0}")]
    BadVariance(f64),
}

/// Noise variance per real dimension for unit-energy BPSK.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    sigma2: f64,
}

impl ChannelParams {
    pub fn from_variance(sigma2: f64) -> Result<Self, ChannelError> {
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(ChannelError::BadVariance(sigma2));
        }
        Ok(Self { sigma2 })
    }

    /// `σ² = 1 / (2 · Es/N0)`.
    pub fn from_es_n0_db(es_n0_db: f64) -> Result<Self, ChannelError> {
        Self::from_variance(1.0 / (2.0 * db_to_linear(es_n0_db)))
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn es_n0_db(&self) -> f64 {
        linear_to_db(1.0 / (2.0 * self.sigma2))
    }

    /// Mean of the channel LLR for a transmitted zero, `2/σ²`.
    pub fn llr_mean(&self) -> f64 {
        2.0 / self.sigma2
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// `Eb/N0 = Es/N0 / rate` in dB.
pub fn eb_n0_db(es_n0_db: f64, rate: f64) -> f64 {
    es_n0_db - linear_to_db(rate)
}

pub fn modulate(bits: &BinVector) -> Vec<f64> {
    bits.as_slice().iter().map(|&b| if b == 0 { 1.0 } else { -1.0 }).collect()
}

/// Generator for lane `lane` of frame `frame`. Lanes are `2^40` words apart.
pub fn frame_rng(seed: u64, frame: u64, lane: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(frame);
    rng.set_word_pos((lane as u128) << 40);
    rng
}

pub fn transmit(symbols: &[f64], params: &ChannelParams, rng: &mut impl Rng) -> Vec<f64> {
    let sigma = params.sigma2.sqrt();
    symbols
        .iter()
        .map(|&s| {
            let n: f64 = rng.sample(StandardNormal);
            s + sigma * n
        })
        .collect()
}

pub fn llr(y: &[f64], params: &ChannelParams) -> SoftVector {
    let scale = 2.0 / params.sigma2;
    SoftVector::new(y.iter().map(|&v| scale * v).collect()).expect("finite channel output")
}

/// Modulate, add noise and demodulate in one go.
pub fn bpsk_awgn_llr(bits: &BinVector, params: &ChannelParams, rng: &mut impl Rng) -> SoftVector {
    llr(&transmit(&modulate(bits), params, rng), params)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mapping_and_formula() {
        let bits = BinVector::from_bits(vec![0, 1, 0]).unwrap();
        assert_eq!(modulate(&bits), vec![1.0, -1.0, 1.0]);
        let p = ChannelParams::from_variance(1.0).unwrap();
        assert_eq!(llr(&[1.0, 0.0], &p).as_slice(), &[2.0, 0.0]);
        assert!(ChannelParams::from_variance(0.0).is_err());
        assert!(ChannelParams::from_variance(f64::NAN).is_err());
    }

    #[test]
    fn snr_conversions() {
        let p = ChannelParams::from_es_n0_db(0.0).unwrap();
        assert!((p.sigma2() - 0.5).abs() < 1e-15);
        assert!((p.es_n0_db()).abs() < 1e-12);
        assert!((p.llr_mean() - 4.0).abs() < 1e-12);
        assert!((eb_n0_db(1.0, 0.5) - (1.0 + 10.0 * 2f64.log10())).abs() < 1e-12);
    }

    #[test]
    fn high_snr_signs_follow_bits() {
        let bits = BinVector::from_bits(vec![0, 1, 1, 0, 1]).unwrap();
        let p = ChannelParams::from_variance(1e-6).unwrap();
        let l = bpsk_awgn_llr(&bits, &p, &mut frame_rng(1, 0, 0));
        for (b, v) in bits.as_slice().iter().zip(l.as_slice()) {
            assert_eq!(*b == 0, *v > 0.0);
        }
    }

    #[test]
    fn llr_moments_are_consistent() {
        let n = 1_000_000;
        let p = ChannelParams::from_variance(1.0).unwrap();
        let l = bpsk_awgn_llr(&BinVector::zeros(n), &p, &mut frame_rng(7, 3, 1));
        let mean = l.as_slice().iter().sum::<f64>() / n as f64;
        let var = l.as_slice().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
        assert!((mean - 2.0).abs() < 0.01, "{mean}");
        assert!((var / (2.0 * mean) - 1.0).abs() < 0.01, "{var}");
    }

    #[test]
    fn frames_and_lanes_are_reproducible_and_distinct() {
        let draw = |f, l| {
            let mut r = frame_rng(42, f, l);
            (0..4).map(|_| r.random::<u64>()).collect::<Vec<_>>()
        };
        assert_eq!(draw(5, 2), draw(5, 2));
        assert_ne!(draw(5, 2), draw(6, 2));
        assert_ne!(draw(5, 2), draw(5, 3));
    }
}
