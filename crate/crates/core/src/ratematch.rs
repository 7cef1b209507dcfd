//! Length adaptation between a mother code of length `N` and `M` transmitted
//! bits.
//!
//! * Puncturing drops coded positions `0..N-M`. `G_N` already contains the
//!   bit-reversal permutation, so this is quasi-uniform puncturing.
//! * Shortening drops the tail `M..N`. Freezing u-positions
//!   `{bitrev(j) : j ≥ M}` forces those coded bits to zero: coded bit `j`
//!   of `x = u·G_N` depends only on `u_i` with `j ⊆ bitrev(i)` (bitwise), and
//!   every such `i` has `bitrev(i) ≥ j ≥ M`.
//! * Repetition appends copies of coded positions `0, 1, …` (cyclically when
//!   `M > 2N`).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gf2lin::{bit_reverse, log2_exact, BinVector, Gf2Error};
use crate::polar::SoftVector;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RateMatchError {
    #[error(transparent)]
    Gf2(#[from] Gf2Error),
    #[error("mode {mode:?} is inconsistent with N={mother_len}, M={tx_len}")]
    InconsistentMode {
        mode: RateMatchMode,
        mother_len: usize,
        tx_len: usize,
    },
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RateMatchMode {
    None,
    Repeat,
    Puncture,
    Shorten,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RateMatchPlan {
    mode: RateMatchMode,
    mother_len: usize,
    tx_len: usize,
    affected: Vec<usize>,
    forced_frozen_u: Vec<usize>,
}

pub fn make_plan(mother_len: usize, tx_len: usize, mode: RateMatchMode) -> Result<RateMatchPlan, RateMatchError> {
    let bits = log2_exact(mother_len)?;
    let consistent = match mode {
        RateMatchMode::None => tx_len == mother_len,
        RateMatchMode::Repeat => tx_len > mother_len,
        RateMatchMode::Puncture | RateMatchMode::Shorten => tx_len < mother_len && tx_len > 0,
    };
    if !consistent {
        return Err(RateMatchError::InconsistentMode {
            mode,
            mother_len,
            tx_len,
        });
    }
    let (affected, forced_frozen_u) = match mode {
        RateMatchMode::None => (vec![], vec![]),
        RateMatchMode::Repeat => ((0..tx_len - mother_len).map(|r| r % mother_len).collect(), vec![]),
        RateMatchMode::Puncture => ((0..mother_len - tx_len).collect(), vec![]),
        RateMatchMode::Shorten => {
            let tail: Vec<usize> = (tx_len..mother_len).collect();
            let mut frozen: Vec<usize> = tail.iter().map(|&j| bit_reverse(j, bits)).collect();
            frozen.sort_unstable();
            (tail, frozen)
        }
    };
    Ok(RateMatchPlan {
        mode,
        mother_len,
        tx_len,
        affected,
        forced_frozen_u,
    })
}

impl RateMatchPlan {
    pub fn mode(&self) -> RateMatchMode {
        self.mode
    }

    pub fn mother_len(&self) -> usize {
        self.mother_len
    }

    pub fn tx_len(&self) -> usize {
        self.tx_len
    }

    /// Punctured or shortened coded positions, or the source position of each
    /// repeated bit in transmission order.
    pub fn affected(&self) -> &[usize] {
        &self.affected
    }

    /// u-positions that must be frozen so the shortened coded bits are zero.
    pub fn forced_frozen_u(&self) -> &[usize] {
        &self.forced_frozen_u
    }

    /// Coded positions whose value is known to be zero before masking.
    pub fn known_zero(&self) -> &[usize] {
        if self.mode == RateMatchMode::Shorten {
            &self.affected
        } else {
            &[]
        }
    }

    pub fn apply(&self, x: &BinVector) -> Result<BinVector, RateMatchError> {
        if x.len() != self.mother_len {
            return Err(RateMatchError::LengthMismatch {
                expected: self.mother_len,
                got: x.len(),
            });
        }
        let bits = x.as_slice();
        let out: Vec<u8> = match self.mode {
            RateMatchMode::None => bits.to_vec(),
            RateMatchMode::Repeat => bits.iter().copied().chain(self.affected.iter().map(|&j| bits[j])).collect(),
            RateMatchMode::Puncture => bits[self.mother_len - self.tx_len..].to_vec(),
            RateMatchMode::Shorten => bits[..self.tx_len].to_vec(),
        };
        Ok(BinVector::from_bits(out)?)
    }

    /// Maps received soft values back onto the mother code. Untransmitted
    /// positions get LLR 0, including shortened ones: the zero knowledge
    /// holds before masking and is applied by the caller.
    pub fn de_rate_match(&self, received: &SoftVector) -> Result<SoftVector, RateMatchError> {
        if received.len() != self.tx_len {
            return Err(RateMatchError::LengthMismatch {
                expected: self.tx_len,
                got: received.len(),
            });
        }
        let r = received.as_slice();
        let mut out = vec![0.0; self.mother_len];
        match self.mode {
            RateMatchMode::None => out.copy_from_slice(r),
            RateMatchMode::Repeat => {
                out.copy_from_slice(&r[..self.mother_len]);
                for (k, &j) in self.affected.iter().enumerate() {
                    out[j] += r[self.mother_len + k];
                }
            }
            RateMatchMode::Puncture => out[self.mother_len - self.tx_len..].copy_from_slice(r),
            RateMatchMode::Shorten => out[..self.tx_len].copy_from_slice(r),
        }
        Ok(SoftVector::new(out).expect("received values are NaN free"))
    }

    /// Per coded position LLR means for a channel of mean `channel_mean`:
    /// transmitted copies add up, untransmitted positions are zero.
    pub fn coded_means(&self, channel_mean: f64) -> Vec<f64> {
        let mut copies = vec![0usize; self.mother_len];
        match self.mode {
            RateMatchMode::None => copies.fill(1),
            RateMatchMode::Repeat => {
                copies.fill(1);
                for &j in &self.affected {
                    copies[j] += 1;
                }
            }
            RateMatchMode::Puncture => copies[self.mother_len - self.tx_len..].fill(1),
            RateMatchMode::Shorten => copies[..self.tx_len].fill(1),
        }
        copies.iter().map(|&c| c as f64 * channel_mean).collect()
    }
}
