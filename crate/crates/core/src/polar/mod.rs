//! Polar encoding and successive-cancellation (list) decoding.
//!
//! Codewords are `x = u · G_N` with `G_N = B_N · F^{⊗n}`. Internally the
//! decoders work on `y = u · F^{⊗n}`, which is `x` read in bit-reversed order.

mod crc;
mod llr;
mod sc;
mod scl;

pub use crc::{crc16, crc_attach, crc_check, select_by_crc, CrcConfig, CrcSelection, CRC_WIDTH};
pub use llr::{
    bit_log_prob, boxplus, decision_penalty, g_update, hard_decision, llr_add, llr_from_log_weights,
    log_add, softplus, NanLlr, SoftVector,
};
pub use sc::{sc_decode, ScDecoder};
pub use scl::{scl_decode, DecodePath, ListCandidate, ListDecoder, ListSeed};

use thiserror::Error;

use crate::gf2lin::{bit_reverse, log2_exact, BinVector, Gf2Error};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolarError {
    #[error(transparent)]
    Gf2(#[from] Gf2Error),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("known bit at {position} refers to decision {source_index}, which is not available yet")]
    BadKnownSource { position: usize, source_index: usize },
    #[error("active position {0} out of range")]
    PositionOutOfRange(usize),
    #[error("duplicate active position {0}")]
    DuplicatePosition(usize),
    #[error("list size must be at least 1")]
    EmptyList,
    #[error("no decoding seeds supplied")]
    NoSeeds,
}

/// Where a known (non-active) bit takes its value from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KnownValue {
    Fixed(u8),
    /// Index into the path's decisions: first the seed history, then the
    /// current block's earlier decisions.
    Decision(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BitRole {
    Active,
    Frozen,
    Known(KnownValue),
}

/// One polar code: mother length and the role of every u-position.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarSpec {
    roles: Vec<BitRole>,
    active_count: usize,
}

impl PolarSpec {
    pub fn new(roles: Vec<BitRole>) -> Result<Self, PolarError> {
        log2_exact(roles.len())?;
        let active_count = roles.iter().filter(|r| **r == BitRole::Active).count();
        Ok(Self { roles, active_count })
    }

    /// Active positions given, everything else frozen to zero.
    pub fn from_active(n: usize, active: &[usize]) -> Result<Self, PolarError> {
        log2_exact(n)?;
        let mut roles = vec![BitRole::Frozen; n];
        for &i in active {
            if i >= n {
                return Err(PolarError::PositionOutOfRange(i));
            }
            if roles[i] == BitRole::Active {
                return Err(PolarError::DuplicatePosition(i));
            }
            roles[i] = BitRole::Active;
        }
        Self::new(roles)
    }

    pub fn len(&self) -> usize {
        self.roles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roles.is_empty()
    }

    pub fn active_count(&self) -> usize {
        self.active_count
    }

    pub fn role(&self, i: usize) -> BitRole {
        self.roles[i]
    }

    pub fn roles(&self) -> &[BitRole] {
        &self.roles
    }

    pub fn active_positions(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.roles[i] == BitRole::Active).collect()
    }

    /// Places `data` on the active positions in ascending order; frozen bits
    /// are zero and known bits take their fixed value (history references
    /// resolve against `history` and earlier positions of the result).
    pub fn place(&self, data: &[u8], history: &[u8]) -> Result<BinVector, PolarError> {
        if data.len() != self.active_count {
            return Err(PolarError::LengthMismatch {
                expected: self.active_count,
                got: data.len(),
            });
        }
        let mut u = vec![0u8; self.len()];
        let mut next = data.iter();
        for i in 0..self.len() {
            u[i] = match self.roles[i] {
                BitRole::Active => *next.next().unwrap(),
                BitRole::Frozen => 0,
                BitRole::Known(KnownValue::Fixed(v)) => v,
                BitRole::Known(KnownValue::Decision(idx)) => {
                    resolve_known(idx, i, history, &u).ok_or(PolarError::BadKnownSource {
                        position: i,
                        source_index: idx,
                    })?
                }
            };
        }
        Ok(BinVector::from_bits(u)?)
    }

    /// Checks that every history reference can be resolved by the time it is
    /// needed.
    pub(crate) fn validate_sources(&self, history_len: usize) -> Result<(), PolarError> {
        for (i, role) in self.roles.iter().enumerate() {
            if let BitRole::Known(KnownValue::Decision(idx)) = *role {
                if idx >= history_len + i {
                    return Err(PolarError::BadKnownSource {
                        position: i,
                        source_index: idx,
                    });
                }
            }
        }
        Ok(())
    }
}

#[inline]
pub(crate) fn resolve_known(idx: usize, position: usize, history: &[u8], current: &[u8]) -> Option<u8> {
    if idx < history.len() {
        Some(history[idx])
    } else if idx - history.len() < position {
        Some(current[idx - history.len()])
    } else {
        None
    }
}

/// In-place butterfly for `y = u · F^{⊗n}` (natural order).
pub(crate) fn butterfly(y: &mut [u8]) {
    let n = y.len();
    let mut half = 1;
    while half < n {
        for block in (0..n).step_by(2 * half) {
            for j in block..block + half {
                y[j] ^= y[j + half];
            }
        }
        half *= 2;
    }
}

/// `x = u · G_N` in `O(N log N)`.
pub fn encode(u: &BinVector) -> Result<BinVector, PolarError> {
    let n = u.len();
    let bits = log2_exact(n)?;
    let mut y = u.as_slice().to_vec();
    butterfly(&mut y);
    let x: Vec<u8> = (0..n).map(|j| y[bit_reverse(j, bits)]).collect();
    Ok(BinVector::from_bits(x)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf2lin::{mat_vec_mul, transform_matrix};
    use proptest::prelude::*;

    #[test]
    fn encode_examples() {
        assert_eq!(encode(&BinVector::zeros(8)).unwrap(), BinVector::zeros(8));
        let u = BinVector::from_bits(vec![1, 1, 0, 0]).unwrap();
        assert_eq!(encode(&u).unwrap().as_slice(), &[0, 0, 1, 0]);
        assert!(encode(&BinVector::zeros(6)).is_err());
        assert_eq!(encode(&BinVector::from_bits(vec![1]).unwrap()).unwrap().as_slice(), &[1]);
    }

    #[test]
    fn spec_construction() {
        let spec = PolarSpec::from_active(8, &[3, 5, 6, 7]).unwrap();
        assert_eq!(spec.active_count(), 4);
        assert_eq!(spec.active_positions(), vec![3, 5, 6, 7]);
        assert!(PolarSpec::from_active(8, &[8]).is_err());
        assert!(PolarSpec::from_active(8, &[1, 1]).is_err());
        assert!(PolarSpec::from_active(6, &[1]).is_err());
        let u = spec.place(&[1, 0, 1, 1], &[]).unwrap();
        assert_eq!(u.as_slice(), &[0, 0, 0, 1, 0, 0, 1, 1]);
        assert!(spec.place(&[1], &[]).is_err());
    }

    #[test]
    fn place_resolves_known_sources() {
        let mut roles = vec![BitRole::Frozen; 4];
        roles[1] = BitRole::Active;
        roles[2] = BitRole::Known(KnownValue::Decision(1));
        roles[3] = BitRole::Known(KnownValue::Decision(2));
        let spec = PolarSpec::new(roles).unwrap();
        // history has one entry; Decision(1) is current position 0, Decision(2) is position 1
        let u = spec.place(&[1], &[1]).unwrap();
        assert_eq!(u.as_slice(), &[0, 1, 0, 1]);
        assert!(spec.validate_sources(1).is_ok());
        let mut bad = spec.roles().to_vec();
        bad[0] = BitRole::Known(KnownValue::Decision(5));
        assert!(PolarSpec::new(bad).unwrap().validate_sources(1).is_err());
    }

    proptest! {
        #[test]
        fn butterfly_matches_matrix(log_n in 0u32..9, seed in any::<u64>()) {
            let n = 1usize << log_n;
            let bits: Vec<u8> = (0..n).map(|i| ((seed.rotate_left(i as u32 % 64) ^ (i as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)) >> 7 & 1) as u8).collect();
            let u = BinVector::from_bits(bits).unwrap();
            let g = transform_matrix(n).unwrap();
            prop_assert_eq!(encode(&u).unwrap(), mat_vec_mul(&u, &g).unwrap());
        }

        #[test]
        fn encode_is_involution(bits in proptest::collection::vec(0u8..2, 16)) {
            let u = BinVector::from_bits(bits).unwrap();
            prop_assert_eq!(encode(&encode(&u).unwrap()).unwrap(), u);
        }
    }
}
