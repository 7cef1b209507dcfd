//! Log-likelihood ratios, `LLR = ln P(b=0) / P(b=1)`.
//!
//! `+INF` means the bit is known to be 0 and `-INF` that it is known to be 1.
//! NaN never appears: contradictory infinities collapse to an erasure (0).

use std::ops::Index;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("soft value at position {0} is NaN")]
pub struct NanLlr(pub usize);

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SoftVector {
    values: Vec<f64>,
}

impl SoftVector {
    pub fn new(values: Vec<f64>) -> Result<Self, NanLlr> {
        if let Some(i) = values.iter().position(|v| v.is_nan()) {
            return Err(NanLlr(i));
        }
        Ok(Self { values })
    }

    pub fn zeros(len: usize) -> Self {
        Self { values: vec![0.0; len] }
    }

    /// Hard, perfectly reliable soft values for a known bit pattern.
    pub fn certain(bits: &[u8]) -> Self {
        Self {
            values: bits
                .iter()
                .map(|&b| if b == 0 { f64::INFINITY } else { f64::NEG_INFINITY })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.values
    }

    /// Sets one entry; NaN is mapped to an erasure.
    pub fn set(&mut self, i: usize, v: f64) {
        self.values[i] = if v.is_nan() { 0.0 } else { v };
    }

    pub fn resized(&self, len: usize) -> SoftVector {
        let mut values = self.values.clone();
        values.resize(len, 0.0);
        Self { values }
    }
}

impl Index<usize> for SoftVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.values[i]
    }
}

/// `ln(1 + e^x)` without overflow.
#[inline]
pub fn softplus(x: f64) -> f64 {
    if x == f64::INFINITY {
        f64::INFINITY
    } else if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Sum of two LLRs; `+INF + -INF` is treated as an erasure.
#[inline]
pub fn llr_add(a: f64, b: f64) -> f64 {
    let s = a + b;
    if s.is_nan() {
        0.0
    } else {
        s
    }
}

/// Exact check-node combination `2·atanh(tanh(a/2)·tanh(b/2))`.
#[inline]
pub fn boxplus(a: f64, b: f64) -> f64 {
    let (ma, mb) = (a.abs(), b.abs());
    let sign = if (a < 0.0) != (b < 0.0) { -1.0 } else { 1.0 };
    let lo = ma.min(mb);
    if lo == 0.0 {
        return 0.0;
    }
    if lo <= 1.0 {
        // tanh product stays well inside (-1, 1): the direct form is exact
        // to rounding and keeps relative accuracy for tiny inputs.
        return 2.0 * ((a * 0.5).tanh() * (b * 0.5).tanh()).atanh();
    }
    let hi = ma.max(mb);
    if hi == f64::INFINITY {
        return sign * lo;
    }
    let corr_sum = if lo + hi > 50.0 { 0.0 } else { (-(lo + hi)).exp().ln_1p() };
    let corr_diff = (-(hi - lo)).exp().ln_1p();
    sign * (lo + corr_sum - corr_diff)
}

/// Variable-node update given the partial sum `u` of the upper branch.
#[inline]
pub fn g_update(upper: f64, lower: f64, u: u8) -> f64 {
    let v = if u == 0 { lower + upper } else { lower - upper };
    if v.is_nan() {
        0.0
    } else {
        v
    }
}

/// Path-metric penalty `ln(1 + exp(-(1-2u)·λ))` for deciding `u` on a bit
/// with LLR `λ`.
#[inline]
pub fn decision_penalty(llr: f64, u: u8) -> f64 {
    let s = if u == 0 { llr } else { -llr };
    softplus(-s)
}

/// Sign decision; ties go to 0.
#[inline]
pub fn hard_decision(llr: f64) -> u8 {
    (llr < 0.0) as u8
}

/// `ln(e^a + e^b)` tolerant of infinities.
#[inline]
pub fn log_add(a: f64, b: f64) -> f64 {
    let hi = a.max(b);
    if hi == f64::NEG_INFINITY || hi == f64::INFINITY {
        return hi;
    }
    hi + (-(a - b).abs()).exp().ln_1p()
}

/// `lse0 - lse1` as an LLR; both impossible yields an erasure.
#[inline]
pub fn llr_from_log_weights(lse0: f64, lse1: f64) -> f64 {
    let d = lse0 - lse1;
    if d.is_nan() {
        0.0
    } else {
        d
    }
}

/// Normalized log-likelihood `ln P(x | λ)` of bit `x` under LLR `λ`.
#[inline]
pub fn bit_log_prob(llr: f64, x: u8) -> f64 {
    -decision_penalty(llr, x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference_boxplus(a: f64, b: f64) -> f64 {
        2.0 * ((a / 2.0).tanh() * (b / 2.0).tanh()).atanh()
    }

    #[test]
    fn boxplus_matches_definition() {
        for &(a, b) in &[(3.0, -1.0), (0.3, 0.2), (2.5, 4.0), (-7.0, -1.5), (1e-7, 3e-7)] {
            let want = reference_boxplus(a, b);
            let got = boxplus(a, b);
            assert!((got - want).abs() <= 1e-12 * want.abs().max(1e-300), "{a} {b}: {got} vs {want}");
        }
        assert!((boxplus(3.0, -1.0) - (-0.891_221_9)).abs() < 1e-6);
    }

    #[test]
    fn boxplus_infinities() {
        assert_eq!(boxplus(f64::INFINITY, 2.0), 2.0);
        assert_eq!(boxplus(f64::NEG_INFINITY, 2.0), -2.0);
        assert_eq!(boxplus(f64::INFINITY, f64::NEG_INFINITY), f64::NEG_INFINITY);
        assert_eq!(boxplus(0.0, f64::INFINITY), 0.0);
        assert_eq!(boxplus(5.0, 0.0), 0.0);
        assert_eq!(boxplus(1e300, 1e300), 1e300);
    }

    #[test]
    fn boxplus_is_symmetric() {
        for &(a, b) in &[(3.0, -1.0), (0.7, 20.0), (1.2, 1.3)] {
            assert_eq!(boxplus(a, b), boxplus(b, a));
        }
    }

    #[test]
    fn g_and_conflicts() {
        assert_eq!(g_update(2.0, 1.0, 0), 3.0);
        assert_eq!(g_update(2.0, 1.0, 1), -1.0);
        assert_eq!(g_update(f64::INFINITY, f64::INFINITY, 1), 0.0);
        assert_eq!(llr_add(f64::INFINITY, f64::NEG_INFINITY), 0.0);
    }

    #[test]
    fn penalties() {
        assert_eq!(decision_penalty(f64::INFINITY, 0), 0.0);
        assert_eq!(decision_penalty(f64::INFINITY, 1), f64::INFINITY);
        assert!((decision_penalty(0.0, 1) - 2f64.ln()).abs() < 1e-15);
        assert!((decision_penalty(2.0, 1) - (1.0 + 2f64.exp()).ln()).abs() < 1e-12);
        assert!((decision_penalty(-800.0, 0) - 800.0).abs() < 1e-9);
        assert_eq!(hard_decision(0.0), 0);
        assert_eq!(hard_decision(-1e-300), 1);
    }

    #[test]
    fn nan_rejected() {
        assert_eq!(SoftVector::new(vec![0.0, f64::NAN]), Err(NanLlr(1)));
        let mut v = SoftVector::zeros(2);
        v.set(0, f64::NAN);
        assert_eq!(v[0], 0.0);
    }
}
