//! Gaussian approximation of density evolution.
//!
//! LLRs are modelled as consistent Gaussians `N(m, 2m)`, tracked by their mean
//! only. The check-node rule goes through
//! `φ(m) = 1 - E[tanh(L/2)]`, approximated in two regimes:
//!
//! * `m < PHI_BOUNDARY`: `exp(PHI_ALPHA · m^PHI_GAMMA + PHI_BETA)`, capped at 1;
//! * `m ≥ PHI_BOUNDARY`: `sqrt(π/m) · exp(-m/4) · (1 - 10/(7m))`.
//!
//! The boundary is the crossing point of the two forms above the usual
//! switch-over at 10, so `φ` is continuous and non-increasing and its inverse
//! is well defined. All arithmetic is done on `ln φ` so large means do not
//! underflow.

use super::ConstructError;

pub const PHI_ALPHA: f64 = -0.4527;
pub const PHI_GAMMA: f64 = 0.86;
pub const PHI_BETA: f64 = 0.0218;
pub const PHI_BOUNDARY: f64 = 14.394_352_942_168_468;

/// `ln φ(m)`; `ln φ(0) = 0` and `ln φ(+INF) = -INF`.
pub fn ln_phi(m: f64) -> f64 {
    if m <= 0.0 {
        0.0
    } else if m == f64::INFINITY {
        f64::NEG_INFINITY
    } else if m < PHI_BOUNDARY {
        (PHI_ALPHA * m.powf(PHI_GAMMA) + PHI_BETA).min(0.0)
    } else {
        0.5 * (std::f64::consts::PI / m).ln() - m / 4.0 + (-10.0 / (7.0 * m)).ln_1p()
    }
}

pub fn phi(m: f64) -> f64 {
    ln_phi(m).exp()
}

/// Inverse of [`ln_phi`]: the smallest mean whose `ln φ` equals `target`.
pub fn phi_inv_ln(target: f64) -> f64 {
    if target >= 0.0 {
        return 0.0;
    }
    if target == f64::NEG_INFINITY {
        return f64::INFINITY;
    }
    if target > ln_phi(PHI_BOUNDARY) {
        // closed form of the exp regime
        return ((PHI_BETA - target) / -PHI_ALPHA).powf(1.0 / PHI_GAMMA);
    }
    let mut lo = PHI_BOUNDARY;
    let mut hi = 2.0 * PHI_BOUNDARY;
    while ln_phi(hi) > target {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if ln_phi(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn check_input(m: f64) -> Result<(), ConstructError> {
    if m.is_nan() || m < 0.0 {
        return Err(ConstructError::NegativeMean(m));
    }
    Ok(())
}

/// Variable node: means add.
pub fn ga_variable(m1: f64, m2: f64) -> Result<f64, ConstructError> {
    check_input(m1)?;
    check_input(m2)?;
    Ok(m1 + m2)
}

/// Check node: `φ⁻¹(1 - (1 - φ(m1))(1 - φ(m2)))`.
pub fn ga_check(m1: f64, m2: f64) -> Result<f64, ConstructError> {
    check_input(m1)?;
    check_input(m2)?;
    Ok(check_unchecked(m1, m2))
}

pub(crate) fn check_unchecked(m1: f64, m2: f64) -> f64 {
    if m1 == 0.0 || m2 == 0.0 {
        return 0.0;
    }
    if m1 == f64::INFINITY {
        return m2;
    }
    if m2 == f64::INFINITY {
        return m1;
    }
    let (la, lb) = (ln_phi(m1), ln_phi(m2));
    // ln(a + b - ab) = ln(a + b(1 - a)), factored on the larger term
    let (hi, lo) = if la >= lb { (la, lb) } else { (lb, la) };
    let one_minus_hi = -hi.exp_m1();
    let target = hi + ((lo - hi).exp() * one_minus_hi).ln_1p();
    phi_inv_ln(target)
}
