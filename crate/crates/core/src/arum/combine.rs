use super::rx::LlrBlock;
use super::ArumError;
use crate::gf2lin::{BinVector, KernelMatrix};
use crate::polar::{bit_log_prob, boxplus, llr_add, llr_from_log_weights, log_add, SoftVector};

/// z-domain LLRs of block `s` given the x-domain LLRs of all received blocks
/// and the decoded codewords `later_z` of blocks `s+1..t` (in block order).
///
/// Unknown earlier codeword bits are marginalized exactly; z-values known to
/// be zero (shortening, padding) enter as certain. Identity and
/// first-xor-latest kernels use closed forms.
pub fn step1_combine(
    blocks: &[LlrBlock],
    later_z: &[BinVector],
    kernel: &KernelMatrix,
    s: usize,
) -> Result<SoftVector, ArumError> {
    let t = blocks.len();
    if t == 0 {
        return Err(ArumError::NoBlocks);
    }
    if s >= t {
        return Err(ArumError::LengthMismatch { expected: t, got: s });
    }
    if later_z.len() != t - s - 1 {
        return Err(ArumError::MissingDecodedBlocks {
            expected: t - s - 1,
            got: later_z.len(),
        });
    }
    if kernel.size() < t {
        return Err(ArumError::KernelTooSmall {
            size: kernel.size(),
            needed: t,
        });
    }
    let width = blocks[0].len();
    for len in blocks.iter().map(|b| b.len()).chain(later_z.iter().map(|z| z.len())) {
        if len != width {
            return Err(ArumError::LengthMismatch { expected: width, got: len });
        }
    }
    let r = kernel.leading(t)?;
    let z = |k: usize, i: usize| later_z[k - s - 1][i];

    let mut out = vec![0.0; width];
    if r.is_identity() {
        for (i, o) in out.iter_mut().enumerate() {
            *o = if blocks[s].is_known_zero(i) { f64::INFINITY } else { blocks[s].llr(i) };
        }
    } else if r.is_first_xor_latest() {
        for (i, o) in out.iter_mut().enumerate() {
            if blocks[s].is_known_zero(i) {
                *o = f64::INFINITY;
                continue;
            }
            // evidence on z_1: its own block, known-zero intermediate blocks
            // and sign-corrected later blocks
            let mut e = if s > 0 && blocks[0].is_known_zero(i) {
                f64::INFINITY
            } else {
                blocks[0].llr(i)
            };
            for b in blocks.iter().take(s).skip(1) {
                if b.is_known_zero(i) {
                    e = llr_add(e, b.llr(i));
                }
            }
            for (k, b) in blocks.iter().enumerate().skip(s + 1) {
                let l = b.llr(i);
                e = llr_add(e, if z(k, i) == 1 { -l } else { l });
            }
            *o = if s == 0 { e } else { boxplus(blocks[s].llr(i), e) };
        }
    } else {
        let cols: Vec<u64> = (0..t).map(|c| r.column_mask(c)).collect();
        for (i, o) in out.iter_mut().enumerate() {
            if blocks[s].is_known_zero(i) {
                *o = f64::INFINITY;
                continue;
            }
            let mut fixed = 0u64;
            for k in s + 1..t {
                fixed |= (z(k, i) as u64) << k;
            }
            let free: Vec<usize> = (0..s).filter(|&q| !blocks[q].is_known_zero(i)).collect();
            let mut lse = [f64::NEG_INFINITY; 2];
            for bit in 0..2u64 {
                for assign in 0u64..(1 << free.len()) {
                    let mut word = fixed | (bit << s);
                    for (b, &q) in free.iter().enumerate() {
                        word |= ((assign >> b) & 1) << q;
                    }
                    let ll: f64 = (0..t)
                        .map(|c| bit_log_prob(blocks[c].llr(i), ((word & cols[c]).count_ones() & 1) as u8))
                        .sum();
                    lse[bit as usize] = log_add(lse[bit as usize], ll);
                }
            }
            *o = llr_from_log_weights(lse[0], lse[1]);
        }
    }
    Ok(SoftVector::new(out).expect("combined LLRs are NaN free"))
}
