use super::llr::{boxplus, g_update, hard_decision};
use super::{resolve_known, BitRole, KnownValue, PolarError, PolarSpec, SoftVector};
use crate::gf2lin::{bit_reverse, log2_exact, BinVector};

/// Scratch state of one successive-cancellation pass.
///
/// Node LLRs of level `s` (size `2^s`) live at `llr[2^s..2^{s+1}]`; level `n`
/// holds the channel values in `y` order. Partial sums of the last finished
/// left child at level `s` live at `left[2^s - 1..2^{s+1} - 1]`.
#[derive(Debug, Clone)]
pub(crate) struct ScState {
    levels: u32,
    llr: Vec<f64>,
    left: Vec<u8>,
    tmp: Vec<u8>,
    pub(crate) u: Vec<u8>,
}

impl ScState {
    pub(crate) fn new(n: usize) -> Self {
        let levels = n.trailing_zeros();
        Self {
            levels,
            llr: vec![0.0; 2 * n],
            left: vec![0; n],
            tmp: vec![0; n],
            u: vec![0; n],
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.u.len()
    }

    pub(crate) fn load_channel(&mut self, channel: &[f64]) {
        let n = self.len();
        for (j, &v) in channel.iter().enumerate() {
            self.llr[n + bit_reverse(j, self.levels)] = v;
        }
    }

    pub(crate) fn copy_from(&mut self, other: &ScState) {
        self.llr.copy_from_slice(&other.llr);
        self.left.copy_from_slice(&other.left);
        self.u.copy_from_slice(&other.u);
    }

    fn f_level(&mut self, s: u32) {
        let half = 1usize << s;
        let (lo, hi) = self.llr.split_at_mut(2 * half);
        let child = &mut lo[half..];
        let parent = &hi[..2 * half];
        for j in 0..half {
            child[j] = boxplus(parent[j], parent[j + half]);
        }
    }

    fn g_level(&mut self, s: u32) {
        let half = 1usize << s;
        let (lo, hi) = self.llr.split_at_mut(2 * half);
        let child = &mut lo[half..];
        let parent = &hi[..2 * half];
        let left = &self.left[half - 1..2 * half - 1];
        for j in 0..half {
            child[j] = g_update(parent[j], parent[j + half], left[j]);
        }
    }

    /// LLR of `u[i]` given the committed decisions `u[0..i]`.
    pub(crate) fn bit_llr(&mut self, i: usize) -> f64 {
        if i == 0 {
            for s in (0..self.levels).rev() {
                self.f_level(s);
            }
        } else {
            let tz = i.trailing_zeros();
            self.g_level(tz);
            for s in (0..tz).rev() {
                self.f_level(s);
            }
        }
        self.llr[1]
    }

    pub(crate) fn commit(&mut self, i: usize, bit: u8) {
        self.u[i] = bit;
        self.tmp[0] = bit;
        let mut len = 1usize;
        let mut s = 0u32;
        while s < self.levels && (i >> s) & 1 == 1 {
            self.tmp.copy_within(0..len, len);
            let left = &self.left[len - 1..2 * len - 1];
            for (t, l) in self.tmp[..len].iter_mut().zip(left) {
                *t ^= l;
            }
            len *= 2;
            s += 1;
        }
        if s < self.levels {
            self.left[len - 1..2 * len - 1].copy_from_slice(&self.tmp[..len]);
        }
    }
}

/// Successive-cancellation decoder with reusable scratch memory.
#[derive(Debug, Clone)]
pub struct ScDecoder {
    state: ScState,
}

impl ScDecoder {
    pub fn new(n: usize) -> Result<Self, PolarError> {
        log2_exact(n)?;
        Ok(Self { state: ScState::new(n) })
    }

    pub fn len(&self) -> usize {
        self.state.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn check(&self, llr: &SoftVector, spec: &PolarSpec) -> Result<(), PolarError> {
        for got in [llr.len(), spec.len()] {
            if got != self.len() {
                return Err(PolarError::LengthMismatch {
                    expected: self.len(),
                    got,
                });
            }
        }
        spec.validate_sources(0)
    }

    /// Decodes all `N` u-positions.
    pub fn decode(&mut self, llr: &SoftVector, spec: &PolarSpec) -> Result<BinVector, PolarError> {
        self.check(llr, spec)?;
        let st = &mut self.state;
        st.load_channel(llr.as_slice());
        for i in 0..st.len() {
            let lambda = st.bit_llr(i);
            let bit = match spec.role(i) {
                BitRole::Active => hard_decision(lambda),
                BitRole::Frozen => 0,
                BitRole::Known(KnownValue::Fixed(v)) => v,
                BitRole::Known(KnownValue::Decision(idx)) => resolve_known(idx, i, &[], &st.u).unwrap(),
            };
            st.commit(i, bit);
        }
        Ok(BinVector::from_bits(st.u.clone())?)
    }

    /// Decision LLR of every u-position when all earlier positions are fixed
    /// to the genie values `u_true`.
    pub fn genie_bit_llrs(&mut self, llr: &SoftVector, u_true: &BinVector) -> Result<Vec<f64>, PolarError> {
        if llr.len() != self.len() || u_true.len() != self.len() {
            return Err(PolarError::LengthMismatch {
                expected: self.len(),
                got: llr.len().min(u_true.len()),
            });
        }
        let st = &mut self.state;
        st.load_channel(llr.as_slice());
        let mut out = Vec::with_capacity(st.len());
        for i in 0..st.len() {
            out.push(st.bit_llr(i));
            st.commit(i, u_true[i]);
        }
        Ok(out)
    }
}

pub fn sc_decode(llr: &SoftVector, spec: &PolarSpec) -> Result<BinVector, PolarError> {
    ScDecoder::new(spec.len())?.decode(llr, spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polar::encode;

    fn noiseless(x: &BinVector, amp: f64) -> SoftVector {
        SoftVector::new(x.as_slice().iter().map(|&b| if b == 0 { amp } else { -amp }).collect()).unwrap()
    }

    #[test]
    fn infinite_positive_decodes_zero() {
        let spec = PolarSpec::from_active(8, &[3, 5, 6, 7]).unwrap();
        let llr = SoftVector::new(vec![f64::INFINITY; 8]).unwrap();
        assert_eq!(sc_decode(&llr, &spec).unwrap(), BinVector::zeros(8));
    }

    #[test]
    fn noiseless_round_trip_all_active() {
        for n in [1usize, 2, 4, 8, 32, 128] {
            let active: Vec<usize> = (0..n).collect();
            let spec = PolarSpec::from_active(n, &active).unwrap();
            let u = BinVector::from_bits((0..n).map(|i| ((i * 7 + 3) % 5 % 2) as u8).collect::<Vec<_>>()).unwrap();
            let x = encode(&u).unwrap();
            assert_eq!(sc_decode(&noiseless(&x, 5.0), &spec).unwrap(), u, "N={n}");
        }
    }

    #[test]
    fn frozen_and_known_positions_are_forced() {
        let mut roles = vec![BitRole::Frozen; 8];
        roles[3] = BitRole::Active;
        roles[5] = BitRole::Known(KnownValue::Fixed(1));
        roles[6] = BitRole::Known(KnownValue::Decision(3));
        roles[7] = BitRole::Active;
        let spec = PolarSpec::new(roles).unwrap();
        let u = spec.place(&[1, 0], &[]).unwrap();
        assert_eq!(u.as_slice(), &[0, 0, 0, 1, 0, 1, 1, 0]);
        let x = encode(&u).unwrap();
        assert_eq!(sc_decode(&noiseless(&x, 3.0), &spec).unwrap(), u);
        // a contradicting channel cannot move forced positions
        let llr = SoftVector::new(vec![-4.0; 8]).unwrap();
        let d = sc_decode(&llr, &spec).unwrap();
        assert_eq!(d[0], 0);
        assert_eq!(d[5], 1);
        assert_eq!(d[6], d[3]);
    }

    #[test]
    fn length_errors() {
        let spec = PolarSpec::from_active(4, &[3]).unwrap();
        assert!(sc_decode(&SoftVector::zeros(8), &spec).is_err());
        assert!(ScDecoder::new(12).is_err());
    }

    #[test]
    fn known_equals_translated_frozen() {
        // Forcing u[1] = 1 is the same as decoding the code with u[1] frozen
        // to zero after removing row 1 of G_4 from the channel.
        let llr = SoftVector::new(vec![0.8, -1.3, 2.1, -0.4]).unwrap();
        let mut roles = vec![BitRole::Active; 4];
        roles[0] = BitRole::Frozen;
        roles[1] = BitRole::Known(KnownValue::Fixed(1));
        let known = PolarSpec::new(roles.clone()).unwrap();
        roles[1] = BitRole::Frozen;
        let frozen = PolarSpec::new(roles).unwrap();

        let mut e = BinVector::zeros(4);
        e.set(1, 1);
        let row = encode(&e).unwrap();
        let translated = SoftVector::new(
            (0..4).map(|j| if row[j] == 1 { -llr[j] } else { llr[j] }).collect(),
        )
        .unwrap();
        let a = sc_decode(&llr, &known).unwrap();
        let mut b = sc_decode(&translated, &frozen).unwrap();
        b.set(1, 1);
        assert_eq!(a, b);
        let mut dec = ScDecoder::new(4).unwrap();
        let la = dec.genie_bit_llrs(&llr, &a).unwrap();
        let mut bt = b.clone();
        bt.set(1, 0);
        let lb = dec.genie_bit_llrs(&translated, &bt).unwrap();
        for i in 2..4 {
            assert!((la[i] - lb[i]).abs() < 1e-12);
        }
    }
}
