//! Binary (GF(2)) vectors and matrices.
//!
//! Only what the codec needs: Kronecker powers of small kernels, the
//! bit-reversal permutation, the polar transform `G_N = B_N · F^{⊗n}` and the
//! inter-transmission kernels used for mask generation.

use std::fmt;
use std::ops::Index;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Gf2Error {
    #[error("entry {value} at position {index} is not a binary digit")]
    NotBinary { index: usize, value: u8 },
    #[error("length {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("matrix must have at least one row and one column")]
    Empty,
    #[error("kernel matrix is not upper unitriangular")]
    NotUpperUnitriangular,
    #[error("ragged rows: row {row} has {len} entries, expected {expected}")]
    Ragged { row: usize, len: usize, expected: usize },
}

/// A vector over GF(2), one byte per entry.
#[derive(Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct BinVector {
    bits: Vec<u8>,
}

impl BinVector {
    pub fn zeros(len: usize) -> Self {
        Self { bits: vec![0; len] }
    }

    pub fn from_bits(bits: impl Into<Vec<u8>>) -> Result<Self, Gf2Error> {
        let bits = bits.into();
        if let Some((index, &value)) = bits.iter().enumerate().find(|(_, &b)| b > 1) {
            return Err(Gf2Error::NotBinary { index, value });
        }
        Ok(Self { bits })
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        Self {
            bits: bits.iter().map(|&b| b as u8).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn get(&self, i: usize) -> u8 {
        self.bits[i]
    }

    pub fn set(&mut self, i: usize, bit: u8) {
        self.bits[i] = bit & 1;
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.bits
    }

    pub fn into_inner(self) -> Vec<u8> {
        self.bits
    }

    pub fn weight(&self) -> usize {
        self.bits.iter().filter(|&&b| b == 1).count()
    }

    /// Element-wise XOR with `other`.
    pub fn xor_assign(&mut self, other: &BinVector) -> Result<(), Gf2Error> {
        if self.len() != other.len() {
            return Err(Gf2Error::DimensionMismatch {
                left: self.len(),
                right: other.len(),
            });
        }
        for (a, b) in self.bits.iter_mut().zip(&other.bits) {
            *a ^= b;
        }
        Ok(())
    }

    /// Zero-extends (or truncates) to `len` entries.
    pub fn resized(&self, len: usize) -> BinVector {
        let mut bits = self.bits.clone();
        bits.resize(len, 0);
        Self { bits }
    }

    /// Hex rendering, first entry in the most significant bit of the first
    /// nibble. The final nibble is zero padded.
    pub fn to_hex(&self) -> String {
        self.bits
            .chunks(4)
            .map(|chunk| {
                let nibble = chunk
                    .iter()
                    .enumerate()
                    .fold(0u8, |acc, (k, &b)| acc | (b << (3 - k)));
                char::from_digit(nibble as u32, 16).unwrap()
            })
            .collect()
    }
}

impl Index<usize> for BinVector {
    type Output = u8;

    fn index(&self, i: usize) -> &u8 {
        &self.bits[i]
    }
}

impl fmt::Debug for BinVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BinVector(")?;
        for b in &self.bits {
            write!(f, "{b}")?;
        }
        write!(f, ")")
    }
}

/// Dense binary matrix stored as packed 64-bit words per row.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BinMatrix {
    rows: usize,
    cols: usize,
    words_per_row: usize,
    data: Vec<u64>,
}

impl BinMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Result<Self, Gf2Error> {
        if rows == 0 || cols == 0 {
            return Err(Gf2Error::Empty);
        }
        let words_per_row = cols.div_ceil(64);
        Ok(Self {
            rows,
            cols,
            words_per_row,
            data: vec![0; rows * words_per_row],
        })
    }

    pub fn identity(n: usize) -> Result<Self, Gf2Error> {
        let mut m = Self::zeros(n, n)?;
        for i in 0..n {
            m.set(i, i, 1);
        }
        Ok(m)
    }

    pub fn from_rows<R: AsRef<[u8]>>(rows: &[R]) -> Result<Self, Gf2Error> {
        let cols = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut m = Self::zeros(rows.len(), cols)?;
        for (r, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != cols {
                return Err(Gf2Error::Ragged {
                    row: r,
                    len: row.len(),
                    expected: cols,
                });
            }
            for (c, &v) in row.iter().enumerate() {
                if v > 1 {
                    return Err(Gf2Error::NotBinary {
                        index: r * cols + c,
                        value: v,
                    });
                }
                m.set(r, c, v);
            }
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> u8 {
        assert!(r < self.rows && c < self.cols, "index out of range");
        ((self.data[r * self.words_per_row + c / 64] >> (c % 64)) & 1) as u8
    }

    pub fn set(&mut self, r: usize, c: usize, v: u8) {
        assert!(r < self.rows && c < self.cols, "index out of range");
        let word = &mut self.data[r * self.words_per_row + c / 64];
        let mask = 1u64 << (c % 64);
        if v & 1 == 1 {
            *word |= mask;
        } else {
            *word &= !mask;
        }
    }

    fn row_words(&self, r: usize) -> &[u64] {
        &self.data[r * self.words_per_row..(r + 1) * self.words_per_row]
    }

    pub fn row(&self, r: usize) -> BinVector {
        BinVector {
            bits: (0..self.cols).map(|c| self.get(r, c)).collect(),
        }
    }

    pub fn to_rows(&self) -> Vec<Vec<u8>> {
        (0..self.rows).map(|r| self.row(r).into_inner()).collect()
    }

    pub fn transpose(&self) -> BinMatrix {
        let mut t = BinMatrix::zeros(self.cols, self.rows).unwrap();
        for r in 0..self.rows {
            for c in 0..self.cols {
                if self.get(r, c) == 1 {
                    t.set(c, r, 1);
                }
            }
        }
        t
    }

    /// Leading `rows × cols` block.
    pub fn leading(&self, rows: usize, cols: usize) -> Result<BinMatrix, Gf2Error> {
        if rows > self.rows || cols > self.cols {
            return Err(Gf2Error::DimensionMismatch {
                left: rows.max(cols),
                right: self.rows.min(self.cols),
            });
        }
        let mut m = BinMatrix::zeros(rows, cols)?;
        for r in 0..rows {
            for c in 0..cols {
                m.set(r, c, self.get(r, c));
            }
        }
        Ok(m)
    }

    pub fn kron(&self, other: &BinMatrix) -> BinMatrix {
        let mut m = BinMatrix::zeros(self.rows * other.rows, self.cols * other.cols).unwrap();
        for r in 0..self.rows {
            for c in 0..self.cols {
                if self.get(r, c) == 0 {
                    continue;
                }
                for rr in 0..other.rows {
                    for cc in 0..other.cols {
                        if other.get(rr, cc) == 1 {
                            m.set(r * other.rows + rr, c * other.cols + cc, 1);
                        }
                    }
                }
            }
        }
        m
    }

    pub fn is_upper_unitriangular(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|r| {
                self.get(r, r) == 1 && (0..r).all(|c| self.get(r, c) == 0)
            })
    }
}

impl fmt::Debug for BinMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BinMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for c in 0..self.cols {
                write!(f, "{}", self.get(r, c))?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// The 2×2 polarization kernel `[[1,0],[1,1]]`.
pub fn kernel_f() -> BinMatrix {
    BinMatrix::from_rows(&[[1u8, 0], [1, 1]]).unwrap()
}

/// `m^{⊗power}`; the zeroth power is the 1×1 identity.
pub fn kron_power(m: &BinMatrix, power: u32) -> BinMatrix {
    let mut acc = BinMatrix::identity(1).unwrap();
    for _ in 0..power {
        acc = acc.kron(m);
    }
    acc
}

pub fn log2_exact(n: usize) -> Result<u32, Gf2Error> {
    if n == 0 || !n.is_power_of_two() {
        return Err(Gf2Error::NotPowerOfTwo(n));
    }
    Ok(n.trailing_zeros())
}

/// Reverses the low `bits` bits of `i`.
#[inline]
pub fn bit_reverse(i: usize, bits: u32) -> usize {
    if bits == 0 {
        return 0;
    }
    i.reverse_bits() >> (usize::BITS - bits)
}

pub fn bit_reversal_perm(n: usize) -> Result<Vec<usize>, Gf2Error> {
    let bits = log2_exact(n)?;
    Ok((0..n).map(|i| bit_reverse(i, bits)).collect())
}

/// `G_N = B_N · F^{⊗n}`: row `i` of `G_N` is row `bitrev(i)` of `F^{⊗n}`.
pub fn transform_matrix(n: usize) -> Result<BinMatrix, Gf2Error> {
    let perm = bit_reversal_perm(n)?;
    let fpow = kron_power(&kernel_f(), log2_exact(n)?);
    let mut g = BinMatrix::zeros(n, n)?;
    for (i, &src) in perm.iter().enumerate() {
        for c in 0..n {
            g.set(i, c, fpow.get(src, c));
        }
    }
    Ok(g)
}

/// Row vector times matrix over GF(2).
pub fn mat_vec_mul(v: &BinVector, m: &BinMatrix) -> Result<BinVector, Gf2Error> {
    if v.len() != m.rows {
        return Err(Gf2Error::DimensionMismatch {
            left: v.len(),
            right: m.rows,
        });
    }
    let mut acc = vec![0u64; m.words_per_row];
    for r in (0..m.rows).filter(|&r| v[r] == 1) {
        for (a, w) in acc.iter_mut().zip(m.row_words(r)) {
            *a ^= w;
        }
    }
    Ok(BinVector {
        bits: (0..m.cols)
            .map(|c| ((acc[c / 64] >> (c % 64)) & 1) as u8)
            .collect(),
    })
}

pub fn mat_mul(a: &BinMatrix, b: &BinMatrix) -> Result<BinMatrix, Gf2Error> {
    if a.cols != b.rows {
        return Err(Gf2Error::DimensionMismatch {
            left: a.cols,
            right: b.rows,
        });
    }
    let mut out = BinMatrix::zeros(a.rows, b.cols)?;
    for r in 0..a.rows {
        let row = mat_vec_mul(&a.row(r), b)?;
        for c in 0..b.cols {
            out.set(r, c, row[c]);
        }
    }
    Ok(out)
}

/// Inter-transmission kernel families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    /// Identity: no masking (incremental freezing).
    If,
    /// First-xor-latest: every retransmission is masked by the first codeword.
    Fl,
    /// Leading block of `(F^T)^{⊗⌈log2 t⌉}`.
    Arikan,
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KernelKind::If => "if",
            KernelKind::Fl => "fl",
            KernelKind::Arikan => "arikan",
        })
    }
}

/// Upper-unitriangular `t × t` matrix `R_t`; `(x_1..x_t) = (z_1..z_t) · R_t`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KernelMatrix {
    kind: Option<KernelKind>,
    matrix: BinMatrix,
}

impl KernelMatrix {
    /// Wraps an arbitrary matrix; must be square and upper unitriangular.
    pub fn custom(matrix: BinMatrix) -> Result<Self, Gf2Error> {
        if matrix.rows() != matrix.cols() {
            return Err(Gf2Error::DimensionMismatch {
                left: matrix.rows(),
                right: matrix.cols(),
            });
        }
        if !matrix.is_upper_unitriangular() {
            return Err(Gf2Error::NotUpperUnitriangular);
        }
        Ok(Self { kind: None, matrix })
    }

    pub fn kind(&self) -> Option<KernelKind> {
        self.kind
    }

    pub fn size(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &BinMatrix {
        &self.matrix
    }

    pub fn get(&self, r: usize, c: usize) -> u8 {
        self.matrix.get(r, c)
    }

    /// Bitmask over rows of column `c`: bit `r` set iff `R[r][c] = 1`.
    pub fn column_mask(&self, c: usize) -> u64 {
        (0..self.size().min(64))
            .filter(|&r| self.get(r, c) == 1)
            .fold(0u64, |m, r| m | (1 << r))
    }

    pub fn leading(&self, t: usize) -> Result<KernelMatrix, Gf2Error> {
        Ok(Self {
            kind: self.kind,
            matrix: self.matrix.leading(t, t)?,
        })
    }

    /// True if `self` is the leading block of `larger`.
    pub fn is_nested_in(&self, larger: &KernelMatrix) -> bool {
        let t = self.size();
        t <= larger.size() && (0..t).all(|r| (0..t).all(|c| self.get(r, c) == larger.get(r, c)))
    }

    pub fn is_identity(&self) -> bool {
        let t = self.size();
        (0..t).all(|r| (0..t).all(|c| self.get(r, c) == (r == c) as u8))
    }

    /// True if this is the first-xor-latest pattern: unit diagonal plus a
    /// full first row, zero elsewhere.
    pub fn is_first_xor_latest(&self) -> bool {
        let t = self.size();
        (0..t).all(|r| (0..t).all(|c| self.get(r, c) == (r == c || r == 0) as u8))
    }
}

pub fn kernel_matrix(kind: KernelKind, t: usize) -> KernelMatrix {
    assert!(t >= 1, "kernel size must be at least 1");
    let matrix = match kind {
        KernelKind::If => BinMatrix::identity(t).unwrap(),
        KernelKind::Fl => {
            let mut m = BinMatrix::identity(t).unwrap();
            for c in 0..t {
                m.set(0, c, 1);
            }
            m
        }
        KernelKind::Arikan => {
            let power = t.next_power_of_two().trailing_zeros();
            kron_power(&kernel_f().transpose(), power).leading(t, t).unwrap()
        }
    };
    KernelMatrix {
        kind: Some(kind),
        matrix,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rows(m: &BinMatrix) -> Vec<Vec<u8>> {
        m.to_rows()
    }

    #[test]
    fn kernel_and_powers() {
        assert_eq!(rows(&kernel_f()), vec![vec![1, 0], vec![1, 1]]);
        assert_eq!(rows(&kron_power(&kernel_f(), 0)), vec![vec![1]]);
        assert_eq!(
            rows(&kron_power(&kernel_f(), 2)),
            vec![
                vec![1, 0, 0, 0],
                vec![1, 1, 0, 0],
                vec![1, 0, 1, 0],
                vec![1, 1, 1, 1]
            ]
        );
    }

    #[test]
    fn bit_reversal() {
        assert_eq!(bit_reversal_perm(1).unwrap(), vec![0]);
        assert_eq!(bit_reversal_perm(2).unwrap(), vec![0, 1]);
        assert_eq!(bit_reversal_perm(4).unwrap(), vec![0, 2, 1, 3]);
        assert_eq!(bit_reversal_perm(8).unwrap(), vec![0, 4, 2, 6, 1, 5, 3, 7]);
        assert_eq!(bit_reversal_perm(6), Err(Gf2Error::NotPowerOfTwo(6)));
        assert_eq!(bit_reversal_perm(0), Err(Gf2Error::NotPowerOfTwo(0)));
    }

    #[test]
    fn transform_small() {
        assert_eq!(rows(&transform_matrix(2).unwrap()), vec![vec![1, 0], vec![1, 1]]);
        let g4 = transform_matrix(4).unwrap();
        assert_eq!(
            rows(&g4),
            vec![
                vec![1, 0, 0, 0],
                vec![1, 0, 1, 0],
                vec![1, 1, 0, 0],
                vec![1, 1, 1, 1]
            ]
        );
        assert_eq!(mat_mul(&g4, &g4).unwrap(), BinMatrix::identity(4).unwrap());
        assert!(transform_matrix(12).is_err());
    }

    #[test]
    fn transform_is_self_inverse() {
        for n in [2, 4, 8, 16, 32] {
            let g = transform_matrix(n).unwrap();
            assert_eq!(mat_mul(&g, &g).unwrap(), BinMatrix::identity(n).unwrap(), "N={n}");
        }
    }

    #[test]
    fn vector_products() {
        let g4 = transform_matrix(4).unwrap();
        let zero = BinVector::zeros(4);
        assert_eq!(mat_vec_mul(&zero, &g4).unwrap(), zero);
        let v = BinVector::from_bits(vec![1, 1, 0, 0]).unwrap();
        assert_eq!(mat_vec_mul(&v, &g4).unwrap().as_slice(), &[0, 0, 1, 0]);
        let v = BinVector::from_bits(vec![0, 0, 0, 1]).unwrap();
        assert_eq!(mat_vec_mul(&v, &g4).unwrap().as_slice(), &[1, 1, 1, 1]);
        assert!(mat_vec_mul(&BinVector::zeros(3), &g4).is_err());
        let a = BinMatrix::identity(3).unwrap();
        assert!(mat_mul(&a, &g4).is_err());
    }

    #[test]
    fn kernels_match_definitions() {
        assert_eq!(rows(kernel_matrix(KernelKind::If, 3).matrix()), rows(&BinMatrix::identity(3).unwrap()));
        assert_eq!(
            rows(kernel_matrix(KernelKind::Fl, 3).matrix()),
            vec![vec![1, 1, 1], vec![0, 1, 0], vec![0, 0, 1]]
        );
        assert_eq!(rows(kernel_matrix(KernelKind::Arikan, 2).matrix()), vec![vec![1, 1], vec![0, 1]]);
        assert_eq!(
            rows(kernel_matrix(KernelKind::Arikan, 4).matrix()),
            vec![
                vec![1, 1, 1, 1],
                vec![0, 1, 0, 1],
                vec![0, 0, 1, 1],
                vec![0, 0, 0, 1]
            ]
        );
        assert_eq!(rows(kernel_matrix(KernelKind::Arikan, 1).matrix()), vec![vec![1]]);
    }

    #[test]
    fn kernels_nested_and_triangular() {
        for kind in [KernelKind::If, KernelKind::Fl, KernelKind::Arikan] {
            for s in 1..=16 {
                let big = kernel_matrix(kind, s);
                assert!(big.matrix().is_upper_unitriangular(), "{kind} {s}");
                for t in 1..s {
                    assert!(kernel_matrix(kind, t).is_nested_in(&big), "{kind} {t} in {s}");
                }
            }
        }
    }

    #[test]
    fn fl_equals_arikan_up_to_three() {
        for t in 1..=3 {
            assert_eq!(kernel_matrix(KernelKind::Fl, t).matrix(), kernel_matrix(KernelKind::Arikan, t).matrix());
        }
        assert_ne!(kernel_matrix(KernelKind::Fl, 4).matrix(), kernel_matrix(KernelKind::Arikan, 4).matrix());
    }

    #[test]
    fn kernel_shape_predicates() {
        assert!(kernel_matrix(KernelKind::If, 5).is_identity());
        assert!(kernel_matrix(KernelKind::Fl, 5).is_first_xor_latest());
        assert!(kernel_matrix(KernelKind::Arikan, 3).is_first_xor_latest());
        assert!(!kernel_matrix(KernelKind::Arikan, 4).is_first_xor_latest());
        assert_eq!(kernel_matrix(KernelKind::Arikan, 4).column_mask(3), 0b1111);
        assert_eq!(kernel_matrix(KernelKind::Fl, 4).column_mask(3), 0b1001);
    }

    #[test]
    fn binvector_validation_and_hex() {
        assert_eq!(
            BinVector::from_bits(vec![0, 2]),
            Err(Gf2Error::NotBinary { index: 1, value: 2 })
        );
        let v = BinVector::from_bits(vec![1, 0, 1, 1, 1]).unwrap();
        assert_eq!(v.to_hex(), "b8");
        assert_eq!(BinVector::zeros(0).to_hex(), "");
        let mut w = BinVector::zeros(4);
        assert!(w.xor_assign(&v).is_err());
    }

    #[test]
    fn custom_kernel_rejects_lower_entries() {
        let m = BinMatrix::from_rows(&[[1u8, 0], [1, 1]]).unwrap();
        assert!(KernelMatrix::custom(m).is_err());
        let m = BinMatrix::from_rows(&[[1u8, 1], [0, 1]]).unwrap();
        assert!(KernelMatrix::custom(m).is_ok());
    }

    proptest! {
        #[test]
        fn encode_twice_is_identity(bits in proptest::collection::vec(0u8..2, 16)) {
            let g = transform_matrix(16).unwrap();
            let u = BinVector::from_bits(bits).unwrap();
            let x = mat_vec_mul(&u, &g).unwrap();
            prop_assert_eq!(mat_vec_mul(&x, &g).unwrap(), u);
        }
    }
}
