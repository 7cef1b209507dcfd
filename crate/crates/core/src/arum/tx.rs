use serde::{Deserialize, Serialize};

use super::{ArumCode, ArumError, TransmissionConfig};
use crate::construct::{GlobalPos, Relocation};
use crate::gf2lin::{BinVector, KernelMatrix};
use crate::polar::{encode, PolarSpec};

/// Mask of transmission `t = z_history.len()`: `v[i] = Σ_{r<t} z_r[i] R[r][t]`.
pub fn generate_mask(z_history: &[BinVector], kernel: &KernelMatrix) -> Result<BinVector, ArumError> {
    let t = z_history.len();
    if t == 0 {
        return Err(ArumError::NoBlocks);
    }
    if kernel.size() <= t {
        return Err(ArumError::KernelTooSmall {
            size: kernel.size(),
            needed: t + 1,
        });
    }
    let mut v = BinVector::zeros(z_history[0].len());
    for (r, z) in z_history.iter().enumerate() {
        if kernel.get(r, t) == 1 {
            v.xor_assign(z)?;
        }
    }
    Ok(v)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub transmission: usize,
    pub config: TransmissionConfig,
    pub active: Vec<GlobalPos>,
    pub relocations: Vec<Relocation>,
    pub new_positions: Vec<usize>,
    /// Hex string of the mask, absent for the first transmission.
    pub mask: Option<String>,
    pub codeword: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub payload_len: usize,
    pub kernel: String,
    pub working_len: usize,
    pub transmissions: Vec<TranscriptEntry>,
}

/// Transmitter side of a session for one payload.
#[derive(Debug, Clone)]
pub struct Transmitter<'a> {
    code: &'a ArumCode,
    data: BinVector,
    u: Vec<BinVector>,
    z: Vec<BinVector>,
    masks: Vec<BinVector>,
}

impl<'a> Transmitter<'a> {
    pub fn new(code: &'a ArumCode, data: BinVector) -> Result<Self, ArumError> {
        if data.len() != code.payload_len() {
            return Err(ArumError::LengthMismatch {
                expected: code.payload_len(),
                got: data.len(),
            });
        }
        Ok(Self {
            code,
            data,
            u: Vec::new(),
            z: Vec::new(),
            masks: Vec::new(),
        })
    }

    pub fn sent(&self) -> usize {
        self.z.len()
    }

    /// u-vectors of the blocks sent so far.
    pub fn u_vectors(&self) -> &[BinVector] {
        &self.u
    }

    /// Unmasked codewords padded to the working length.
    pub fn codewords(&self) -> &[BinVector] {
        &self.z
    }

    /// Encodes, masks and rate-matches the next transmission.
    pub fn tx_step(&mut self) -> Result<BinVector, ArumError> {
        let t = self.z.len();
        if t >= self.code.max_transmissions() {
            return Err(ArumError::SessionExhausted {
                max: self.code.max_transmissions(),
            });
        }
        let layout = self.code.layout(t);
        let spec = PolarSpec::from_active(layout.config.mother_len, &layout.new_positions)?;
        let values: Vec<u8> = layout.new_bits.iter().map(|&b| self.data[b]).collect();
        let u = spec.place(&values, &[])?;
        let width = self.code.working_len();
        let z = encode(&u)?.resized(width);
        let mask = if t == 0 {
            BinVector::zeros(width)
        } else {
            generate_mask(&self.z, self.code.kernel())?
        };
        let mut x = z.clone();
        x.xor_assign(&mask)?;
        let out = layout.plan.apply(&x.resized(layout.config.mother_len))?;
        self.u.push(u);
        self.z.push(z);
        self.masks.push(mask);
        Ok(out)
    }

    pub fn transcript(&self) -> Transcript {
        Transcript {
            payload_len: self.code.payload_len(),
            kernel: self.code.kind().to_string(),
            working_len: self.code.working_len(),
            transmissions: (0..self.z.len())
                .map(|t| {
                    let l = self.code.layout(t);
                    TranscriptEntry {
                        transmission: t,
                        config: l.config,
                        active: l.active.clone(),
                        relocations: l.relocations.clone(),
                        new_positions: l.new_positions.clone(),
                        mask: (t > 0).then(|| self.masks[t].to_hex()),
                        codeword: self.z[t].to_hex(),
                    }
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf2lin::{kernel_matrix, KernelKind};

    fn v(bits: &[u8]) -> BinVector {
        BinVector::from_bits(bits.to_vec()).unwrap()
    }

    #[test]
    fn masks_per_kernel() {
        let z = [v(&[1, 0, 1, 1]), v(&[0, 1, 1, 0]), v(&[1, 1, 0, 0])];
        assert_eq!(generate_mask(&z, &kernel_matrix(KernelKind::If, 4)).unwrap(), BinVector::zeros(4));
        assert_eq!(generate_mask(&z, &kernel_matrix(KernelKind::Fl, 4)).unwrap(), z[0]);
        assert_eq!(generate_mask(&z[..1], &kernel_matrix(KernelKind::Fl, 2)).unwrap(), z[0]);
        assert_eq!(generate_mask(&z, &kernel_matrix(KernelKind::Arikan, 4)).unwrap().as_slice(), &[0, 0, 0, 1]);
        // third transmission under Arikan: column 3 of the kernel is (1, 0, 1)
        assert_eq!(generate_mask(&z[..2], &kernel_matrix(KernelKind::Arikan, 4)).unwrap(), z[0]);
        assert!(generate_mask(&z, &kernel_matrix(KernelKind::Fl, 3)).is_err());
        assert!(generate_mask(&[], &kernel_matrix(KernelKind::Fl, 3)).is_err());
    }
}
