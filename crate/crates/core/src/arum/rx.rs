use super::{step1_combine, ArumCode, ArumError};
use crate::gf2lin::BinVector;
use crate::polar::{encode, select_by_crc, CrcConfig, ListDecoder, ListSeed, ScDecoder, SoftVector};

/// De-rate-matched soft values of one block, padded to the working length,
/// together with its z-domain zero knowledge.
#[derive(Debug, Clone, PartialEq)]
pub struct LlrBlock {
    llr: SoftVector,
    known_zero: Vec<bool>,
}

impl LlrBlock {
    pub fn new(llr: SoftVector, known_zero: Vec<bool>) -> Result<Self, ArumError> {
        if llr.len() != known_zero.len() {
            return Err(ArumError::LengthMismatch {
                expected: llr.len(),
                got: known_zero.len(),
            });
        }
        Ok(Self { llr, known_zero })
    }

    pub fn len(&self) -> usize {
        self.llr.len()
    }

    pub fn is_empty(&self) -> bool {
        self.llr.is_empty()
    }

    #[inline]
    pub fn llr(&self, i: usize) -> f64 {
        self.llr[i]
    }

    #[inline]
    pub fn is_known_zero(&self, i: usize) -> bool {
        self.known_zero[i]
    }

    pub fn soft(&self) -> &SoftVector {
        &self.llr
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeOutcome {
    /// Payload estimate (information bits followed by the CRC, if any).
    pub data: BinVector,
    /// CRC verdict of the chosen path; `true` when no CRC is used.
    pub crc_pass: bool,
    pub metric: f64,
    /// u-decisions of every block of the chosen path, in block order.
    pub blocks: Vec<BinVector>,
}

struct JointPath {
    history: Vec<u8>,
    /// Codewords of the blocks decoded so far, oldest first.
    codewords: Vec<BinVector>,
    metric: f64,
}

/// Receiver side of a session: stores the received blocks and runs the
/// inter-block list decoder.
#[derive(Debug, Clone)]
pub struct Receiver<'a> {
    code: &'a ArumCode,
    blocks: Vec<LlrBlock>,
}

impl<'a> Receiver<'a> {
    pub fn new(code: &'a ArumCode) -> Self {
        Self {
            code,
            blocks: Vec::new(),
        }
    }

    pub fn received(&self) -> usize {
        self.blocks.len()
    }

    pub fn blocks(&self) -> &[LlrBlock] {
        &self.blocks
    }

    /// Adds the channel LLRs of the next transmission.
    pub fn ingest(&mut self, received: &SoftVector) -> Result<(), ArumError> {
        let t = self.blocks.len();
        if t >= self.code.max_transmissions() {
            return Err(ArumError::SessionExhausted {
                max: self.code.max_transmissions(),
            });
        }
        let plan = &self.code.layout(t).plan;
        let width = self.code.working_len();
        let llr = plan.de_rate_match(received)?.resized(width);
        let mut known_zero = vec![false; width];
        for &j in plan.known_zero() {
            known_zero[j] = true;
        }
        known_zero[plan.mother_len()..].fill(true);
        self.blocks.push(LlrBlock::new(llr, known_zero)?);
        Ok(())
    }

    /// Joint list decoding from the newest block down to the first; the list
    /// of each block seeds the next. With a CRC, the best path passing it is
    /// chosen.
    pub fn decode(&self, list_size: usize, crc: Option<&CrcConfig>) -> Result<DecodeOutcome, ArumError> {
        let t = self.blocks.len();
        if t == 0 {
            return Err(ArumError::NoBlocks);
        }
        let layout = self.code.decode_layout(t);
        let kernel = self.code.kernel();
        let shared = kernel.leading(t)?.is_identity();
        let width = self.code.working_len();

        let mut paths = vec![JointPath {
            history: Vec::new(),
            codewords: Vec::new(),
            metric: 0.0,
        }];
        for s in (0..t).rev() {
            let n = self.code.layout(s).config.mother_len;
            let llrs: Vec<SoftVector> = if shared {
                let one = step1_combine(&self.blocks, &paths[0].codewords, kernel, s)?.resized(n);
                vec![one; paths.len()]
            } else {
                paths
                    .iter()
                    .map(|p| Ok(step1_combine(&self.blocks, &p.codewords, kernel, s)?.resized(n)))
                    .collect::<Result<_, ArumError>>()?
            };
            let seeds: Vec<ListSeed<'_>> = paths
                .iter()
                .zip(&llrs)
                .map(|(p, llr)| ListSeed {
                    llr,
                    history: &p.history,
                    metric: p.metric,
                })
                .collect();
            let mut decoder = ListDecoder::new(n, list_size)?;
            let candidates = decoder.decode_seeded(&layout.specs[s], &seeds)?;
            let mut next = Vec::with_capacity(candidates.len());
            for c in candidates {
                let parent = &paths[c.seed];
                let mut history = parent.history.clone();
                history.extend_from_slice(c.decisions.as_slice());
                let mut codewords = Vec::with_capacity(parent.codewords.len() + 1);
                if s > 0 {
                    codewords.push(encode(&c.decisions)?.resized(width));
                }
                codewords.extend(parent.codewords.iter().cloned());
                next.push(JointPath {
                    history,
                    codewords,
                    metric: c.metric,
                });
            }
            paths = next;
        }

        let latest = &self.code.layout(t - 1).latest;
        let payloads: Vec<Vec<u8>> = paths
            .iter()
            .map(|p| latest.iter().map(|pos| p.history[layout.offsets[pos.block] + pos.index]).collect())
            .collect();
        let (index, crc_pass) = match crc {
            Some(cfg) => {
                let sel = select_by_crc(payloads.iter().map(|d| d.as_slice()), cfg).expect("non-empty list");
                (sel.index, sel.crc_pass)
            }
            None => (0, true),
        };
        let chosen = &paths[index];
        let blocks = (0..t)
            .map(|s| {
                let start = layout.offsets[s];
                let n = self.code.layout(s).config.mother_len;
                BinVector::from_bits(chosen.history[start..start + n].to_vec())
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(DecodeOutcome {
            data: BinVector::from_bits(payloads[index].clone())?,
            crc_pass,
            metric: chosen.metric,
            blocks,
        })
    }

    /// Decision LLRs of every u-position of every block when all later
    /// blocks and all earlier positions are set to the true values.
    pub fn genie_bit_llrs(&self, true_u: &[BinVector]) -> Result<Vec<Vec<f64>>, ArumError> {
        let t = self.blocks.len();
        if true_u.len() != t {
            return Err(ArumError::LengthMismatch {
                expected: t,
                got: true_u.len(),
            });
        }
        let width = self.code.working_len();
        let z: Vec<BinVector> = true_u
            .iter()
            .map(|u| Ok(encode(u)?.resized(width)))
            .collect::<Result<_, ArumError>>()?;
        let mut out = Vec::with_capacity(t);
        for s in 0..t {
            let n = self.code.layout(s).config.mother_len;
            let llr = step1_combine(&self.blocks, &z[s + 1..], self.code.kernel(), s)?.resized(n);
            out.push(ScDecoder::new(n)?.genie_bit_llrs(&llr, &true_u[s])?);
        }
        Ok(out)
    }
}
