//! Active-bit relocation under masks.
//!
//! Transmission `t` carries a fresh polar codeword `z_t` of the bits whose
//! current copies sit on the least reliable synthesized channels, XORed with
//! a mask `v_t` built from earlier codewords through the kernel `R`. The
//! receiver decodes the blocks from the newest to the oldest; in older
//! blocks the relocated positions become known bits whose value is taken
//! from the already decoded newer copy.
//!
//! Blocks and transmissions are 0-based here: block `s` is the `s`-th
//! transmission.

mod combine;
mod rx;
mod tx;

pub use combine::step1_combine;
pub use rx::{DecodeOutcome, LlrBlock, Receiver};
pub use tx::{generate_mask, Transcript, TranscriptEntry, Transmitter};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chansim::{ChannelError, ChannelParams};
use crate::construct::{
    reliability_arum, select_active, BlockChannel, ConstructError, GlobalPos, McOptions, Relocation, ReliabilityVector,
};
use crate::gf2lin::{kernel_matrix, Gf2Error, KernelKind, KernelMatrix};
use crate::polar::{BitRole, KnownValue, PolarError, PolarSpec};
use crate::ratematch::{make_plan, RateMatchError, RateMatchMode, RateMatchPlan};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ArumError {
    #[error(transparent)]
    Construct(#[from] ConstructError),
    #[error(transparent)]
    Polar(#[from] PolarError),
    #[error(transparent)]
    RateMatch(#[from] RateMatchError),
    #[error(transparent)]
    Gf2(#[from] Gf2Error),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error("at least one transmission must be configured")]
    NoTransmissions,
    #[error("session allows {max} transmissions")]
    SessionExhausted { max: usize },
    #[error("transmission {0} carries no active bits, which is useless without a mask")]
    EmptyTransmission(usize),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("{got} decoded later blocks given, {expected} needed")]
    MissingDecodedBlocks { expected: usize, got: usize },
    #[error("kernel of size {size} cannot serve {needed} transmissions")]
    KernelTooSmall { size: usize, needed: usize },
    #[error("no blocks received")]
    NoBlocks,
}

/// One transmission: mother length `N_t`, transmitted length `M_t`, rate
/// matching mode and optional design Es/N0 (dB) for its construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransmissionConfig {
    pub mother_len: usize,
    pub tx_len: usize,
    pub mode: RateMatchMode,
    #[serde(default)]
    pub design_es_n0_db: Option<f64>,
}

impl TransmissionConfig {
    pub fn new(mother_len: usize, tx_len: usize, mode: RateMatchMode) -> Self {
        Self {
            mother_len,
            tx_len,
            mode,
            design_es_n0_db: None,
        }
    }
}

/// Construction result for one transmission.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TxLayout {
    pub config: TransmissionConfig,
    pub plan: RateMatchPlan,
    /// Active set after this transmission, ascending.
    pub active: Vec<GlobalPos>,
    pub relocations: Vec<Relocation>,
    /// Active u-positions of this block, ascending.
    pub new_positions: Vec<usize>,
    /// Data bit carried by each entry of `new_positions`.
    pub new_bits: Vec<usize>,
    /// Latest copy of every data bit after this transmission.
    pub latest: Vec<GlobalPos>,
    /// Reliabilities of blocks `0..=t` used for the selection.
    pub reliabilities: Vec<ReliabilityVector>,
}

/// Decoder roles of every block once `t` transmissions are available.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct DecodeLayout {
    pub specs: Vec<PolarSpec>,
    /// Start of each block inside the decision history (decode order is
    /// newest block first).
    pub offsets: Vec<usize>,
}

/// Static description of an ARUM session shared by transmitter and
/// receiver: kernel, per-transmission rate matching and construction.
#[derive(Debug, Clone)]
pub struct ArumCode {
    k: usize,
    kind: KernelKind,
    kernel: KernelMatrix,
    working_len: usize,
    layouts: Vec<TxLayout>,
    decode: Vec<DecodeLayout>,
}

impl ArumCode {
    /// Builds the session layout. Each transmission is designed at its own
    /// design SNR, or `default_design_es_n0_db` when unset.
    pub fn new(
        k: usize,
        kind: KernelKind,
        configs: &[TransmissionConfig],
        default_design_es_n0_db: f64,
        mc: &McOptions,
    ) -> Result<Self, ArumError> {
        if configs.is_empty() {
            return Err(ArumError::NoTransmissions);
        }
        let plans = configs
            .iter()
            .map(|c| make_plan(c.mother_len, c.tx_len, c.mode))
            .collect::<Result<Vec<_>, _>>()?;
        let working_len = configs.iter().map(|c| c.mother_len).max().unwrap();
        let kernels: Vec<KernelMatrix> = (1..=configs.len()).map(|t| kernel_matrix(kind, t)).collect();
        let mut channels = Vec::with_capacity(configs.len());
        let mut layouts: Vec<TxLayout> = Vec::with_capacity(configs.len());

        for (t, (cfg, plan)) in configs.iter().zip(&plans).enumerate() {
            let snr = cfg.design_es_n0_db.unwrap_or(default_design_es_n0_db);
            let mean = ChannelParams::from_es_n0_db(snr)?.llr_mean();
            channels.push(BlockChannel::from_plan(plan, mean, working_len));
            let rel = reliability_arum(&kernels[..=t], &channels, mc)?;
            let prev = layouts.last().map(|l| l.active.as_slice());
            let sel = select_active(prev, &rel, k, plan.forced_frozen_u())?;
            if t > 0 && sel.empty_block && kernels[t].is_identity() {
                return Err(ArumError::EmptyTransmission(t));
            }

            let (new_bits, latest) = match layouts.last() {
                None => ((0..k).collect::<Vec<_>>(), sel.active.clone()),
                Some(prev) => {
                    let mut latest = prev.latest.clone();
                    let mut new_bits = Vec::with_capacity(sel.relocations.len());
                    for r in &sel.relocations {
                        let bit = latest.iter().position(|p| *p == r.from).expect("vacated position carries a bit");
                        latest[bit] = r.to;
                        new_bits.push(bit);
                    }
                    (new_bits, latest)
                }
            };
            layouts.push(TxLayout {
                config: *cfg,
                plan: plan.clone(),
                active: sel.active,
                relocations: sel.relocations,
                new_positions: sel.new_positions,
                new_bits,
                latest,
                reliabilities: rel,
            });
        }

        let decode = (0..layouts.len())
            .map(|last| decode_layout(&layouts[..=last]))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            k,
            kind,
            kernel: kernels.last().unwrap().clone(),
            working_len,
            layouts,
            decode,
        })
    }

    pub fn payload_len(&self) -> usize {
        self.k
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn kernel(&self) -> &KernelMatrix {
        &self.kernel
    }

    /// Mask and padding length: the largest mother length of the session.
    pub fn working_len(&self) -> usize {
        self.working_len
    }

    pub fn max_transmissions(&self) -> usize {
        self.layouts.len()
    }

    pub fn layout(&self, t: usize) -> &TxLayout {
        &self.layouts[t]
    }

    pub fn layouts(&self) -> &[TxLayout] {
        &self.layouts
    }

    /// Decoder spec of block `s` when `received` transmissions are in.
    pub fn decode_spec(&self, received: usize, s: usize) -> &PolarSpec {
        &self.decode[received - 1].specs[s]
    }

    pub(crate) fn decode_layout(&self, received: usize) -> &DecodeLayout {
        &self.decode[received - 1]
    }

    /// Total transmitted bits after `received` transmissions.
    pub fn transmitted_len(&self, received: usize) -> usize {
        self.layouts[..received].iter().map(|l| l.config.tx_len).sum()
    }
}

fn decode_layout(layouts: &[TxLayout]) -> Result<DecodeLayout, ArumError> {
    let t = layouts.len();
    let final_layout = &layouts[t - 1];
    let mut offsets = vec![0; t];
    let mut acc = 0;
    for s in (0..t).rev() {
        offsets[s] = acc;
        acc += layouts[s].config.mother_len;
    }
    let mut specs = Vec::with_capacity(t);
    for (s, layout) in layouts.iter().enumerate() {
        let n = layout.config.mother_len;
        let mut roles = vec![BitRole::Frozen; n];
        for (&i, &bit) in layout.new_positions.iter().zip(&layout.new_bits) {
            let latest = final_layout.latest[bit];
            roles[i] = if latest == (GlobalPos { block: s, index: i }) {
                BitRole::Active
            } else {
                BitRole::Known(KnownValue::Decision(offsets[latest.block] + latest.index))
            };
        }
        specs.push(PolarSpec::new(roles)?);
    }
    Ok(DecodeLayout { specs, offsets })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig2_configs() -> Vec<TransmissionConfig> {
        vec![
            TransmissionConfig::new(8, 6, RateMatchMode::Puncture),
            TransmissionConfig::new(4, 3, RateMatchMode::Shorten),
        ]
    }

    #[test]
    fn toy_relocates_two_bits() {
        let code = ArumCode::new(4, KernelKind::If, &fig2_configs(), -3.0, &McOptions::default()).unwrap();
        assert_eq!(code.working_len(), 8);
        let l1 = code.layout(1);
        assert_eq!(l1.new_positions.len(), 2);
        assert_eq!(l1.relocations.len(), 2);
        assert!(!l1.new_positions.contains(&3), "shortened position stays frozen");
        // the vacated bits are the two least reliable of the first block
        let first = &code.layout(0).active;
        let rel0 = &l1.reliabilities[0];
        let mut ranked = first.clone();
        ranked.sort_by(|a, b| rel0.get(a.index).total_cmp(&rel0.get(b.index)));
        let mut vacated: Vec<GlobalPos> = l1.relocations.iter().map(|r| r.from).collect();
        vacated.sort_by(|a, b| rel0.get(a.index).total_cmp(&rel0.get(b.index)));
        assert_eq!(vacated, ranked[..2].to_vec());
        let spec1 = code.decode_spec(2, 0);
        let known = spec1.roles().iter().filter(|r| matches!(r, BitRole::Known(_))).count();
        assert_eq!(known, 2);
        assert_eq!(spec1.active_count(), 2);
        assert_eq!(code.decode_spec(2, 1).active_count(), 2);
    }

    #[test]
    fn toy_under_fl_has_one_usable_channel() {
        // punctured positions erase the check node and position 3 is
        // shortened, leaving a single candidate in the second block
        for snr in [-10.0, 0.0, 10.0] {
            let code = ArumCode::new(4, KernelKind::Fl, &fig2_configs(), snr, &McOptions::default()).unwrap();
            let rel = &code.layout(1).reliabilities[1];
            let usable = [0, 1, 2].iter().filter(|&&i| rel.get(i) > 0.0).count();
            assert_eq!(usable, 1, "{:?}", rel);
        }
    }

    #[test]
    fn latest_copies_cover_active_set() {
        let configs = vec![TransmissionConfig::new(16, 16, RateMatchMode::None); 4];
        for kind in [KernelKind::If, KernelKind::Fl, KernelKind::Arikan] {
            let mc = McOptions { samples: 10_000, seed: 3 };
            let code = ArumCode::new(8, kind, &configs, 1.0, &mc).unwrap();
            for l in code.layouts() {
                let mut latest = l.latest.clone();
                latest.sort();
                assert_eq!(latest, l.active);
            }
            for t in 1..=4 {
                let layout = code.decode_layout(t);
                let active: usize = layout.specs.iter().map(|s| s.active_count()).sum();
                assert_eq!(active, 8);
                assert_eq!(layout.offsets[t - 1], 0);
            }
        }
    }

    #[test]
    fn bad_configs() {
        let mc = McOptions::default();
        assert!(matches!(ArumCode::new(4, KernelKind::Fl, &[], 0.0, &mc), Err(ArumError::NoTransmissions)));
        let bad = [TransmissionConfig::new(8, 9, RateMatchMode::Puncture)];
        assert!(ArumCode::new(4, KernelKind::Fl, &bad, 0.0, &mc).is_err());
        let small = [TransmissionConfig::new(4, 4, RateMatchMode::None)];
        assert!(ArumCode::new(5, KernelKind::Fl, &small, 0.0, &mc).is_err());
    }

    #[test]
    fn useless_identity_retransmission_rejected() {
        // a tiny, very poor second block cannot beat any active position
        let mc = McOptions::default();
        let mut configs = vec![
            TransmissionConfig::new(8, 8, RateMatchMode::None),
            TransmissionConfig::new(2, 1, RateMatchMode::Puncture),
        ];
        configs[1].design_es_n0_db = Some(-30.0);
        configs[0].design_es_n0_db = Some(10.0);
        assert!(matches!(
            ArumCode::new(2, KernelKind::If, &configs, 0.0, &mc),
            Err(ArumError::EmptyTransmission(1))
        ));
        let code = ArumCode::new(2, KernelKind::Fl, &configs, 0.0, &mc).unwrap();
        assert!(code.layout(1).new_positions.is_empty());
    }
}
