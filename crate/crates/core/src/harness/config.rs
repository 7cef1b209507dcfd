use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::arum::TransmissionConfig;
use crate::gf2lin::KernelKind;
use crate::polar::{CrcConfig, CRC_WIDTH};
use crate::ratematch::{make_plan, RateMatchMode};

/// Es/N0 sweep in dB, `start..=stop` in steps of `step`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnrSweep {
    pub start_db: f64,
    pub stop_db: f64,
    pub step_db: f64,
}

impl SnrSweep {
    pub fn single(db: f64) -> Self {
        Self {
            start_db: db,
            stop_db: db,
            step_db: 1.0,
        }
    }

    pub fn points(&self) -> Vec<f64> {
        let count = ((self.stop_db - self.start_db) / self.step_db + 1e-9).floor() as usize + 1;
        (0..count).map(|i| self.start_db + i as f64 * self.step_db).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameBudget {
    pub max_frames: u64,
    #[serde(default = "default_max_errors")]
    pub max_errors: u64,
}

fn default_max_errors() -> u64 {
    100
}

impl Default for FrameBudget {
    fn default() -> Self {
        Self {
            max_frames: 100_000,
            max_errors: default_max_errors(),
        }
    }
}

/// A directly constructed single code used as reference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineSpec {
    pub mother_len: usize,
    pub tx_len: usize,
    pub mode: RateMatchMode,
}

impl BaselineSpec {
    pub fn as_transmission(&self) -> TransmissionConfig {
        TransmissionConfig::new(self.mother_len, self.tx_len, self.mode)
    }
}

fn default_true() -> bool {
    true
}

fn default_list_size() -> usize {
    8
}

fn default_kernel() -> KernelKind {
    KernelKind::Fl
}

fn default_mc_samples() -> usize {
    100_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: Option<String>,
    /// Information bits per payload; the CRC, if enabled, adds 16.
    pub info_bits: usize,
    #[serde(default = "default_true")]
    pub crc: bool,
    #[serde(default = "default_list_size")]
    pub list_size: usize,
    #[serde(default = "default_kernel")]
    pub kernel: KernelKind,
    pub transmissions: Vec<TransmissionConfig>,
    pub snr: SnrSweep,
    #[serde(default)]
    pub frames: FrameBudget,
    #[serde(default)]
    pub seed: u64,
    /// Construction SNR for every transmission without its own; the
    /// operating point when absent.
    #[serde(default)]
    pub design_es_n0_db: Option<f64>,
    #[serde(default)]
    pub baseline: Option<BaselineSpec>,
    #[serde(default = "default_mc_samples")]
    pub mc_samples: usize,
    /// When false the wall time column is written as zero so result files
    /// only depend on the configuration.
    #[serde(default = "default_true")]
    pub record_wall_time: bool,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Payload length: information bits plus CRC.
    pub fn payload_len(&self) -> usize {
        self.info_bits + if self.crc { CRC_WIDTH } else { 0 }
    }

    pub fn crc_config(&self) -> Option<CrcConfig> {
        self.crc.then(CrcConfig::default)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |msg: String| Err(HarnessError::Config(msg));
        if self.info_bits == 0 {
            return bad("info_bits must be positive".into());
        }
        if self.list_size == 0 {
            return bad("list_size must be positive".into());
        }
        if self.transmissions.is_empty() {
            return bad("at least one transmission is required".into());
        }
        if self.frames.max_frames == 0 || self.frames.max_errors == 0 {
            return bad("frame budget and error target must be positive".into());
        }
        if !(self.snr.step_db > 0.0) || !(self.snr.stop_db >= self.snr.start_db) {
            return bad("snr sweep needs step_db > 0 and stop_db >= start_db".into());
        }
        let mut codes: Vec<TransmissionConfig> = self.transmissions.clone();
        codes.extend(self.baseline.map(|b| b.as_transmission()));
        for (i, t) in codes.iter().enumerate() {
            if let Err(e) = make_plan(t.mother_len, t.tx_len, t.mode) {
                return bad(format!("code {i}: {e}"));
            }
        }
        let first = &self.transmissions[0];
        let room = first.mother_len - make_plan(first.mother_len, first.tx_len, first.mode).unwrap().forced_frozen_u().len();
        if self.payload_len() > room {
            return bad(format!("payload of {} bits does not fit the first transmission", self.payload_len()));
        }
        if self.mc_samples < crate::oracle::MC_MIN_SAMPLES {
            return bad(format!("mc_samples must be at least {}", crate::oracle::MC_MIN_SAMPLES));
        }
        Ok(())
    }
}

/// Named experiment presets.
pub mod presets {
    use super::*;

    pub const NAMES: &[&str] = &["fig4-desk", "fig5-desk", "toy"];

    pub fn by_name(name: &str) -> Option<ExperimentConfig> {
        match name {
            "fig4-desk" => Some(fig4_desk()),
            "fig5-desk" => Some(fig5_desk()),
            "toy" => Some(toy()),
            _ => None,
        }
    }

    /// Two transmissions, 128 then 160 bits (shortened from 256), 92
    /// information bits with CRC, against a directly constructed
    /// (288, 108) code.
    pub fn fig4_desk() -> ExperimentConfig {
        ExperimentConfig {
            name: Some("fig4-desk".into()),
            info_bits: 92,
            crc: true,
            list_size: 8,
            kernel: KernelKind::Fl,
            transmissions: vec![
                TransmissionConfig::new(128, 128, RateMatchMode::None),
                TransmissionConfig::new(256, 160, RateMatchMode::Shorten),
            ],
            snr: SnrSweep {
                start_db: -3.0,
                stop_db: 0.0,
                step_db: 0.25,
            },
            frames: FrameBudget {
                max_frames: 200_000,
                max_errors: 100,
            },
            seed: 1,
            design_es_n0_db: None,
            baseline: Some(BaselineSpec {
                mother_len: 512,
                tx_len: 288,
                mode: RateMatchMode::Puncture,
            }),
            mc_samples: default_mc_samples(),
            record_wall_time: true,
        }
    }

    /// Four transmissions of 128 bits against a directly constructed
    /// (512, 108) code.
    pub fn fig5_desk() -> ExperimentConfig {
        ExperimentConfig {
            name: Some("fig5-desk".into()),
            transmissions: vec![TransmissionConfig::new(128, 128, RateMatchMode::None); 4],
            snr: SnrSweep {
                start_db: -6.0,
                stop_db: 2.0,
                step_db: 0.25,
            },
            baseline: Some(BaselineSpec {
                mother_len: 512,
                tx_len: 512,
                mode: RateMatchMode::None,
            }),
            ..fig4_desk()
        }
    }

    /// Two-transmission toy: 8 bits punctured to 6, then 4 shortened to 3.
    /// Constructed at -3 dB under IF, where two bits move to the second
    /// block; under FL the second block has a single usable channel.
    pub fn toy() -> ExperimentConfig {
        ExperimentConfig {
            name: Some("toy".into()),
            info_bits: 4,
            crc: false,
            list_size: 4,
            kernel: KernelKind::If,
            transmissions: vec![
                TransmissionConfig::new(8, 6, RateMatchMode::Puncture),
                TransmissionConfig::new(4, 3, RateMatchMode::Shorten),
            ],
            snr: SnrSweep::single(2.0),
            frames: FrameBudget {
                max_frames: 1000,
                max_errors: 100,
            },
            seed: 1,
            design_es_n0_db: Some(-3.0),
            baseline: None,
            mc_samples: default_mc_samples(),
            record_wall_time: true,
        }
    }
}
