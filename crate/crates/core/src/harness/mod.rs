//! Experiment driver: configurations, BLER sweeps, verification suites and
//! result files.

pub mod config;
pub mod output;
pub mod sim;
pub mod verify;

pub use config::{presets, BaselineSpec, ExperimentConfig, FrameBudget, SnrSweep};
pub use output::{write_manifest, write_rows_csv, Manifest, VERSION};
pub use sim::{run_code, run_harq, run_single, FrameOutcome, ResultRow, SingleCode};
pub use verify::{run_suites, VerifyReport, VerifySuite};

use thiserror::Error;

use crate::arum::ArumError;
use crate::chansim::ChannelError;
use crate::construct::ConstructError;
use crate::gf2lin::Gf2Error;
use crate::oracle::OracleError;
use crate::polar::PolarError;
use crate::ratematch::RateMatchError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Arum(#[from] ArumError),
    #[error(transparent)]
    Construct(#[from] ConstructError),
    #[error(transparent)]
    Polar(#[from] PolarError),
    #[error(transparent)]
    RateMatch(#[from] RateMatchError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Gf2(#[from] Gf2Error),
    #[error("verification failed: {0}")]
    VerifyFailed(String),
}

impl HarnessError {
    /// Process exit status for the command line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::VerifyFailed(_) => 3,
            _ => 1,
        }
    }
}
