use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::sim::ResultRow;
use super::HarnessError;
use crate::arum::ArumCode;

/// `git describe` of the build, or the package version outside a checkout.
pub const VERSION: &str = env!("POLAR_ARUM_VERSION");

/// Run record written next to the result files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub outputs: Vec<String>,
    pub wall_time_s: f64,
}

impl Manifest {
    pub fn new(command: &str, config: &ExperimentConfig, outputs: Vec<String>, wall_time_s: f64) -> Self {
        Self {
            command: command.to_string(),
            version: VERSION.to_string(),
            seed: config.seed,
            config: config.clone(),
            outputs,
            wall_time_s: if config.record_wall_time { wall_time_s } else { 0.0 },
        }
    }
}

pub fn write_rows_csv(path: &Path, rows: &[ResultRow]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rows_csv(path: &Path) -> Result<Vec<ResultRow>, HarnessError> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}

pub fn write_manifest(path: &Path, manifest: &Manifest) -> Result<(), HarnessError> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, manifest)?;
    writeln!(w)?;
    Ok(())
}

/// Active set after every transmission: one row per data bit with its
/// latest block and position.
pub fn write_active_csv<W: Write>(out: W, code: &ArumCode) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["transmission", "data_bit", "block", "position", "moved"])?;
    for t in 0..code.max_transmissions() {
        let layout = code.layout(t);
        for (bit, pos) in layout.latest.iter().enumerate() {
            let moved = layout.new_bits.contains(&bit) && t > 0;
            w.write_record([
                t.to_string(),
                bit.to_string(),
                pos.block.to_string(),
                pos.index.to_string(),
                (moved as u8).to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::presets;

    #[test]
    fn rows_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rows.csv");
        let rows = vec![ResultRow {
            snr_db: -1.5,
            es_n0: -1.5,
            eb_n0: 0.25,
            transmissions_used: 2,
            frames: 1000,
            block_errors: 12,
            bler: 0.012,
            crc_false_pass: 0,
            wall_time_s: 0.0,
        }];
        write_rows_csv(&path, &rows).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with(
            "snr_db,es_n0,eb_n0,transmissions_used,frames,block_errors,bler,crc_false_pass,wall_time_s\n"
        ));
        assert_eq!(read_rows_csv(&path).unwrap(), rows);
    }

    #[test]
    fn manifest_echoes_config() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.json");
        let cfg = presets::toy();
        write_manifest(&path, &Manifest::new("harq", &cfg, vec!["a.csv".into()], 1.5)).unwrap();
        let back: Manifest = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        assert_eq!(back.config, cfg);
        assert_eq!(back.seed, cfg.seed);
        assert_eq!(back.wall_time_s, 1.5);
        assert!(!back.version.is_empty());
    }
}
