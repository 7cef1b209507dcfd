use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use log::info;

use polar_arum::construct::write_reliability_csv;
use polar_arum::harness::output::write_active_csv;
use polar_arum::harness::sim::build_arum;
use polar_arum::harness::{
    presets, run_harq, run_single, run_suites, write_manifest, write_rows_csv, ExperimentConfig, HarnessError,
    Manifest, VerifySuite,
};

#[derive(Parser)]
#[command(name = "arum", version = polar_arum::harness::VERSION, about = "Polar ARUM HARQ experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON experiment configuration.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in configuration: fig4-desk, fig5-desk or toy.
    #[arg(long)]
    preset: Option<String>,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Write reliability and active-set tables.
    Construct(Common),
    /// BLER sweep of a single code (the baseline, if configured).
    Simulate(Common),
    /// BLER sweep of an ARUM session after each transmission.
    Harq(Common),
    /// Run verification suites and write a JSON report.
    Verify {
        /// Suites to run; all when omitted.
        #[arg(long = "suite")]
        suites: Vec<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load(common: &Common) -> Result<ExperimentConfig, HarnessError> {
    match (&common.config, &common.preset) {
        (Some(path), _) => {
            let text = fs::read_to_string(path)
                .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
            ExperimentConfig::from_json(&text)
        }
        (None, Some(name)) => presets::by_name(name).ok_or_else(|| {
            HarnessError::Config(format!("unknown preset {name:?}; known: {}", presets::NAMES.join(", ")))
        }),
        (None, None) => Err(HarnessError::Config("either --config or --preset is required".into())),
    }
}

fn prepare(out: &Path) -> Result<(), HarnessError> {
    fs::create_dir_all(out)?;
    Ok(())
}

fn construct(common: &Common) -> Result<(), HarnessError> {
    let cfg = load(common)?;
    prepare(&common.out)?;
    let start = Instant::now();
    let snr = cfg.design_es_n0_db.unwrap_or(cfg.snr.start_db);
    let code = build_arum(&cfg, snr)?;
    let mut outputs = Vec::new();
    for t in 0..code.max_transmissions() {
        let name = format!("reliability_t{}.csv", t + 1);
        write_reliability_csv(BufWriter::new(File::create(common.out.join(&name))?), &code.layout(t).reliabilities)?;
        outputs.push(name);
    }
    write_active_csv(BufWriter::new(File::create(common.out.join("active.csv"))?), &code)?;
    outputs.push("active.csv".into());
    let manifest = Manifest::new("construct", &cfg, outputs, start.elapsed().as_secs_f64());
    write_manifest(&common.out.join("manifest.json"), &manifest)
}

fn simulate(common: &Common) -> Result<(), HarnessError> {
    let cfg = load(common)?;
    prepare(&common.out)?;
    let start = Instant::now();
    let rows = run_single(&cfg)?;
    write_rows_csv(&common.out.join("single.csv"), &rows)?;
    let manifest = Manifest::new("simulate", &cfg, vec!["single.csv".into()], start.elapsed().as_secs_f64());
    write_manifest(&common.out.join("manifest.json"), &manifest)
}

fn harq(common: &Common) -> Result<(), HarnessError> {
    let cfg = load(common)?;
    prepare(&common.out)?;
    let start = Instant::now();
    let mut outputs = Vec::new();
    for (t, rows) in run_harq(&cfg)?.iter().enumerate() {
        let name = format!("harq_t{}.csv", t + 1);
        write_rows_csv(&common.out.join(&name), rows)?;
        outputs.push(name);
    }
    if cfg.baseline.is_some() {
        write_rows_csv(&common.out.join("baseline.csv"), &run_single(&cfg)?)?;
        outputs.push("baseline.csv".into());
    }
    let manifest = Manifest::new("harq", &cfg, outputs, start.elapsed().as_secs_f64());
    write_manifest(&common.out.join("manifest.json"), &manifest)
}

fn verify(suites: &[String], config: Option<&Path>, out: &Path) -> Result<(), HarnessError> {
    let mut selected = suites.iter().map(|s| s.parse()).collect::<Result<Vec<VerifySuite>, _>>()?;
    if let Some(path) = config {
        // optional file: {"suites": ["kernels", ...]}
        #[derive(serde::Deserialize)]
        struct VerifyConfig {
            suites: Vec<VerifySuite>,
        }
        let text = fs::read_to_string(path).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        let vc: VerifyConfig = serde_json::from_str(&text).map_err(|e| HarnessError::Config(e.to_string()))?;
        selected.extend(vc.suites);
    }
    if selected.is_empty() {
        selected = VerifySuite::ALL.to_vec();
    }
    prepare(out)?;
    let report = run_suites(&selected)?;
    let file = BufWriter::new(File::create(out.join("verify.json"))?);
    serde_json::to_writer_pretty(file, &report)?;
    for s in &report.suites {
        info!("{}: {}", s.suite, if s.passed { "pass" } else { "FAIL" });
    }
    if report.passed {
        Ok(())
    } else {
        let failed: Vec<String> = report
            .suites
            .iter()
            .flat_map(|s| s.checks.iter().filter(|c| !c.passed).map(|c| c.name.clone()))
            .collect();
        Err(HarnessError::VerifyFailed(failed.join(", ")))
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Construct(c) => construct(c),
        Command::Simulate(c) => simulate(c),
        Command::Harq(c) => harq(c),
        Command::Verify { suites, config, out } => verify(suites, config.as_deref(), out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
