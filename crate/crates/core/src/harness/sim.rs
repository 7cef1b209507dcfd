use std::time::Instant;

use log::info;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::HarnessError;
use crate::arum::{ArumCode, Receiver, TransmissionConfig, Transmitter};
use crate::chansim::{bpsk_awgn_llr, eb_n0_db, frame_rng, ChannelParams};
use crate::construct::{design_single, McOptions};
use crate::gf2lin::BinVector;
use crate::polar::{crc_attach, encode, select_by_crc, CrcConfig, ListDecoder, PolarSpec, SoftVector};
use crate::ratematch::{make_plan, RateMatchMode, RateMatchPlan};

/// One point of a BLER curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub snr_db: f64,
    pub es_n0: f64,
    pub eb_n0: f64,
    pub transmissions_used: usize,
    pub frames: u64,
    pub block_errors: u64,
    pub bler: f64,
    pub crc_false_pass: u64,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FrameOutcome {
    pub error: bool,
    pub false_pass: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
struct Tally {
    frames: u64,
    errors: u64,
    false_pass: u64,
    done: bool,
}

/// Random-stream key of frame `frame` at sweep point `point`.
pub fn frame_stream(point: usize, frame: u64) -> u64 {
    ((point as u64) << 40) | frame
}

/// Information bits of a frame followed by the CRC, if any.
pub fn frame_payload(seed: u64, stream: u64, info_bits: usize, crc: Option<&CrcConfig>) -> BinVector {
    let mut rng = frame_rng(seed, stream, 0);
    let info = BinVector::from_bools(&(0..info_bits).map(|_| rng.random::<bool>()).collect::<Vec<_>>());
    match crc {
        Some(cfg) => crc_attach(&info, cfg),
        None => info,
    }
}

/// Runs frames in parallel batches and counts them in frame order. Curve `c`
/// stops at the first frame where its error count reaches `max_errors`, or
/// at `max_frames`. `frame_fn(frame, active)` only has to evaluate curves
/// flagged active.
fn run_frames<F>(curves: usize, max_frames: u64, max_errors: u64, frame_fn: F) -> Result<Vec<Tally>, HarnessError>
where
    F: Fn(u64, &[bool]) -> Result<Vec<Option<FrameOutcome>>, HarnessError> + Sync,
{
    let mut tallies = vec![Tally::default(); curves];
    let batch = (rayon::current_num_threads() as u64 * 16).max(16);
    let mut next = 0u64;
    while next < max_frames && tallies.iter().any(|t| !t.done) {
        let end = (next + batch).min(max_frames);
        let active: Vec<bool> = tallies.iter().map(|t| !t.done).collect();
        let outcomes: Vec<Vec<Option<FrameOutcome>>> =
            (next..end).into_par_iter().map(|f| frame_fn(f, &active)).collect::<Result<_, _>>()?;
        for per_curve in outcomes {
            for (t, o) in tallies.iter_mut().zip(per_curve) {
                if t.done {
                    continue;
                }
                let o = o.expect("active curves are evaluated");
                t.frames += 1;
                t.errors += o.error as u64;
                t.false_pass += o.false_pass as u64;
                if t.errors >= max_errors {
                    t.done = true;
                }
            }
        }
        next = end;
    }
    Ok(tallies)
}

fn row(cfg: &ExperimentConfig, es_n0: f64, transmitted: usize, used: usize, t: &Tally, wall: f64) -> ResultRow {
    ResultRow {
        snr_db: es_n0,
        es_n0,
        eb_n0: eb_n0_db(es_n0, cfg.info_bits as f64 / transmitted as f64),
        transmissions_used: used,
        frames: t.frames,
        block_errors: t.errors,
        bler: if t.frames == 0 { 0.0 } else { t.errors as f64 / t.frames as f64 },
        crc_false_pass: t.false_pass,
        wall_time_s: if cfg.record_wall_time { wall } else { 0.0 },
    }
}

/// A single polar code with rate matching and its decoder configuration.
#[derive(Debug, Clone)]
pub struct SingleCode {
    plan: RateMatchPlan,
    spec: PolarSpec,
}

impl SingleCode {
    pub fn design(code: &TransmissionConfig, payload_len: usize, design_es_n0_db: f64) -> Result<Self, HarnessError> {
        let plan = make_plan(code.mother_len, code.tx_len, code.mode)?;
        let mean = ChannelParams::from_es_n0_db(design_es_n0_db)?.llr_mean();
        let (spec, _) = design_single(&plan, mean, payload_len)?;
        Ok(Self { plan, spec })
    }

    pub fn spec(&self) -> &PolarSpec {
        &self.spec
    }

    pub fn plan(&self) -> &RateMatchPlan {
        &self.plan
    }

    pub fn transmit(&self, payload: &BinVector) -> Result<BinVector, HarnessError> {
        let u = self.spec.place(payload.as_slice(), &[])?;
        Ok(self.plan.apply(&encode(&u)?)?)
    }

    /// CRC-aided list decoding of the received LLRs; returns the payload and
    /// the CRC verdict.
    pub fn receive(&self, received: &SoftVector, list_size: usize, crc: Option<&CrcConfig>) -> Result<(BinVector, bool), HarnessError> {
        let mut llr = self.plan.de_rate_match(received)?;
        if self.plan.mode() == RateMatchMode::Shorten {
            for &j in self.plan.known_zero() {
                llr.set(j, f64::INFINITY);
            }
        }
        let list = ListDecoder::new(self.spec.len(), list_size)?.decode(&llr, &self.spec)?;
        let active = self.spec.active_positions();
        let payloads: Vec<Vec<u8>> = list
            .iter()
            .map(|c| active.iter().map(|&i| c.decisions[i]).collect())
            .collect();
        let (index, pass) = match crc {
            Some(cfg) => {
                let sel = select_by_crc(payloads.iter().map(|p| p.as_slice()), cfg).expect("non-empty list");
                (sel.index, sel.crc_pass)
            }
            None => (0, true),
        };
        Ok((BinVector::from_bits(payloads[index].clone())?, pass))
    }
}

fn outcome(sent: &BinVector, decoded: &BinVector, crc_pass: bool, crc: bool) -> FrameOutcome {
    let error = sent != decoded;
    FrameOutcome {
        error,
        false_pass: crc && crc_pass && error,
    }
}

/// BLER sweep of a single code (`code`) under the experiment settings.
pub fn run_code(cfg: &ExperimentConfig, code: &TransmissionConfig) -> Result<Vec<ResultRow>, HarnessError> {
    cfg.validate()?;
    let crc = cfg.crc_config();
    let mut rows = Vec::new();
    for (p, es_n0) in cfg.snr.points().into_iter().enumerate() {
        let start = Instant::now();
        let design = code.design_es_n0_db.or(cfg.design_es_n0_db).unwrap_or(es_n0);
        let single = SingleCode::design(code, cfg.payload_len(), design)?;
        let params = ChannelParams::from_es_n0_db(es_n0)?;
        let tallies = run_frames(1, cfg.frames.max_frames, cfg.frames.max_errors, |f, _| {
            let stream = frame_stream(p, f);
            let payload = frame_payload(cfg.seed, stream, cfg.info_bits, crc.as_ref());
            let tx = single.transmit(&payload)?;
            let llr = bpsk_awgn_llr(&tx, &params, &mut frame_rng(cfg.seed, stream, 1));
            let (decoded, pass) = single.receive(&llr, cfg.list_size, crc.as_ref())?;
            Ok(vec![Some(outcome(&payload, &decoded, pass, crc.is_some()))])
        })?;
        let r = row(cfg, es_n0, code.tx_len, 1, &tallies[0], start.elapsed().as_secs_f64());
        info!("{:.2} dB: {}/{} errors, bler {:.3e}", es_n0, r.block_errors, r.frames, r.bler);
        rows.push(r);
    }
    Ok(rows)
}

/// Single-code sweep: the baseline when configured, otherwise the only
/// transmission.
pub fn run_single(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>, HarnessError> {
    let code = match (&cfg.baseline, cfg.transmissions.as_slice()) {
        (Some(b), _) => b.as_transmission(),
        (None, [one]) => *one,
        _ => {
            return Err(HarnessError::Config(
                "single-code simulation needs a baseline or exactly one transmission".into(),
            ))
        }
    };
    run_code(cfg, &code)
}

/// Outcomes of one ARUM frame after `1..=T` transmissions; curves flagged
/// inactive are skipped.
pub fn harq_frame(
    cfg: &ExperimentConfig,
    code: &ArumCode,
    params: &ChannelParams,
    stream: u64,
    active: &[bool],
) -> Result<Vec<Option<FrameOutcome>>, HarnessError> {
    let crc = cfg.crc_config();
    let payload = frame_payload(cfg.seed, stream, cfg.info_bits, crc.as_ref());
    let last = match active.iter().rposition(|&a| a) {
        Some(l) => l,
        None => return Ok(vec![None; active.len()]),
    };
    let mut tx = Transmitter::new(code, payload.clone())?;
    let mut rx = Receiver::new(code);
    let mut out = vec![None; active.len()];
    for t in 0..=last {
        let bits = tx.tx_step()?;
        let llr = bpsk_awgn_llr(&bits, params, &mut frame_rng(cfg.seed, stream, t as u64 + 1));
        rx.ingest(&llr)?;
        if active[t] {
            let d = rx.decode(cfg.list_size, crc.as_ref())?;
            out[t] = Some(outcome(&payload, &d.data, d.crc_pass, crc.is_some()));
        }
    }
    Ok(out)
}

pub fn build_arum(cfg: &ExperimentConfig, es_n0: f64) -> Result<ArumCode, HarnessError> {
    let mc = McOptions {
        samples: cfg.mc_samples,
        seed: cfg.seed,
    };
    Ok(ArumCode::new(
        cfg.payload_len(),
        cfg.kernel,
        &cfg.transmissions,
        cfg.design_es_n0_db.unwrap_or(es_n0),
        &mc,
    )?)
}

/// ARUM sweep; element `t` of the result is the curve after `t + 1`
/// transmissions.
pub fn run_harq(cfg: &ExperimentConfig) -> Result<Vec<Vec<ResultRow>>, HarnessError> {
    cfg.validate()?;
    let t_max = cfg.transmissions.len();
    let mut curves = vec![Vec::new(); t_max];
    for (p, es_n0) in cfg.snr.points().into_iter().enumerate() {
        let start = Instant::now();
        let code = build_arum(cfg, es_n0)?;
        let params = ChannelParams::from_es_n0_db(es_n0)?;
        let tallies = run_frames(t_max, cfg.frames.max_frames, cfg.frames.max_errors, |f, active| {
            harq_frame(cfg, &code, &params, frame_stream(p, f), active)
        })?;
        let wall = start.elapsed().as_secs_f64();
        for (t, tally) in tallies.iter().enumerate() {
            let r = row(cfg, es_n0, code.transmitted_len(t + 1), t + 1, tally, wall);
            info!(
                "{:.2} dB, {} transmissions: {}/{} errors, bler {:.3e}",
                es_n0,
                t + 1,
                r.block_errors,
                r.frames,
                r.bler
            );
            curves[t].push(r);
        }
    }
    Ok(curves)
}
