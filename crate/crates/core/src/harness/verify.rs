use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::arum::{step1_combine, ArumCode, LlrBlock, Receiver, TransmissionConfig, Transmitter};
use crate::chansim::{bpsk_awgn_llr, frame_rng, ChannelParams};
use crate::construct::{reliability_single, McOptions};
use crate::gf2lin::{kernel_matrix, BinVector, KernelKind};
use crate::oracle::{bit_channel_posteriors, mc_density, step1_marginal, Transform};
use crate::polar::{encode, CrcConfig, PolarSpec, ScDecoder, SoftVector};
use crate::ratematch::{make_plan, RateMatchMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerifySuite {
    Kernels,
    Oracle,
    Ratematch,
    ArumEquivalence,
}

impl VerifySuite {
    pub const ALL: [VerifySuite; 4] = [
        VerifySuite::Kernels,
        VerifySuite::Oracle,
        VerifySuite::Ratematch,
        VerifySuite::ArumEquivalence,
    ];
}

impl fmt::Display for VerifySuite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VerifySuite::Kernels => "kernels",
            VerifySuite::Oracle => "oracle",
            VerifySuite::Ratematch => "ratematch",
            VerifySuite::ArumEquivalence => "arum-equivalence",
        })
    }
}

impl FromStr for VerifySuite {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        VerifySuite::ALL
            .into_iter()
            .find(|v| v.to_string() == s)
            .ok_or_else(|| HarnessError::Config(format!("unknown suite {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: VerifySuite,
    pub passed: bool,
    pub checks: Vec<CheckResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub passed: bool,
    pub suites: Vec<SuiteReport>,
}

/// Relative deviation with a small absolute floor so values near zero do not
/// blow up.
pub fn rel_error(got: f64, want: f64) -> f64 {
    if got == want {
        return 0.0;
    }
    (got - want).abs() / got.abs().max(want.abs()).max(1e-3)
}

fn check(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> CheckResult {
    CheckResult {
        name: name.into(),
        passed,
        detail: detail.into(),
    }
}

/// Largest relative error between SC genie decision LLRs and the
/// brute-force posteriors over `instances` random channels of length `n`.
pub fn sc_oracle_max_error(n: usize, instances: usize, seed: u64) -> Result<f64, HarnessError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dec = ScDecoder::new(n)?;
    let mut worst = 0.0f64;
    for _ in 0..instances {
        let llr: Vec<f64> = (0..n).map(|_| rng.random_range(-8.0..8.0)).collect();
        let u = BinVector::from_bits((0..n).map(|_| rng.random_range(0..2u8)).collect::<Vec<_>>())?;
        let got = dec.genie_bit_llrs(&SoftVector::new(llr.clone()).expect("finite"), &u)?;
        for (i, g) in got.iter().enumerate() {
            let want = bit_channel_posteriors(&llr, &u.as_slice()[..i])?;
            worst = worst.max(rel_error(*g, want));
        }
    }
    Ok(worst)
}

/// Largest relative error between the combining step and the exact
/// marginalization for `t` blocks; known-zero positions and decoded later
/// blocks are drawn at random.
pub fn step1_oracle_max_error(kind: KernelKind, t: usize, instances: usize, seed: u64) -> Result<f64, HarnessError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kernel = kernel_matrix(kind, t);
    let width = 4;
    let mut worst = 0.0f64;
    for _ in 0..instances {
        let blocks: Vec<LlrBlock> = (0..t)
            .map(|_| {
                let l: Vec<f64> = (0..width).map(|_| rng.random_range(-8.0..8.0)).collect();
                let kz: Vec<bool> = (0..width).map(|_| rng.random_bool(0.15)).collect();
                LlrBlock::new(SoftVector::new(l).expect("finite"), kz)
            })
            .collect::<Result<_, _>>()?;
        for s in 0..t {
            let later: Vec<BinVector> = (s + 1..t)
                .map(|k| {
                    let bits: Vec<u8> = (0..width)
                        .map(|i| if blocks[k].is_known_zero(i) { 0 } else { rng.random_range(0..2u8) })
                        .collect();
                    BinVector::from_bits(bits)
                })
                .collect::<Result<_, _>>()?;
            let got = step1_combine(&blocks, &later, &kernel, s)?;
            for i in 0..width {
                let known: Vec<Option<u8>> = (0..t)
                    .map(|r| {
                        if r > s {
                            Some(later[r - s - 1][i])
                        } else if blocks[r].is_known_zero(i) {
                            Some(0)
                        } else {
                            None
                        }
                    })
                    .collect();
                let llrs: Vec<f64> = blocks.iter().map(|b| b.llr(i)).collect();
                let want = step1_marginal(&kernel, &llrs, &known, s)?;
                worst = worst.max(rel_error(got[i], want));
            }
        }
    }
    Ok(worst)
}

/// Frames on which the two-block FL decode and the equivalent double-length
/// code disagree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TnReport {
    pub frames: usize,
    pub mismatches: usize,
    /// Frames where the ARUM decode was wrong (for context only).
    pub decode_errors: usize,
}

/// Two FL transmissions of length `n` without rate matching, decoded with
/// `L = 1`, against successive cancellation of the length-`2n` code with the
/// same active and known bits.
pub fn tn_equivalence(n: usize, k: usize, es_n0_db: f64, frames: usize, seed: u64) -> Result<TnReport, HarnessError> {
    let configs = [TransmissionConfig::new(n, n, RateMatchMode::None); 2];
    let code = ArumCode::new(k, KernelKind::Fl, &configs, es_n0_db, &McOptions::default())?;
    // u of the long code is (u of block 1, u of block 0); decision indices in
    // the block specs already count from the start of block 1
    let mut roles = code.decode_spec(2, 1).roles().to_vec();
    roles.extend_from_slice(code.decode_spec(2, 0).roles());
    let long_spec = PolarSpec::new(roles)?;
    let mut sc = ScDecoder::new(2 * n)?;
    let params = ChannelParams::from_es_n0_db(es_n0_db)?;

    let mut report = TnReport {
        frames,
        mismatches: 0,
        decode_errors: 0,
    };
    for f in 0..frames as u64 {
        let mut rng = frame_rng(seed, f, 0);
        let data = BinVector::from_bits((0..k).map(|_| rng.random_range(0..2u8)).collect::<Vec<_>>())?;
        let mut tx = Transmitter::new(&code, data.clone())?;
        let mut rx = Receiver::new(&code);
        let mut llrs = Vec::new();
        for t in 0..2 {
            let bits = tx.tx_step()?;
            let llr = bpsk_awgn_llr(&bits, &params, &mut frame_rng(seed, f, t + 1));
            rx.ingest(&llr)?;
            llrs.push(llr);
        }
        let joint = rx.decode(1, None)?;

        let mut long = vec![0.0; 2 * n];
        for j in 0..n {
            long[2 * j] = llrs[1][j];
            long[2 * j + 1] = llrs[0][j];
        }
        let u = sc.decode(&SoftVector::new(long).expect("finite"), &long_spec)?;
        let mut blocks = joint.blocks.iter();
        let (b0, b1) = (blocks.next().unwrap(), blocks.next().unwrap());
        if b1.as_slice() != &u.as_slice()[..n] || b0.as_slice() != &u.as_slice()[n..] {
            report.mismatches += 1;
        }
        if joint.data != data {
            report.decode_errors += 1;
        }
    }
    Ok(report)
}

/// Frames on which FL and ARIKAN sessions of three transmissions differ in
/// any transmitted bit or in any decode after 1, 2 or 3 transmissions.
pub fn fl_arikan_disagreements(n: usize, info_bits: usize, es_n0_db: f64, frames: usize, seed: u64) -> Result<usize, HarnessError> {
    let crc = CrcConfig::default();
    let k = info_bits + crate::polar::CRC_WIDTH;
    let configs = [TransmissionConfig::new(n, n, RateMatchMode::None); 3];
    let mc = McOptions::default();
    let fl = ArumCode::new(k, KernelKind::Fl, &configs, es_n0_db, &mc)?;
    let ar = ArumCode::new(k, KernelKind::Arikan, &configs, es_n0_db, &mc)?;
    let params = ChannelParams::from_es_n0_db(es_n0_db)?;
    let mut bad = 0;
    for f in 0..frames as u64 {
        let mut rng = frame_rng(seed, f, 0);
        let info = BinVector::from_bits((0..info_bits).map(|_| rng.random_range(0..2u8)).collect::<Vec<_>>())?;
        let data = crate::polar::crc_attach(&info, &crc);
        let mut sessions = [
            (Transmitter::new(&fl, data.clone())?, Receiver::new(&fl)),
            (Transmitter::new(&ar, data.clone())?, Receiver::new(&ar)),
        ];
        let mut differ = false;
        for t in 0..3u64 {
            let mut bits = Vec::new();
            let mut outs = Vec::new();
            for (tx, rx) in sessions.iter_mut() {
                let b = tx.tx_step()?;
                let llr = bpsk_awgn_llr(&b, &params, &mut frame_rng(seed, f, t + 1));
                rx.ingest(&llr)?;
                outs.push(rx.decode(8, Some(&crc))?);
                bits.push(b);
            }
            differ |= bits[0] != bits[1] || outs[0] != outs[1];
        }
        bad += differ as usize;
    }
    Ok(bad)
}

/// Top-`count` positions by Gaussian approximation and by Monte Carlo
/// density estimation for a length-`n` code at `es_n0_db`, both ascending.
pub fn ga_mc_top_sets(n: usize, es_n0_db: f64, count: usize, samples: usize, seed: u64) -> Result<(Vec<usize>, Vec<usize>), HarnessError> {
    let mean = ChannelParams::from_es_n0_db(es_n0_db)?.llr_mean();
    let init = vec![mean; n];
    let ga = reliability_single(&init)?;
    let mc = mc_density(&Transform::Polar, &init, samples, seed)?;
    let top = |v: &[f64]| {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&a, &b| v[b].total_cmp(&v[a]).then(a.cmp(&b)));
        let mut t = idx[..count].to_vec();
        t.sort_unstable();
        t
    };
    Ok((top(ga.as_slice()), top(&mc.means)))
}

fn kernels_suite() -> Vec<CheckResult> {
    let mut out = Vec::new();
    for kind in [KernelKind::If, KernelKind::Fl, KernelKind::Arikan] {
        let mut failures = Vec::new();
        for t in 1..=16 {
            let k = kernel_matrix(kind, t);
            if !k.matrix().is_upper_unitriangular() {
                failures.push(format!("t={t} not upper unitriangular"));
            }
            if !k.is_nested_in(&kernel_matrix(kind, t + 1)) {
                failures.push(format!("t={t} not nested in t={}", t + 1));
            }
        }
        out.push(check(format!("{kind} nesting t<=16"), failures.is_empty(), failures.join("; ")));
    }
    let same = (1..=3).all(|t| kernel_matrix(KernelKind::Fl, t).matrix() == kernel_matrix(KernelKind::Arikan, t).matrix());
    out.push(check("fl equals arikan for t<=3", same, ""));
    out
}

fn oracle_suite() -> Result<Vec<CheckResult>, HarnessError> {
    let mut out = Vec::new();
    for n in [2, 4, 8] {
        let e = sc_oracle_max_error(n, 200, 1)?;
        out.push(check(format!("sc posteriors n={n}"), e <= 1e-9, format!("max relative error {e:.3e}")));
    }
    for kind in [KernelKind::If, KernelKind::Fl, KernelKind::Arikan] {
        for t in [2, 3] {
            let e = step1_oracle_max_error(kind, t, 200, 2)?;
            out.push(check(format!("combine {kind} t={t}"), e <= 1e-9, format!("max relative error {e:.3e}")));
        }
    }
    Ok(out)
}

fn ratematch_suite() -> Result<Vec<CheckResult>, HarnessError> {
    let mut out = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for n in [8usize, 16, 64] {
        for mode in [RateMatchMode::Puncture, RateMatchMode::Shorten, RateMatchMode::Repeat] {
            let lens: Vec<usize> = match mode {
                RateMatchMode::Repeat => vec![n + 1, n + n / 2, 3 * n],
                _ => vec![n / 2, n - 1, 3 * n / 4],
            };
            for m in lens {
                let plan = make_plan(n, m, mode)?;
                let mut failures = 0;
                for _ in 0..200 {
                    let mut u = BinVector::from_bits((0..n).map(|_| rng.random_range(0..2u8)).collect::<Vec<_>>())?;
                    for &i in plan.forced_frozen_u() {
                        u.set(i, 0);
                    }
                    let x = encode(&u)?;
                    if plan.known_zero().iter().any(|&j| x[j] != 0) {
                        failures += 1;
                        continue;
                    }
                    // noiseless round trip through the rate matcher
                    let tx = plan.apply(&x)?;
                    let soft = SoftVector::certain(tx.as_slice());
                    let back = plan.de_rate_match(&soft)?;
                    let skipped: Vec<usize> = match mode {
                        RateMatchMode::Repeat => Vec::new(),
                        _ => plan.affected().to_vec(),
                    };
                    let ok = (0..n)
                        .filter(|j| !skipped.contains(j))
                        .all(|j| (back[j] > 0.0) == (x[j] == 0));
                    failures += !ok as usize;
                }
                out.push(check(format!("{mode:?} {n}->{m}"), failures == 0, format!("{failures} failures")));
            }
        }
    }
    Ok(out)
}

fn equivalence_suite() -> Result<Vec<CheckResult>, HarnessError> {
    let r = tn_equivalence(64, 40, 0.0, 200, 4)?;
    let d = fl_arikan_disagreements(32, 8, 0.0, 100, 5)?;
    Ok(vec![
        check("fl two blocks vs double length code", r.mismatches == 0, format!("{} of {} frames differ", r.mismatches, r.frames)),
        check("fl vs arikan three transmissions", d == 0, format!("{d} of 100 frames differ")),
    ])
}

/// Runs the given suites; the report passes only if every check does.
pub fn run_suites(suites: &[VerifySuite]) -> Result<VerifyReport, HarnessError> {
    let mut reports = Vec::new();
    for &suite in suites {
        let checks = match suite {
            VerifySuite::Kernels => kernels_suite(),
            VerifySuite::Oracle => oracle_suite()?,
            VerifySuite::Ratematch => ratematch_suite()?,
            VerifySuite::ArumEquivalence => equivalence_suite()?,
        };
        reports.push(SuiteReport {
            suite,
            passed: checks.iter().all(|c| c.passed),
            checks,
        });
    }
    Ok(VerifyReport {
        passed: reports.iter().all(|r| r.passed),
        suites: reports,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_parse() {
        for s in VerifySuite::ALL {
            assert_eq!(s.to_string().parse::<VerifySuite>().unwrap(), s);
        }
        assert!("nope".parse::<VerifySuite>().is_err());
    }

    #[test]
    fn cheap_suites_pass() {
        let report = run_suites(&[VerifySuite::Kernels, VerifySuite::Ratematch]).unwrap();
        for s in &report.suites {
            for c in &s.checks {
                assert!(c.passed, "{}: {}", c.name, c.detail);
            }
        }
        assert!(report.passed);
    }

    #[test]
    fn rel_error_floor() {
        assert_eq!(rel_error(1.0, 1.0), 0.0);
        assert!((rel_error(2.0, 1.0) - 0.5).abs() < 1e-15);
        assert!(rel_error(1e-12, 0.0) < 1e-8);
    }
}
