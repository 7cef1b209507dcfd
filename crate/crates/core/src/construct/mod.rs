//! Code construction: Gaussian-approximation reliabilities for single codes
//! and for masked multi-block sessions, and active-set selection.

pub mod ga;

use std::collections::HashMap;
use std::io::Write;

use log::warn;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use ga::{ga_check, ga_variable, phi, phi_inv_ln};

use crate::gf2lin::{bit_reverse, log2_exact, Gf2Error, KernelMatrix};
use crate::oracle::{mc_density, OracleError, Transform};
use crate::polar::{PolarError, PolarSpec};
use crate::ratematch::RateMatchPlan;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConstructError {
    #[error("LLR means must be non-negative, got {0}")]
    NegativeMean(f64),
    #[error("need {needed} candidate positions, only {available} available")]
    InsufficientCandidates { needed: usize, available: usize },
    #[error("kernel {index} is not the leading block of kernel {}", index + 1)]
    NonNestedKernels { index: usize },
    #[error("kernel of size {size} cannot serve {needed} transmissions")]
    KernelTooSmall { size: usize, needed: usize },
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("no blocks given")]
    NoBlocks,
    #[error(transparent)]
    Gf2(#[from] Gf2Error),
    #[error(transparent)]
    Polar(#[from] PolarError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// Per synthesized channel LLR mean under the all-zero assumption.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityVector(Vec<f64>);

impl ReliabilityVector {
    pub fn new(means: Vec<f64>) -> Result<Self, ConstructError> {
        if let Some(&bad) = means.iter().find(|m| m.is_nan() || **m < 0.0) {
            return Err(ConstructError::NegativeMean(bad));
        }
        Ok(Self(means))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, i: usize) -> f64 {
        self.0[i]
    }
}

fn polarize(means: &[f64]) -> Vec<f64> {
    if means.len() == 1 {
        return means.to_vec();
    }
    let half = means.len() / 2;
    let (a, b) = means.split_at(half);
    let left: Vec<f64> = a.iter().zip(b).map(|(&x, &y)| ga::check_unchecked(x, y)).collect();
    let right: Vec<f64> = a.iter().zip(b).map(|(&x, &y)| x + y).collect();
    let mut out = polarize(&left);
    out.extend(polarize(&right));
    out
}

/// GA through the length-`N` transform from per coded position means
/// (punctured 0, shortened `+INF`, repeated summed).
pub fn reliability_single(init_means: &[f64]) -> Result<ReliabilityVector, ConstructError> {
    let bits = log2_exact(init_means.len())?;
    if let Some(&bad) = init_means.iter().find(|m| m.is_nan() || **m < 0.0) {
        return Err(ConstructError::NegativeMean(bad));
    }
    let y: Vec<f64> = (0..init_means.len()).map(|k| init_means[bit_reverse(k, bits)]).collect();
    ReliabilityVector::new(polarize(&y))
}

/// Channel view of one transmitted block, aligned to the session's working
/// length.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockChannel {
    pub mother_len: usize,
    /// Coded-position LLR means; zero beyond `mother_len`.
    pub x_means: Vec<f64>,
    /// z-domain positions known to be zero (shortened or padding).
    pub known_zero: Vec<bool>,
}

impl BlockChannel {
    pub fn from_plan(plan: &RateMatchPlan, channel_mean: f64, working_len: usize) -> Self {
        let n = plan.mother_len();
        let mut x_means = plan.coded_means(channel_mean);
        x_means.resize(working_len, 0.0);
        let mut known_zero = vec![false; working_len];
        for &j in plan.known_zero() {
            known_zero[j] = true;
        }
        known_zero[n..].fill(true);
        Self {
            mother_len: n,
            x_means,
            known_zero,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct McOptions {
    pub samples: usize,
    pub seed: u64,
}

impl Default for McOptions {
    fn default() -> Self {
        Self {
            samples: 100_000,
            seed: 0x5eed,
        }
    }
}

type ProfileKey = (usize, Vec<u64>, Vec<bool>);

fn step1_means(
    kernel: &KernelMatrix,
    blocks: &[BlockChannel],
    mc: &McOptions,
    cache: &mut HashMap<ProfileKey, f64>,
) -> Result<Vec<Vec<f64>>, ConstructError> {
    let t = blocks.len();
    let width = blocks[0].x_means.len();
    let identity = kernel.is_identity();
    let fl = kernel.is_first_xor_latest();
    let mut out = vec![vec![0.0; width]; t];
    for j in 0..width {
        let m: Vec<f64> = blocks.iter().map(|b| b.x_means[j]).collect();
        let kz: Vec<bool> = blocks.iter().map(|b| b.known_zero[j]).collect();
        for s in 0..t {
            out[s][j] = if kz[s] {
                f64::INFINITY
            } else if identity {
                m[s]
            } else if fl {
                let later: f64 = m[s + 1..].iter().sum();
                if s == 0 {
                    m[0] + later
                } else {
                    // evidence on z_1 from block 1, later blocks and known
                    // zero intermediate blocks
                    let first = if kz[0] { f64::INFINITY } else { m[0] };
                    let mid: f64 = (1..s).filter(|&r| kz[r]).map(|r| m[r]).sum();
                    ga::check_unchecked(m[s], first + mid + later)
                }
            } else {
                let known: Vec<bool> = (0..t).map(|r| r > s || kz[r]).collect();
                let key = (s, m.iter().map(|v| v.to_bits()).collect(), known.clone());
                match cache.get(&key) {
                    Some(&v) => v,
                    None => {
                        let est = mc_density(
                            &Transform::Step1 {
                                kernel: kernel.clone(),
                                target: s,
                                known_zero: known,
                            },
                            &m,
                            mc.samples,
                            mc.seed,
                        )?;
                        let v = est.means[0].max(0.0);
                        cache.insert(key, v);
                        v
                    }
                }
            };
        }
    }
    Ok(out)
}

fn check_kernels(kernels: &[KernelMatrix], t: usize) -> Result<KernelMatrix, ConstructError> {
    for (i, w) in kernels.windows(2).enumerate() {
        if !w[0].is_nested_in(&w[1]) {
            return Err(ConstructError::NonNestedKernels { index: i });
        }
    }
    let last = kernels.last().ok_or(ConstructError::KernelTooSmall { size: 0, needed: t })?;
    if last.size() < t {
        return Err(ConstructError::KernelTooSmall {
            size: last.size(),
            needed: t,
        });
    }
    Ok(last.leading(t)?)
}

/// Reliabilities of every block after `blocks.len()` transmissions: step-one
/// means per coded position, then the per-block polar transform. `kernels`
/// is the sequence of kernels used so far and must be nested.
pub fn reliability_arum(
    kernels: &[KernelMatrix],
    blocks: &[BlockChannel],
    mc: &McOptions,
) -> Result<Vec<ReliabilityVector>, ConstructError> {
    let t = blocks.len();
    if t == 0 {
        return Err(ConstructError::NoBlocks);
    }
    let kernel = check_kernels(kernels, t)?;
    let width = blocks[0].x_means.len();
    for b in blocks {
        for got in [b.x_means.len(), b.known_zero.len()] {
            if got != width {
                return Err(ConstructError::LengthMismatch { expected: width, got });
            }
        }
        if b.mother_len > width {
            return Err(ConstructError::LengthMismatch {
                expected: width,
                got: b.mother_len,
            });
        }
        if let Some(&bad) = b.x_means.iter().find(|m| m.is_nan() || **m < 0.0) {
            return Err(ConstructError::NegativeMean(bad));
        }
    }
    let mut cache = HashMap::new();
    let z = step1_means(&kernel, blocks, mc, &mut cache)?;
    blocks
        .iter()
        .zip(&z)
        .map(|(b, zm)| reliability_single(&zm[..b.mother_len]))
        .collect()
}

/// A synthesized channel of the session: `index` within transmission `block`
/// (both 0-based). Ordering is the global index order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GlobalPos {
    pub block: usize,
    pub index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Relocation {
    pub from: GlobalPos,
    pub to: GlobalPos,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    /// Active set, ascending.
    pub active: Vec<GlobalPos>,
    pub relocations: Vec<Relocation>,
    /// Active indices within the newest block, ascending.
    pub new_positions: Vec<usize>,
    /// True when the newest block received no active bit.
    pub empty_block: bool,
}

/// Picks the `k` most reliable candidates among the previous active set and
/// the newest block (`rel.len() - 1`) minus `new_block_excluded`. Ties go to
/// the lower global position. Vacated and newly chosen positions are paired
/// in ascending order.
pub fn select_active(
    prev: Option<&[GlobalPos]>,
    rel: &[ReliabilityVector],
    k: usize,
    new_block_excluded: &[usize],
) -> Result<Selection, ConstructError> {
    let newest = rel.len().checked_sub(1).ok_or(ConstructError::NoBlocks)?;
    let mut candidates: Vec<GlobalPos> = prev.unwrap_or(&[]).to_vec();
    for p in &candidates {
        if p.block >= newest || p.index >= rel[p.block].len() {
            return Err(ConstructError::LengthMismatch {
                expected: newest,
                got: p.block,
            });
        }
    }
    let mut excluded = vec![false; rel[newest].len()];
    for &i in new_block_excluded {
        if i < excluded.len() {
            excluded[i] = true;
        }
    }
    candidates.extend(
        (0..rel[newest].len())
            .filter(|&i| !excluded[i])
            .map(|index| GlobalPos { block: newest, index }),
    );
    if candidates.len() < k {
        return Err(ConstructError::InsufficientCandidates {
            needed: k,
            available: candidates.len(),
        });
    }
    candidates.sort_by(|a, b| {
        rel[b.block]
            .get(b.index)
            .total_cmp(&rel[a.block].get(a.index))
            .then(a.cmp(b))
    });
    candidates.truncate(k);
    candidates.sort();
    let active = candidates;

    let prev = prev.unwrap_or(&[]);
    let vacated: Vec<GlobalPos> = prev.iter().copied().filter(|p| active.binary_search(p).is_err()).collect();
    let added: Vec<GlobalPos> = active.iter().copied().filter(|p| p.block == newest).collect();
    let relocations = vacated
        .iter()
        .zip(&added)
        .map(|(&from, &to)| Relocation { from, to })
        .collect();
    let empty_block = newest > 0 && added.is_empty();
    if empty_block {
        warn!("transmission {} carries no active bits", newest + 1);
    }
    Ok(Selection {
        new_positions: added.iter().map(|p| p.index).collect(),
        active,
        relocations,
        empty_block,
    })
}

/// Single-code construction: reliabilities from the rate-matched channel and
/// the `k` most reliable positions outside the shortening-forced set.
pub fn design_single(plan: &RateMatchPlan, channel_mean: f64, k: usize) -> Result<(PolarSpec, ReliabilityVector), ConstructError> {
    let block = BlockChannel::from_plan(plan, channel_mean, plan.mother_len());
    let mut z = block.x_means.clone();
    for (m, &kz) in z.iter_mut().zip(&block.known_zero) {
        if kz {
            *m = f64::INFINITY;
        }
    }
    let rel = reliability_single(&z)?;
    let sel = select_active(None, std::slice::from_ref(&rel), k, plan.forced_frozen_u())?;
    let spec = PolarSpec::from_active(plan.mother_len(), &sel.new_positions)?;
    Ok((spec, rel))
}

/// Writes `position,block,mean` rows, blocks in order.
pub fn write_reliability_csv<W: Write>(out: W, rel: &[ReliabilityVector]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["position", "block", "mean"])?;
    for (b, r) in rel.iter().enumerate() {
        for (i, m) in r.as_slice().iter().enumerate() {
            w.write_record([i.to_string(), b.to_string(), m.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf2lin::{kernel_matrix, KernelKind};
    use crate::ratematch::{make_plan, RateMatchMode};
    use proptest::prelude::*;

    fn kernels(kind: KernelKind, t: usize) -> Vec<KernelMatrix> {
        (1..=t).map(|s| kernel_matrix(kind, s)).collect()
    }

    fn uniform(n: usize, m: f64, count: usize) -> Vec<BlockChannel> {
        let plan = make_plan(n, n, RateMatchMode::None).unwrap();
        (0..count).map(|_| BlockChannel::from_plan(&plan, m, n)).collect()
    }

    #[test]
    fn single_stage() {
        let m = 1.7;
        let r = reliability_single(&[m, m]).unwrap();
        assert_eq!(r.get(0), ga_check(m, m).unwrap());
        assert_eq!(r.get(1), 2.0 * m);
        let inf = reliability_single(&[f64::INFINITY; 4]).unwrap();
        assert!(inf.as_slice().iter().all(|v| v.is_infinite()));
        assert!(reliability_single(&[1.0, -1.0]).is_err());
        assert!(reliability_single(&[1.0; 3]).is_err());
    }

    #[test]
    fn polarization_order() {
        let r = reliability_single(&[2.0; 4]).unwrap();
        assert!(r.get(0) <= r.get(1) && r.get(0) <= r.get(2));
        assert!(r.get(1) <= r.get(3) && r.get(2) <= r.get(3));
    }

    #[test]
    fn punctured_input_erases_first_channel() {
        let plan = make_plan(4, 3, RateMatchMode::Puncture).unwrap();
        let r = reliability_single(&plan.coded_means(3.0)).unwrap();
        assert_eq!(r.get(0), 0.0);
    }

    #[test]
    fn if_kernel_is_independent_construction() {
        let plans = [
            make_plan(8, 6, RateMatchMode::Puncture).unwrap(),
            make_plan(4, 3, RateMatchMode::Shorten).unwrap(),
            make_plan(8, 8, RateMatchMode::None).unwrap(),
        ];
        let blocks: Vec<BlockChannel> = plans.iter().map(|p| BlockChannel::from_plan(p, 2.5, 8)).collect();
        let rel = reliability_arum(&kernels(KernelKind::If, 3), &blocks, &McOptions::default()).unwrap();
        for (p, r) in plans.iter().zip(&rel) {
            let (_, single) = design_single(p, 2.5, 1).unwrap();
            assert_eq!(r, &single);
        }
    }

    #[test]
    fn fl_two_blocks_closed_form() {
        let m = 1.3;
        let blocks = uniform(2, m, 2);
        let rel = reliability_arum(&kernels(KernelKind::Fl, 2), &blocks, &McOptions::default()).unwrap();
        assert_eq!(rel[1], reliability_single(&[ga_check(m, m).unwrap(); 2]).unwrap());
        assert_eq!(rel[0], reliability_single(&[2.0 * m; 2]).unwrap());
    }

    #[test]
    fn fl_and_arikan_identical_up_to_three() {
        let plans = [
            make_plan(8, 6, RateMatchMode::Puncture).unwrap(),
            make_plan(4, 3, RateMatchMode::Shorten).unwrap(),
            make_plan(8, 12, RateMatchMode::Repeat).unwrap(),
        ];
        let blocks: Vec<BlockChannel> = plans.iter().map(|p| BlockChannel::from_plan(p, 1.1, 8)).collect();
        let mc = McOptions::default();
        assert_eq!(
            reliability_arum(&kernels(KernelKind::Fl, 3), &blocks, &mc).unwrap(),
            reliability_arum(&kernels(KernelKind::Arikan, 3), &blocks, &mc).unwrap()
        );
    }

    #[test]
    fn arikan_four_uses_monte_carlo() {
        let blocks = uniform(2, 1.0, 4);
        let mc = McOptions { samples: 10_000, seed: 1 };
        let rel = reliability_arum(&kernels(KernelKind::Arikan, 4), &blocks, &mc).unwrap();
        assert_eq!(rel.len(), 4);
        // block 1 sees every transmission once z_2..z_4 are known
        let b1 = rel[0].as_slice();
        assert!(b1[1] > 7.0 && b1[1] < 9.0, "{b1:?}");
        assert!(rel.iter().all(|r| r.as_slice().iter().all(|v| *v >= 0.0)));
    }

    #[test]
    fn shortened_positions_are_infinite() {
        let plan = make_plan(4, 3, RateMatchMode::Shorten).unwrap();
        let b1 = BlockChannel::from_plan(&make_plan(8, 6, RateMatchMode::Puncture).unwrap(), 2.0, 8);
        let b2 = BlockChannel::from_plan(&plan, 2.0, 8);
        assert!(b2.known_zero[3] && b2.known_zero[4..].iter().all(|&k| k));
        let rel = reliability_arum(&kernels(KernelKind::Fl, 2), &[b1, b2], &McOptions::default()).unwrap();
        assert_eq!(rel[1].len(), 4);
        assert_eq!(rel[1].get(3), f64::INFINITY);
    }

    #[test]
    fn non_nested_kernels_rejected() {
        let bad = vec![kernel_matrix(KernelKind::If, 1), kernel_matrix(KernelKind::If, 2), kernel_matrix(KernelKind::Fl, 3)];
        let blocks = uniform(2, 1.0, 3);
        assert!(matches!(
            reliability_arum(&bad, &blocks, &McOptions::default()),
            Err(ConstructError::NonNestedKernels { index: 1 })
        ));
        assert!(reliability_arum(&kernels(KernelKind::Fl, 2), &blocks, &McOptions::default()).is_err());
    }

    #[test]
    fn selection_base_case_and_ties() {
        let rel = vec![ReliabilityVector::new(vec![0.1, 3.0, 3.0, 5.0]).unwrap()];
        let s = select_active(None, &rel, 2, &[]).unwrap();
        let idx: Vec<usize> = s.active.iter().map(|p| p.index).collect();
        assert_eq!(idx, vec![1, 3]);
        assert!(s.relocations.is_empty() && !s.empty_block);
        let s = select_active(None, &rel, 2, &[3]).unwrap();
        assert_eq!(s.new_positions, vec![1, 2]);
        assert!(select_active(None, &rel, 4, &[0]).is_err());
    }

    #[test]
    fn weak_new_block_keeps_active_set() {
        let rel = vec![
            ReliabilityVector::new(vec![0.5, 4.0, 6.0, 9.0]).unwrap(),
            ReliabilityVector::new(vec![0.1, 0.2]).unwrap(),
        ];
        let prev = [GlobalPos { block: 0, index: 2 }, GlobalPos { block: 0, index: 3 }];
        let s = select_active(Some(&prev), &rel, 2, &[]).unwrap();
        assert_eq!(s.active, prev.to_vec());
        assert!(s.relocations.is_empty() && s.empty_block);
    }

    #[test]
    fn relocation_pairs_ascending() {
        let rel = vec![
            ReliabilityVector::new(vec![0.5, 1.0, 6.0, 9.0]).unwrap(),
            ReliabilityVector::new(vec![7.0, 8.0]).unwrap(),
        ];
        let prev: Vec<GlobalPos> = (0..4).map(|index| GlobalPos { block: 0, index }).collect();
        let s = select_active(Some(&prev), &rel, 4, &[]).unwrap();
        assert_eq!(s.new_positions, vec![0, 1]);
        assert_eq!(
            s.relocations,
            vec![
                Relocation {
                    from: GlobalPos { block: 0, index: 0 },
                    to: GlobalPos { block: 1, index: 0 }
                },
                Relocation {
                    from: GlobalPos { block: 0, index: 1 },
                    to: GlobalPos { block: 1, index: 1 }
                },
            ]
        );
    }

    #[test]
    fn csv_export() {
        let rel = vec![
            ReliabilityVector::new(vec![0.5, f64::INFINITY]).unwrap(),
            ReliabilityVector::new(vec![2.0]).unwrap(),
        ];
        let mut buf = Vec::new();
        write_reliability_csv(&mut buf, &rel).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "position,block,mean\n0,0,0.5\n1,0,inf\n0,1,2\n");
    }

    proptest! {
        #[test]
        fn monotone_in_initial_means(
            n_bits in 1u32..5,
            seed in proptest::collection::vec(0.0f64..20.0, 16),
            bump_at in 0usize..16,
            bump in 0.0f64..5.0,
        ) {
            let n = 1usize << n_bits;
            let base = &seed[..n];
            let mut raised = base.to_vec();
            raised[bump_at % n] += bump;
            let a = reliability_single(base).unwrap();
            let b = reliability_single(&raised).unwrap();
            for i in 0..n {
                prop_assert!(b.get(i) >= a.get(i) - 1e-9 * a.get(i).max(1.0));
            }
        }

        #[test]
        fn selection_never_reactivates_old_positions(
            old in proptest::collection::vec(0.0f64..10.0, 8),
            new in proptest::collection::vec(0.0f64..10.0, 4),
            k in 1usize..6,
        ) {
            let r0 = vec![ReliabilityVector::new(old.clone()).unwrap()];
            let first = select_active(None, &r0, k, &[]).unwrap();
            let rel = vec![ReliabilityVector::new(old).unwrap(), ReliabilityVector::new(new).unwrap()];
            let second = select_active(Some(&first.active), &rel, k, &[]).unwrap();
            prop_assert_eq!(second.active.len(), k);
            for p in second.active.iter().filter(|p| p.block == 0) {
                prop_assert!(first.active.contains(p));
            }
            let vacated = first.active.iter().filter(|p| !second.active.contains(p)).count();
            prop_assert_eq!(vacated, second.new_positions.len());
            prop_assert_eq!(second.relocations.len(), vacated);
        }
    }
}
