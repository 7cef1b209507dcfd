use super::llr::{decision_penalty, hard_decision};
use super::sc::ScState;
use super::{resolve_known, BitRole, KnownValue, PolarError, PolarSpec, SoftVector};
use crate::gf2lin::{log2_exact, BinVector};

/// A decoding path: decisions so far and its accumulated penalty.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodePath {
    pub decisions: BinVector,
    pub metric: f64,
}

/// Starting point of one list entry. Paths seeded from different entries may
/// see different channel values and different known-bit histories.
#[derive(Debug, Clone, Copy)]
pub struct ListSeed<'a> {
    pub llr: &'a SoftVector,
    pub history: &'a [u8],
    pub metric: f64,
}

/// One surviving path after a block: its `N` u-decisions, cumulative metric
/// and the index of the seed it descends from.
#[derive(Debug, Clone, PartialEq)]
pub struct ListCandidate {
    pub decisions: BinVector,
    pub metric: f64,
    pub seed: usize,
}

#[derive(Debug, Clone, Copy)]
struct Path {
    state: usize,
    metric: f64,
    seed: usize,
}

/// Successive-cancellation list decoder with exact path metrics.
///
/// At every active bit each path forks into both values, the extension that
/// agrees with the bit LLR first; the `L` lowest metrics survive, ties kept in
/// fork order so the result is deterministic.
#[derive(Debug)]
pub struct ListDecoder {
    n: usize,
    list_size: usize,
    states: Vec<ScState>,
    free: Vec<usize>,
}

impl ListDecoder {
    pub fn new(n: usize, list_size: usize) -> Result<Self, PolarError> {
        log2_exact(n)?;
        if list_size == 0 {
            return Err(PolarError::EmptyList);
        }
        Ok(Self {
            n,
            list_size,
            states: Vec::new(),
            free: Vec::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn list_size(&self) -> usize {
        self.list_size
    }

    fn alloc(&mut self) -> usize {
        match self.free.pop() {
            Some(i) => i,
            None => {
                self.states.push(ScState::new(self.n));
                self.states.len() - 1
            }
        }
    }

    fn clone_state(&mut self, dst: usize, src: usize) {
        debug_assert_ne!(dst, src);
        if dst < src {
            let (a, b) = self.states.split_at_mut(src);
            a[dst].copy_from(&b[0]);
        } else {
            let (a, b) = self.states.split_at_mut(dst);
            b[0].copy_from(&a[src]);
        }
    }

    pub fn decode(&mut self, llr: &SoftVector, spec: &PolarSpec) -> Result<Vec<ListCandidate>, PolarError> {
        self.decode_seeded(
            spec,
            &[ListSeed {
                llr,
                history: &[],
                metric: 0.0,
            }],
        )
    }

    /// Runs the list decoder over one block starting from `seeds`. Output is
    /// sorted by ascending metric.
    pub fn decode_seeded(&mut self, spec: &PolarSpec, seeds: &[ListSeed<'_>]) -> Result<Vec<ListCandidate>, PolarError> {
        if seeds.is_empty() {
            return Err(PolarError::NoSeeds);
        }
        if spec.len() != self.n {
            return Err(PolarError::LengthMismatch {
                expected: self.n,
                got: spec.len(),
            });
        }
        for seed in seeds {
            if seed.llr.len() != self.n {
                return Err(PolarError::LengthMismatch {
                    expected: self.n,
                    got: seed.llr.len(),
                });
            }
            spec.validate_sources(seed.history.len())?;
        }

        let mut order: Vec<usize> = (0..seeds.len()).collect();
        order.sort_by(|&a, &b| seeds[a].metric.total_cmp(&seeds[b].metric));
        order.truncate(self.list_size);

        let mut paths: Vec<Path> = Vec::with_capacity(self.list_size);
        for &s in &order {
            let state = self.alloc();
            self.states[state].load_channel(seeds[s].llr.as_slice());
            paths.push(Path {
                state,
                metric: seeds[s].metric,
                seed: s,
            });
        }

        let mut lambdas = Vec::with_capacity(self.list_size);
        let mut forks: Vec<(f64, usize, u8)> = Vec::with_capacity(2 * self.list_size);
        let mut claimed = vec![false; self.list_size];
        let mut next: Vec<(Path, u8)> = Vec::with_capacity(self.list_size);

        for i in 0..self.n {
            lambdas.clear();
            for p in &paths {
                lambdas.push(self.states[p.state].bit_llr(i));
            }
            match spec.role(i) {
                BitRole::Active => {
                    forks.clear();
                    for (k, p) in paths.iter().enumerate() {
                        let hd = hard_decision(lambdas[k]);
                        forks.push((p.metric + decision_penalty(lambdas[k], hd), k, hd));
                        forks.push((p.metric + decision_penalty(lambdas[k], hd ^ 1), k, hd ^ 1));
                    }
                    forks.sort_by(|a, b| a.0.total_cmp(&b.0));
                    forks.truncate(self.list_size);

                    claimed[..paths.len()].fill(false);
                    let mut used = vec![false; paths.len()];
                    for &(_, k, _) in forks.iter() {
                        used[k] = true;
                    }
                    for (k, p) in paths.iter().enumerate() {
                        if !used[k] {
                            self.free.push(p.state);
                        }
                    }
                    next.clear();
                    for &(metric, k, bit) in forks.iter() {
                        let parent = paths[k];
                        let state = if !claimed[k] {
                            claimed[k] = true;
                            parent.state
                        } else {
                            let s = self.alloc();
                            self.clone_state(s, parent.state);
                            s
                        };
                        next.push((
                            Path {
                                state,
                                metric,
                                seed: parent.seed,
                            },
                            bit,
                        ));
                    }
                    paths.clear();
                    for &(p, bit) in next.iter() {
                        self.states[p.state].commit(i, bit);
                        paths.push(p);
                    }
                }
                role => {
                    for (k, p) in paths.iter_mut().enumerate() {
                        let st = &mut self.states[p.state];
                        let bit = match role {
                            BitRole::Frozen => 0,
                            BitRole::Known(KnownValue::Fixed(v)) => v,
                            BitRole::Known(KnownValue::Decision(idx)) => {
                                resolve_known(idx, i, seeds[p.seed].history, &st.u).unwrap()
                            }
                            BitRole::Active => unreachable!(),
                        };
                        p.metric += decision_penalty(lambdas[k], bit);
                        st.commit(i, bit);
                    }
                }
            }
        }

        let mut out: Vec<ListCandidate> = paths
            .iter()
            .map(|p| ListCandidate {
                decisions: BinVector::from_bits(self.states[p.state].u.clone()).unwrap(),
                metric: p.metric,
                seed: p.seed,
            })
            .collect();
        for p in &paths {
            self.free.push(p.state);
        }
        out.sort_by(|a, b| a.metric.total_cmp(&b.metric));
        Ok(out)
    }
}

/// List decoding of one block. With `initial_paths`, each path seeds the
/// list: its decisions act as history for known-bit references and are
/// prefixed to the returned decisions, and its metric keeps accumulating.
pub fn scl_decode(
    llr: &SoftVector,
    spec: &PolarSpec,
    list_size: usize,
    initial_paths: Option<&[DecodePath]>,
) -> Result<Vec<DecodePath>, PolarError> {
    let root = [DecodePath {
        decisions: BinVector::zeros(0),
        metric: 0.0,
    }];
    let initial = initial_paths.unwrap_or(&root);
    let seeds: Vec<ListSeed<'_>> = initial
        .iter()
        .map(|p| ListSeed {
            llr,
            history: p.decisions.as_slice(),
            metric: p.metric,
        })
        .collect();
    let mut decoder = ListDecoder::new(spec.len(), list_size)?;
    let cands = decoder.decode_seeded(spec, &seeds)?;
    Ok(cands
        .into_iter()
        .map(|c| {
            let mut bits = initial[c.seed].decisions.as_slice().to_vec();
            bits.extend_from_slice(c.decisions.as_slice());
            DecodePath {
                decisions: BinVector::from_bits(bits).unwrap(),
                metric: c.metric,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polar::{encode, sc_decode};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_llr(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> SoftVector {
        SoftVector::new((0..n).map(|_| rng.random_range(-scale..scale)).collect()).unwrap()
    }

    #[test]
    fn list_of_one_is_sc() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let spec = PolarSpec::from_active(64, &(20..64).collect::<Vec<_>>()).unwrap();
        for _ in 0..50 {
            let llr = random_llr(&mut rng, 64, 4.0);
            let list = scl_decode(&llr, &spec, 1, None).unwrap();
            assert_eq!(list.len(), 1);
            assert_eq!(list[0].decisions, sc_decode(&llr, &spec).unwrap());
        }
    }

    #[test]
    fn noiseless_true_path_has_zero_metric() {
        let spec = PolarSpec::from_active(16, &[7, 11, 13, 14, 15]).unwrap();
        let u = spec.place(&[1, 0, 1, 1, 0], &[]).unwrap();
        let x = encode(&u).unwrap();
        for l in [1, 2, 4, 8] {
            let list = scl_decode(&SoftVector::certain(x.as_slice()), &spec, l, None).unwrap();
            assert_eq!(list[0].decisions, u);
            assert!(list[0].metric.abs() < 1e-12);
            for other in &list[1..] {
                assert_eq!(other.metric, f64::INFINITY);
            }
        }
    }

    #[test]
    fn output_sorted_and_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let spec = PolarSpec::from_active(32, &(8..32).collect::<Vec<_>>()).unwrap();
        let llr = random_llr(&mut rng, 32, 2.0);
        let list = scl_decode(&llr, &spec, 8, None).unwrap();
        assert_eq!(list.len(), 8);
        assert!(list.windows(2).all(|w| w[0].metric <= w[1].metric));
    }

    #[test]
    fn seeded_paths_carry_history_and_metric() {
        let spec = PolarSpec::from_active(4, &[3]).unwrap();
        let mut roles = spec.roles().to_vec();
        roles[2] = BitRole::Known(KnownValue::Decision(0));
        let spec = PolarSpec::new(roles).unwrap();
        let seeds = [
            DecodePath {
                decisions: BinVector::from_bits(vec![1]).unwrap(),
                metric: 0.5,
            },
            DecodePath {
                decisions: BinVector::from_bits(vec![0]).unwrap(),
                metric: 0.1,
            },
        ];
        let llr = SoftVector::new(vec![1.0, 1.0, 1.0, 1.0]).unwrap();
        let out = scl_decode(&llr, &spec, 4, Some(&seeds)).unwrap();
        assert_eq!(out.len(), 4);
        for p in &out {
            assert_eq!(p.decisions.len(), 5);
            assert_eq!(p.decisions[3], p.decisions[0], "known bit follows history");
            assert!(p.metric >= 0.1);
        }
    }

    #[test]
    fn bad_inputs() {
        assert!(ListDecoder::new(8, 0).is_err());
        let spec = PolarSpec::from_active(8, &[7]).unwrap();
        let mut dec = ListDecoder::new(8, 2).unwrap();
        assert!(dec.decode_seeded(&spec, &[]).is_err());
        assert!(dec.decode(&SoftVector::zeros(4), &spec).is_err());
    }
}
