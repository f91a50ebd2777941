//! Count attack: volume-based candidate sets refined by co-occurrence counts.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::cooc::{cooccurrence_aux, hoeffding_widths, AuxMode, CoOccurrenceMatrix};
use super::{Assignment, AttackError};
use crate::corpus::{Dataset, Keyword};
use crate::rng::rng_from_seed;

/// Absolute slack on every interval test, for floating-point ties.
const SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CountConfig {
    pub conf_level: f64,
    /// How many of the most frequently observed patterns are enumerated.
    pub top_k: usize,
    /// Cap on enumerated assignments of the top patterns.
    pub max_bruteforce: usize,
    /// Cap on partial assignments visited, including dead ends.
    pub max_nodes: usize,
}

impl Default for CountConfig {
    fn default() -> Self {
        CountConfig {
            conf_level: 0.95,
            top_k: 10,
            max_bruteforce: 1000,
            max_nodes: 200_000,
        }
    }
}

/// Adversary knowledge: expected co-occurrences and their confidence half-widths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountAux {
    pub expected: CoOccurrenceMatrix,
    pub widths: CoOccurrenceMatrix,
}

impl CountAux {
    pub fn from_training(train: &Dataset, tpr: f64, fpr: f64, conf_level: f64) -> Self {
        CountAux {
            expected: cooccurrence_aux(train, AuxMode::Adjusted { tpr, fpr }),
            widths: hoeffding_widths(train, tpr, fpr, conf_level),
        }
    }

    #[inline]
    fn fits(&self, observed: f64, a: usize, b: usize) -> bool {
        (observed - self.expected.get(a, b)).abs() <= self.widths.get(a, b) + SLACK
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountOutcome {
    pub assignment: Assignment,
    /// Patterns pinned by enumeration or propagation in the best branch.
    pub resolved: usize,
    /// Every explored branch emptied some candidate set (or one was empty up front).
    pub inconsistent: bool,
}

/// Keywords (0-based) whose expected volume interval holds each observed volume.
pub fn candidate_sets(m: &CoOccurrenceMatrix, aux: &CountAux) -> Vec<Vec<usize>> {
    (0..m.size())
        .map(|i| {
            let mut c: Vec<usize> = (0..aux.expected.size())
                .filter(|&k| aux.fits(m.get(i, i), k, k))
                .collect();
            let vol = m.get(i, i);
            c.sort_by(|&a, &b| {
                (vol - aux.expected.get(a, a))
                    .abs()
                    .total_cmp(&(vol - aux.expected.get(b, b)).abs())
                    .then(a.cmp(&b))
            });
            c
        })
        .collect()
}

/// Resolved count, partial assignment and remaining candidates of a branch.
type Branch = (usize, Vec<Option<usize>>, Vec<Vec<usize>>);

struct Search<'a> {
    m: &'a CoOccurrenceMatrix,
    aux: &'a CountAux,
    cand: Vec<Vec<usize>>,
    top: Vec<usize>,
    max_leaves: usize,
    leaves: usize,
    max_nodes: usize,
    nodes: usize,
    best: Option<Branch>,
}

impl Search<'_> {
    fn consistent(&self, i: usize, k: usize, sigma: &[Option<usize>], with: &[usize]) -> bool {
        with.iter()
            .all(|&j| sigma[j].is_none_or(|kj| self.aux.fits(self.m.get(i, j), k, kj)))
    }

    fn exhausted(&self) -> bool {
        self.leaves >= self.max_leaves || self.nodes >= self.max_nodes
    }

    fn dfs(&mut self, level: usize, sigma: &mut Vec<Option<usize>>, used: &mut Vec<bool>) {
        if self.exhausted() {
            return;
        }
        self.nodes += 1;
        if level == self.top.len() {
            self.leaves += 1;
            if let Some((resolved, full, remaining)) = self.propagate(sigma.clone(), used.clone()) {
                if self.best.as_ref().is_none_or(|b| resolved > b.0) {
                    self.best = Some((resolved, full, remaining));
                }
            }
            return;
        }
        let q = self.top[level];
        let assigned: Vec<usize> = self.top[..level].to_vec();
        for idx in 0..self.cand[q].len() {
            let k = self.cand[q][idx];
            if used[k] || !self.consistent(q, k, sigma, &assigned) {
                continue;
            }
            sigma[q] = Some(k);
            used[k] = true;
            self.dfs(level + 1, sigma, used);
            sigma[q] = None;
            used[k] = false;
            if self.exhausted() {
                return;
            }
        }
    }

    /// Eliminates candidates against known patterns until nothing changes.
    /// Returns `None` when some candidate set empties.
    fn propagate(
        &self,
        mut sigma: Vec<Option<usize>>,
        mut used: Vec<bool>,
    ) -> Option<Branch> {
        let size = sigma.len();
        let known: Vec<usize> = (0..size).filter(|&j| sigma[j].is_some()).collect();
        let mut remaining: Vec<Vec<usize>> = vec![Vec::new(); size];
        for i in 0..size {
            if sigma[i].is_none() {
                remaining[i] = self.cand[i]
                    .iter()
                    .copied()
                    .filter(|&k| !used[k] && self.consistent(i, k, &sigma, &known))
                    .collect();
                if remaining[i].is_empty() {
                    return None;
                }
            }
        }
        let mut queue: Vec<usize> = Vec::new();
        loop {
            let mut changed = false;
            for i in 0..size {
                if sigma[i].is_some() {
                    continue;
                }
                if !queue.is_empty() {
                    let new = &queue;
                    remaining[i].retain(|&k| {
                        !used[k]
                            && new.iter().all(|&j| {
                                self.aux.fits(self.m.get(i, j), k, sigma[j].expect("known"))
                            })
                    });
                }
                if remaining[i].is_empty() {
                    return None;
                }
            }
            queue.clear();
            for i in 0..size {
                if sigma[i].is_none() && remaining[i].len() == 1 && !used[remaining[i][0]] {
                    let k = remaining[i][0];
                    sigma[i] = Some(k);
                    used[k] = true;
                    queue.push(i);
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        let resolved = sigma.iter().filter(|s| s.is_some()).count();
        Some((resolved, sigma, remaining))
    }
}

/// Runs the attack on observed `m` with per-pattern observation counts `frequency`.
pub fn count_attack(
    m: &CoOccurrenceMatrix,
    aux: &CountAux,
    frequency: &[usize],
    cfg: &CountConfig,
    seed: u64,
) -> Result<CountOutcome, AttackError> {
    let size = m.size();
    let kw = aux.expected.size();
    if frequency.len() != size {
        return Err(AttackError::Invalid(format!(
            "{} frequencies for {size} patterns",
            frequency.len()
        )));
    }
    if aux.widths.size() != kw {
        return Err(AttackError::Invalid(
            "width and expectation matrices differ in size".into(),
        ));
    }
    if !(cfg.conf_level > 0.0 && cfg.conf_level < 1.0) {
        return Err(AttackError::Invalid(format!(
            "confidence level {} must lie in (0,1)",
            cfg.conf_level
        )));
    }
    let failed = |size: usize| CountOutcome {
        assignment: Assignment {
            mapping: vec![1; size],
            failed: true,
        },
        resolved: 0,
        inconsistent: true,
    };
    let cand = candidate_sets(m, aux);
    if cand.iter().any(Vec::is_empty) {
        return Ok(failed(size));
    }
    let mut order: Vec<usize> = (0..size).collect();
    order.sort_by(|&a, &b| frequency[b].cmp(&frequency[a]).then(a.cmp(&b)));
    order.truncate(cfg.top_k.min(size));
    let mut search = Search {
        m,
        aux,
        cand,
        top: order,
        max_leaves: cfg.max_bruteforce.max(1),
        leaves: 0,
        max_nodes: cfg.max_nodes.max(1),
        nodes: 0,
        best: None,
    };
    search.dfs(0, &mut vec![None; size], &mut vec![false; kw]);
    let Some((resolved, sigma, remaining)) = search.best.take() else {
        return Ok(failed(size));
    };

    // Unresolved patterns get their best-fitting still-free candidate.
    let mut rng = rng_from_seed(seed);
    let known: Vec<usize> = (0..size).filter(|&j| sigma[j].is_some()).collect();
    let mut used = vec![false; kw];
    for s in sigma.iter().flatten() {
        used[*s] = true;
    }
    let fit = |i: usize, k: usize| -> f64 {
        known
            .iter()
            .map(|&j| (m.get(i, j) - aux.expected.get(k, sigma[j].expect("known"))).powi(2))
            .sum::<f64>()
            + (m.get(i, i) - aux.expected.get(k, k)).powi(2)
    };
    let mut mapping: Vec<usize> = sigma.iter().map(|s| s.unwrap_or(usize::MAX)).collect();
    let mut pending: Vec<usize> = (0..size).filter(|&i| sigma[i].is_none()).collect();
    pending.sort_by(|&a, &b| frequency[b].cmp(&frequency[a]).then(a.cmp(&b)));
    for i in pending {
        let mut pool: Vec<usize> = remaining[i].iter().copied().filter(|&k| !used[k]).collect();
        if pool.is_empty() {
            pool = (0..kw).filter(|&k| !used[k]).collect();
        }
        if pool.is_empty() {
            pool = remaining[i].clone();
        }
        pool.shuffle(&mut rng);
        let k = pool
            .into_iter()
            .min_by(|&a, &b| fit(i, a).total_cmp(&fit(i, b)))
            .expect("non-empty pool");
        used[k] = true;
        mapping[i] = k;
    }
    Ok(CountOutcome {
        assignment: Assignment {
            mapping: mapping.into_iter().map(|k| k as Keyword + 1).collect(),
            failed: false,
        },
        resolved,
        inconsistent: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attacks::cooc::cooccurrence_observed;
    use crate::corpus::{gen_synthetic_corpus, FrequencyLaw, SyntheticSpec};

    fn corpus() -> Dataset {
        gen_synthetic_corpus(&SyntheticSpec {
            n: 400,
            universe: 30,
            law: FrequencyLaw::Zipf,
            freqmax: 200,
            sizemax: None,
            seed: 2,
        })
        .unwrap()
    }

    #[test]
    fn exact_knowledge_recovers_everything() {
        let ds = corpus();
        let post = ds.postings();
        let queried: Vec<usize> = vec![0, 3, 7, 12, 2, 29, 18, 5, 9, 1, 22, 14];
        let pats: Vec<Vec<u32>> = queried.iter().map(|&k| post[k].clone()).collect();
        let m = cooccurrence_observed(&pats, ds.len());
        let aux = CountAux::from_training(&ds, 1.0, 0.0, 0.95);
        let freq: Vec<usize> = (0..queried.len()).map(|i| 20 - i).collect();
        let out = count_attack(&m, &aux, &freq, &CountConfig::default(), 1).unwrap();
        assert!(!out.inconsistent);
        let want: Vec<Keyword> = queried.iter().map(|&k| k as Keyword + 1).collect();
        assert_eq!(out.assignment.mapping, want);
    }

    #[test]
    fn single_query_unique_volume() {
        let ds = corpus();
        let post = ds.postings();
        let m = cooccurrence_observed(&[post[0].clone()], ds.len());
        let aux = CountAux::from_training(&ds, 1.0, 0.0, 0.95);
        let cand = candidate_sets(&m, &aux);
        assert_eq!(cand[0], vec![0]);
        let out = count_attack(&m, &aux, &[1], &CountConfig::default(), 0).unwrap();
        assert_eq!(out.assignment.mapping, vec![1]);
    }

    #[test]
    fn impossible_volume_fails() {
        let ds = corpus();
        let m = cooccurrence_observed(&[(1..=399).collect()], ds.len());
        let aux = CountAux::from_training(&ds, 1.0, 0.0, 0.95);
        let out = count_attack(&m, &aux, &[1], &CountConfig::default(), 0).unwrap();
        assert!(out.inconsistent && out.assignment.failed);
    }

    #[test]
    fn candidates_grow_with_confidence() {
        let ds = corpus();
        let post = ds.postings();
        let pats: Vec<Vec<u32>> = [1usize, 4, 9]
            .iter()
            .map(|&k| post[k].iter().copied().filter(|d| d % 7 != 0).collect())
            .collect();
        let m = cooccurrence_observed(&pats, ds.len());
        let mut prev: Option<Vec<Vec<usize>>> = None;
        for conf in [0.5, 0.9, 0.95, 0.99, 0.999999] {
            let c = candidate_sets(&m, &CountAux::from_training(&ds, 0.9, 0.05, conf));
            if let Some(p) = &prev {
                for (a, b) in p.iter().zip(&c) {
                    assert!(a.iter().all(|k| b.contains(k)));
                }
            }
            prev = Some(c);
        }
    }

    #[test]
    fn node_budget_bounds_the_search() {
        let ds = corpus();
        let post = ds.postings();
        let queried: Vec<usize> = vec![0, 3, 7, 12, 2, 29, 18, 5, 9, 1, 22, 14];
        let pats: Vec<Vec<u32>> = queried.iter().map(|&k| post[k].clone()).collect();
        let m = cooccurrence_observed(&pats, ds.len());
        let aux = CountAux::from_training(&ds, 1.0, 0.0, 0.95);
        let freq: Vec<usize> = (0..queried.len()).map(|i| 20 - i).collect();
        // Too few nodes to reach depth top_k: no leaf, so the attack gives up.
        let tiny = CountConfig { max_nodes: 3, ..CountConfig::default() };
        let out = count_attack(&m, &aux, &freq, &tiny, 1).unwrap();
        assert!(out.inconsistent && out.assignment.failed);
        let enough = CountConfig { max_nodes: 11, ..CountConfig::default() };
        assert!(!count_attack(&m, &aux, &freq, &enough, 1).unwrap().inconsistent);
    }
}
