//! Simulated-annealing co-occurrence attack.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::cooc::CoOccurrenceMatrix;
use super::{Assignment, AttackError};
use crate::corpus::Keyword;
use crate::rng::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnnealConfig {
    pub init_temp: f64,
    pub cooling: f64,
    /// Stop after this many consecutive rejected proposals.
    pub reject_threshold: u64,
    /// Let several observed patterns share a keyword (single reassignment
    /// moves). Otherwise the map stays injective and moves may swap.
    pub allow_repeats: bool,
    /// Hard cap on proposals.
    pub max_steps: u64,
}

impl Default for AnnealConfig {
    fn default() -> Self {
        AnnealConfig {
            init_temp: 200.0,
            cooling: 0.9999,
            reject_threshold: 1500,
            allow_repeats: false,
            max_steps: 2_000_000,
        }
    }
}

impl AnnealConfig {
    pub fn with_repeats(self, allow_repeats: bool) -> Self {
        AnnealConfig {
            allow_repeats,
            ..self
        }
    }

    fn validate(&self) -> Result<(), AttackError> {
        if !(self.cooling > 0.0 && self.cooling < 1.0) {
            return Err(AttackError::Invalid(format!(
                "cooling {} must lie in (0,1)",
                self.cooling
            )));
        }
        if !(self.init_temp > 0.0) {
            return Err(AttackError::Invalid(
                "initial temperature must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnealOutcome {
    pub assignment: Assignment,
    /// `‖M − M′[σ,σ]‖²_F` of the returned assignment.
    pub objective: f64,
    /// Running best objective, one entry per improvement.
    pub best_history: Vec<f64>,
    pub steps: u64,
}

/// `Σ_{i,j} (M_ij − M′_{σ_i σ_j})²` with 0-based keyword indices.
pub fn frobenius_objective(
    m: &CoOccurrenceMatrix,
    aux: &CoOccurrenceMatrix,
    sigma: &[usize],
) -> f64 {
    let mut s = 0.0;
    for i in 0..sigma.len() {
        for j in 0..sigma.len() {
            let d = m.get(i, j) - aux.get(sigma[i], sigma[j]);
            s += d * d;
        }
    }
    s
}

/// Objective change when pattern `i` moves to keyword `b`.
pub(super) fn reassign_delta(
    m: &CoOccurrenceMatrix,
    aux: &CoOccurrenceMatrix,
    sigma: &[usize],
    i: usize,
    b: usize,
) -> f64 {
    let a = sigma[i];
    let (mi, ra, rb) = (m.row(i), aux.row(a), aux.row(b));
    let mut d = 0.0;
    for (j, &sj) in sigma.iter().enumerate() {
        if j != i {
            let (x, y) = (mi[j] - rb[sj], mi[j] - ra[sj]);
            d += x * x - y * y;
        }
    }
    let (x, y) = (mi[i] - rb[b], mi[i] - ra[a]);
    2.0 * d + x * x - y * y
}

/// Objective change when patterns `i` and `k` exchange keywords.
pub(super) fn swap_delta(
    m: &CoOccurrenceMatrix,
    aux: &CoOccurrenceMatrix,
    sigma: &[usize],
    i: usize,
    k: usize,
) -> f64 {
    let (a, b) = (sigma[i], sigma[k]);
    let (mi, mk, ra, rb) = (m.row(i), m.row(k), aux.row(a), aux.row(b));
    let mut d = 0.0;
    for (j, &sj) in sigma.iter().enumerate() {
        if j != i && j != k {
            let t1 = mi[j] - rb[sj];
            let t2 = mi[j] - ra[sj];
            let t3 = mk[j] - ra[sj];
            let t4 = mk[j] - rb[sj];
            d += t1 * t1 - t2 * t2 + t3 * t3 - t4 * t4;
        }
    }
    let sq = |x: f64| x * x;
    2.0 * d + sq(mi[i] - rb[b]) - sq(mi[i] - ra[a]) + sq(mk[k] - ra[a]) - sq(mk[k] - rb[b])
}

/// Runs the annealer; `known[i] = Some(w)` pins pattern `i` to keyword `w`.
pub fn ikk_anneal(
    m: &CoOccurrenceMatrix,
    aux: &CoOccurrenceMatrix,
    known: &[Option<Keyword>],
    cfg: &AnnealConfig,
    seed: u64,
) -> Result<AnnealOutcome, AttackError> {
    cfg.validate()?;
    let (size, kw) = (m.size(), aux.size());
    if known.len() != size {
        return Err(AttackError::Invalid(format!(
            "{} known entries for {size} patterns",
            known.len()
        )));
    }
    if kw == 0 {
        return Err(AttackError::Invalid("empty auxiliary matrix".into()));
    }
    if !cfg.allow_repeats && size > kw {
        return Err(AttackError::Invalid(format!(
            "{size} patterns cannot map injectively to {kw} keywords"
        )));
    }
    let mut rng = rng_from_seed(seed);
    let pinned: Vec<bool> = known.iter().map(Option::is_some).collect();
    // Keyword index -> pattern holding it (injective mode only).
    let mut holder: Vec<Option<usize>> = vec![None; kw];
    let mut sigma = vec![usize::MAX; size];
    for (i, k) in known.iter().enumerate() {
        if let Some(w) = *k {
            let idx = (w as usize)
                .checked_sub(1)
                .filter(|&x| x < kw)
                .ok_or_else(|| AttackError::Invalid(format!("known keyword {w} out of range")))?;
            if !cfg.allow_repeats {
                if holder[idx].is_some() {
                    return Err(AttackError::Invalid(format!("keyword {w} pinned twice")));
                }
                holder[idx] = Some(i);
            }
            sigma[i] = idx;
        }
    }
    if cfg.allow_repeats {
        for s in sigma.iter_mut().filter(|s| **s == usize::MAX) {
            *s = rng.random_range(0..kw);
        }
    } else {
        let mut free: Vec<usize> = (0..kw).filter(|&k| holder[k].is_none()).collect();
        for i in 0..size {
            if sigma[i] == usize::MAX {
                let pick = free.swap_remove(rng.random_range(0..free.len()));
                sigma[i] = pick;
                holder[pick] = Some(i);
            }
        }
    }
    let movable: Vec<usize> = (0..size).filter(|&i| !pinned[i]).collect();
    let mut cost = frobenius_objective(m, aux, &sigma);
    let mut best = (cost, sigma.clone());
    let mut history = Vec::new();
    let mut temp = cfg.init_temp;
    let mut rejects = 0u64;
    let mut steps = 0u64;
    if movable.is_empty() || kw < 2 {
        return Ok(finish(best, history, steps));
    }
    while steps < cfg.max_steps && rejects < cfg.reject_threshold {
        steps += 1;
        let i = movable[rng.random_range(0..movable.len())];
        let b = rng.random_range(0..kw);
        if b == sigma[i] {
            continue;
        }
        let swap_with = if cfg.allow_repeats { None } else { holder[b] };
        if swap_with.is_some_and(|k| pinned[k]) {
            continue;
        }
        let delta = match swap_with {
            Some(k) => swap_delta(m, aux, &sigma, i, k),
            None => reassign_delta(m, aux, &sigma, i, b),
        };
        let accept = delta <= 0.0 || rng.random::<f64>() < (-delta / temp).exp();
        if accept {
            let a = sigma[i];
            match swap_with {
                Some(k) => {
                    sigma[k] = a;
                    holder[a] = Some(k);
                }
                None if !cfg.allow_repeats => holder[a] = None,
                None => {}
            }
            sigma[i] = b;
            if !cfg.allow_repeats {
                holder[b] = Some(i);
            }
            cost += delta;
            if cost < best.0 {
                best = (cost, sigma.clone());
                history.push(cost);
            }
            rejects = 0;
        } else {
            rejects += 1;
        }
        temp *= cfg.cooling;
    }
    // Re-evaluate exactly to shed accumulated rounding.
    best.0 = frobenius_objective(m, aux, &best.1);
    Ok(finish(best, history, steps))
}

fn finish(best: (f64, Vec<usize>), best_history: Vec<f64>, steps: u64) -> AnnealOutcome {
    AnnealOutcome {
        assignment: Assignment {
            mapping: best.1.iter().map(|&k| k as Keyword + 1).collect(),
            failed: false,
        },
        objective: best.0,
        best_history,
        steps,
    }
}

pub fn ikk_attack(
    m: &CoOccurrenceMatrix,
    aux: &CoOccurrenceMatrix,
    known: &[Option<Keyword>],
    cfg: &AnnealConfig,
    seed: u64,
) -> Result<Assignment, AttackError> {
    Ok(ikk_anneal(m, aux, known, cfg, seed)?.assignment)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_aux(k: usize, seed: u64) -> CoOccurrenceMatrix {
        let mut rng = rng_from_seed(seed);
        CoOccurrenceMatrix::from_fn(k, |i, j| {
            if i == j {
                rng.random_range(0.3..0.6)
            } else {
                rng.random_range(0.0..0.3)
            }
        })
    }

    #[test]
    fn deltas_match_recomputation() {
        let aux = random_aux(9, 1);
        let m = random_aux(6, 2);
        let sigma = vec![0, 3, 5, 7, 2, 8];
        let base = frobenius_objective(&m, &aux, &sigma);
        for i in 0..6 {
            for b in 0..9 {
                let mut s = sigma.clone();
                s[i] = b;
                let want = frobenius_objective(&m, &aux, &s) - base;
                assert!((reassign_delta(&m, &aux, &sigma, i, b) - want).abs() < 1e-12);
            }
            for k in 0..6 {
                if k != i {
                    let mut s = sigma.clone();
                    s.swap(i, k);
                    let want = frobenius_objective(&m, &aux, &s) - base;
                    assert!((swap_delta(&m, &aux, &sigma, i, k) - want).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn best_history_non_increasing_and_pins_hold() {
        let aux = random_aux(12, 3);
        let perm = [4usize, 9, 1, 7, 0, 11, 3, 6];
        let m = aux.induced(&perm);
        let mut known = vec![None; perm.len()];
        known[2] = Some(2);
        for repeats in [false, true] {
            let out = ikk_anneal(
                &m,
                &aux,
                &known,
                &AnnealConfig::default().with_repeats(repeats),
                9,
            )
            .unwrap();
            assert!(out.best_history.windows(2).all(|w| w[1] <= w[0]));
            assert_eq!(out.assignment.mapping[2], 2);
            assert_eq!(out.assignment.mapping.len(), perm.len());
        }
    }

    #[test]
    fn rejects_bad_config() {
        let aux = random_aux(3, 1);
        let m = random_aux(4, 1);
        assert!(ikk_anneal(&m, &aux, &[None; 4], &AnnealConfig::default(), 0).is_err());
        let bad = AnnealConfig {
            cooling: 1.0,
            ..AnnealConfig::default()
        };
        assert!(ikk_anneal(&aux, &aux, &[None; 3], &bad, 0).is_err());
        assert!(ikk_anneal(&aux, &aux, &[None; 2], &AnnealConfig::default(), 0).is_err());
    }

    #[test]
    fn deterministic() {
        let aux = random_aux(10, 4);
        let m = aux.induced(&[3, 1, 4, 0, 9]);
        let a = ikk_anneal(&m, &aux, &[None; 5], &AnnealConfig::default(), 17).unwrap();
        let b = ikk_anneal(&m, &aux, &[None; 5], &AnnealConfig::default(), 17).unwrap();
        assert_eq!(a, b);
    }
}
