//! Keyword co-occurrence matrices, observed and auxiliary.

use serde::{Deserialize, Serialize};

use crate::corpus::{Dataset, DocId};

/// Square symmetric matrix stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoOccurrenceMatrix {
    size: usize,
    entries: Vec<f64>,
}

impl CoOccurrenceMatrix {
    pub fn zeros(size: usize) -> Self {
        CoOccurrenceMatrix {
            size,
            entries: vec![0.0; size * size],
        }
    }

    pub fn from_fn(size: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(size);
        for i in 0..size {
            for j in i..size {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.size + j]
    }

    /// Sets both `(i, j)` and `(j, i)`.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.entries[i * self.size + j] = v;
        self.entries[j * self.size + i] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.size..(i + 1) * self.size]
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.size).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    /// Sub-matrix `M[sel, sel]`.
    pub fn induced(&self, sel: &[usize]) -> CoOccurrenceMatrix {
        CoOccurrenceMatrix::from_fn(sel.len(), |a, b| self.get(sel[a], sel[b]))
    }
}

fn intersection(a: &[DocId], b: &[DocId]) -> usize {
    let (mut i, mut j, mut c) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                c += 1;
                i += 1;
                j += 1;
            }
        }
    }
    c
}

/// `M[i][j] = |P_i ∩ P_j| / n` over sorted binary patterns.
pub fn cooccurrence_observed(patterns: &[Vec<DocId>], n: usize) -> CoOccurrenceMatrix {
    let nf = n.max(1) as f64;
    CoOccurrenceMatrix::from_fn(patterns.len(), |i, j| {
        intersection(&patterns[i], &patterns[j]) as f64 / nf
    })
}

/// Representative matrix of dense cluster centers in `[0,1]^n`: off-diagonal
/// `⟨c_i, c_j⟩/n`, diagonal the expected volume `Σ c_i / n`.
pub fn cooccurrence_centers(centers: &[Vec<f64>], n: usize) -> CoOccurrenceMatrix {
    let nf = n.max(1) as f64;
    CoOccurrenceMatrix::from_fn(centers.len(), |i, j| {
        if i == j {
            centers[i].iter().sum::<f64>() / nf
        } else {
            centers[i]
                .iter()
                .zip(&centers[j])
                .map(|(a, b)| a * b)
                .sum::<f64>()
                / nf
        }
    })
}

/// How the adversary turns training data into expected co-occurrences.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum AuxMode {
    Naive,
    Adjusted { tpr: f64, fpr: f64 },
}

/// Fractions of training documents holding both / neither keyword.
fn pair_fractions(post: &[Vec<DocId>], n: usize) -> impl Fn(usize, usize) -> (f64, f64) + '_ {
    let nf = n.max(1) as f64;
    move |i, j| {
        let both = intersection(&post[i], &post[j]);
        let neither = n + both - post[i].len() - post[j].len();
        (both as f64 / nf, neither as f64 / nf)
    }
}

/// Auxiliary `|Δ|×|Δ|` matrix from a training dataset.
pub fn cooccurrence_aux(train: &Dataset, mode: AuxMode) -> CoOccurrenceMatrix {
    let post = train.postings();
    let frac = pair_fractions(&post, train.len());
    CoOccurrenceMatrix::from_fn(post.len(), |i, j| {
        let (both, neither) = frac(i, j);
        match mode {
            AuxMode::Naive => both,
            AuxMode::Adjusted { tpr, fpr } if i == j => tpr * both + fpr * neither,
            AuxMode::Adjusted { tpr, fpr } => {
                tpr * tpr * both + fpr * fpr * neither + tpr * fpr * (1.0 - both - neither)
            }
        }
    })
}

/// Hoeffding half-widths around the adjusted entries: for each pair,
/// `sqrt(n_eff · ln(2/(1-conf)) / 2) / n` where `n_eff` counts training
/// documents whose inclusion in the intersection is actually random.
/// With every document random this is `sqrt(ln(2/(1-conf)) / (2n))`.
pub fn hoeffding_widths(train: &Dataset, tpr: f64, fpr: f64, conf: f64) -> CoOccurrenceMatrix {
    let post = train.postings();
    let n = train.len();
    let nf = n.max(1) as f64;
    let log_term = (2.0 / (1.0 - conf)).ln();
    let random = |prob: f64| prob > 0.0 && prob < 1.0;
    CoOccurrenceMatrix::from_fn(post.len(), |i, j| {
        let n_eff = if i == j {
            let have = post[i].len();
            (if random(tpr) { have } else { 0 }) + (if random(fpr) { n - have } else { 0 })
        } else {
            let both = intersection(&post[i], &post[j]);
            let neither = n + both - post[i].len() - post[j].len();
            let one = n - both - neither;
            (if random(tpr * tpr) { both } else { 0 })
                + (if random(fpr * fpr) { neither } else { 0 })
                + (if random(tpr * fpr) { one } else { 0 })
        };
        (n_eff as f64 * log_term / 2.0).sqrt() / nf
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{gen_synthetic_corpus, FrequencyLaw, SyntheticSpec};
    use proptest::prelude::*;

    fn corpus() -> Dataset {
        gen_synthetic_corpus(&SyntheticSpec {
            n: 80,
            universe: 12,
            law: FrequencyLaw::Zipf,
            freqmax: 40,
            sizemax: None,
            seed: 5,
        })
        .unwrap()
    }

    #[test]
    fn trivial_patterns() {
        let m = cooccurrence_observed(&[vec![1, 2, 3], vec![1, 2, 3], vec![4, 5]], 10);
        assert_eq!(m.get(0, 1), m.get(0, 0));
        assert_eq!(m.get(0, 2), 0.0);
        assert!(m.is_symmetric());
        assert_eq!(m.get(2, 2), 0.2);
    }

    #[test]
    fn adjusted_collapses_to_naive() {
        let ds = corpus();
        assert_eq!(
            cooccurrence_aux(&ds, AuxMode::Adjusted { tpr: 1.0, fpr: 0.0 }),
            cooccurrence_aux(&ds, AuxMode::Naive)
        );
    }

    #[test]
    fn equal_rates_are_pattern_independent() {
        let ds = corpus();
        let r = 0.3;
        let m = cooccurrence_aux(&ds, AuxMode::Adjusted { tpr: r, fpr: r });
        for i in 0..m.size() {
            for j in 0..m.size() {
                let want = if i == j { r } else { r * r };
                assert!((m.get(i, j) - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn diagonal_differs_from_off_diagonal_rule() {
        let ds = corpus();
        let (t, f) = (0.9, 0.1);
        let m = cooccurrence_aux(&ds, AuxMode::Adjusted { tpr: t, fpr: f });
        let post = ds.postings();
        let have = post[0].len() as f64 / 80.0;
        assert!((m.get(0, 0) - (t * have + f * (1.0 - have))).abs() < 1e-12);
        let off_rule = t * t * have + f * f * (1.0 - have);
        assert!((m.get(0, 0) - off_rule).abs() > 1e-3);
    }

    #[test]
    fn widths_match_closed_form_when_all_random() {
        let ds = corpus();
        let w = hoeffding_widths(&ds, 0.9, 0.1, 0.95);
        let want = ((2.0f64 / 0.05).ln() / (2.0 * 80.0)).sqrt();
        assert!((w.get(3, 5) - want).abs() < 1e-12);
        assert!((w.get(2, 2) - want).abs() < 1e-12);
        let exact = hoeffding_widths(&ds, 1.0, 0.0, 0.95);
        assert_eq!(exact.get(3, 5), 0.0);
    }

    proptest! {
        #[test]
        fn observed_matches_brute_force(sets in prop::collection::vec(prop::collection::btree_set(1u32..=30, 0..15), 1..8)) {
            let pats: Vec<Vec<DocId>> = sets.iter().map(|s| s.iter().copied().collect()).collect();
            let m = cooccurrence_observed(&pats, 30);
            prop_assert!(m.is_symmetric());
            for i in 0..pats.len() {
                for j in 0..pats.len() {
                    let c = sets[i].intersection(&sets[j]).count() as f64 / 30.0;
                    prop_assert_eq!(m.get(i, j), c);
                    prop_assert!((0.0..=1.0).contains(&m.get(i, j)));
                }
            }
        }

        #[test]
        fn aux_entries_in_unit_interval(t in 0.0f64..=1.0, f in 0.0f64..=1.0) {
            let m = cooccurrence_aux(&corpus(), AuxMode::Adjusted { tpr: t, fpr: f });
            prop_assert!(m.is_symmetric());
            for i in 0..m.size() {
                for j in 0..m.size() {
                    prop_assert!((-1e-12..=1.0 + 1e-12).contains(&m.get(i, j)));
                }
            }
        }
    }
}
