//! Fixed index obfuscation baseline: false negatives and false positives are
//! sampled once at build time, so every query for a keyword returns the same set.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::SchemeError;
use crate::corpus::{Dataset, DocId, Keyword};
use crate::rng::rng_from_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClrzIndex {
    tpr: f64,
    fpr: f64,
    n: usize,
    /// Obfuscated row of each keyword (index `w - 1`): sorted returned ids.
    rows: Vec<Vec<DocId>>,
}

impl ClrzIndex {
    pub fn tpr(&self) -> f64 {
        self.tpr
    }

    pub fn fpr(&self) -> f64 {
        self.fpr
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn universe(&self) -> usize {
        self.rows.len()
    }

    /// Obfuscated response for `w`; identical on every call.
    pub fn query(&self, w: Keyword) -> &[DocId] {
        &self.rows[w as usize - 1]
    }
}

/// Keeps each true `(w, doc)` entry with probability `tpr` and switches on each
/// false entry with probability `fpr`.
pub fn clrz_build(ds: &Dataset, tpr: f64, fpr: f64, seed: u64) -> Result<ClrzIndex, SchemeError> {
    if !(0.0..=1.0).contains(&tpr) || !(0.0..=1.0).contains(&fpr) || fpr > tpr {
        return Err(SchemeError::InvalidParams(format!(
            "need 0 <= FPR <= TPR <= 1, got TPR = {tpr}, FPR = {fpr}"
        )));
    }
    let mut rng = rng_from_seed(seed);
    let n = ds.len();
    let postings = ds.postings();
    let mut rows = Vec::with_capacity(postings.len());
    for pos in &postings {
        let mut row = Vec::new();
        let mut next = pos.iter().peekable();
        for id in 1..=n as DocId {
            let contains = next.peek() == Some(&&id);
            if contains {
                next.next();
            }
            let rate = if contains { tpr } else { fpr };
            let keep = rate >= 1.0 || (rate > 0.0 && rng.random::<f64>() < rate);
            if keep {
                row.push(id);
            }
        }
        rows.push(row);
    }
    Ok(ClrzIndex { tpr, fpr, n, rows })
}
