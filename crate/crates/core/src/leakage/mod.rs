//! Leakage objects: true and obfuscated access patterns, search patterns,
//! obfuscated traces, and the marginal distributions of obfuscated patterns.

mod chisq;
mod dist;
mod simulate;

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use chisq::{
    bonferroni_level, chi_square_gof, chi_square_quantile, ChiSquareOutcome, MIN_EXPECTED,
};
pub use dist::{
    ln_pmf_geometric, ln_pmf_match, ln_pmf_nonmatch, match_tail, nonmatch_tail, pmf_geometric,
    pmf_match, pmf_nonmatch, PMF_TAIL_CAP,
};
pub use simulate::simulate_query_tokens;

use crate::corpus::{Dataset, DocId, Keyword, QuerySequence};
use crate::scheme::{
    Hashing, LabelingPlan, SchemeParams, SearchIndex, SearchOutcome, TokenOutcome,
};

#[derive(Debug, Error)]
pub enum LeakageError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Which documents hold the queried keyword.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccessPattern {
    pub bits: Vec<bool>,
}

impl AccessPattern {
    /// Ids (1-based) of the set bits.
    pub fn ids(&self) -> Vec<DocId> {
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| i as DocId + 1)
            .collect()
    }
}

pub fn true_access_pattern(ds: &Dataset, w: Keyword) -> AccessPattern {
    AccessPattern {
        bits: ds.documents().iter().map(|d| d.contains(w)).collect(),
    }
}

/// `t × t` equality matrix of a query sequence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchPattern {
    t: usize,
    matrix: Vec<bool>,
}

impl SearchPattern {
    pub fn len(&self) -> usize {
        self.t
    }

    pub fn is_empty(&self) -> bool {
        self.t == 0
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.matrix[i * self.t + j]
    }
}

pub fn search_pattern(queries: &QuerySequence) -> SearchPattern {
    let k = &queries.keywords;
    let t = k.len();
    let mut matrix = vec![false; t * t];
    for i in 0..t {
        for j in 0..t {
            matrix[i * t + j] = k[i] == k[j];
        }
    }
    SearchPattern { t, matrix }
}

/// Counts seen by the server for one query: `n` per-document match counts
/// followed by `|h|` per-label non-match counts.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ObfAccessPattern {
    n: usize,
    counts: Vec<u64>,
}

impl ObfAccessPattern {
    pub fn from_counts(n: usize, counts: Vec<u64>) -> Result<Self, LeakageError> {
        if counts.len() < n {
            return Err(LeakageError::Dimension(format!(
                "{} counts for n = {n}",
                counts.len()
            )));
        }
        Ok(ObfAccessPattern { n, counts })
    }

    pub fn zeros(n: usize, label_space: usize) -> Self {
        ObfAccessPattern {
            n,
            counts: vec![0; n + label_space],
        }
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Match count of document `id` (1-based).
    pub fn doc_count(&self, id: DocId) -> u64 {
        self.counts[id as usize - 1]
    }

    /// Non-match count of label `l` (1-based).
    pub fn label_count(&self, l: u32) -> u64 {
        self.counts[self.n + l as usize - 1]
    }

    pub fn doc_counts(&self) -> &[u64] {
        &self.counts[..self.n]
    }

    pub fn label_counts(&self) -> &[u64] {
        &self.counts[self.n..]
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn label_space(&self) -> usize {
        self.counts.len() - self.n
    }

    /// Number of tokens behind this pattern.
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Documents matched at least once, i.e. what the client receives.
    pub fn returned_ids(&self) -> Vec<DocId> {
        self.doc_counts()
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, _)| i as DocId + 1)
            .collect()
    }
}

/// Tallies a search outcome into an obfuscated access pattern.
pub fn observe(
    outcome: &SearchOutcome,
    n: usize,
    label_space: usize,
) -> Result<ObfAccessPattern, LeakageError> {
    let mut row = ObfAccessPattern::zeros(n, label_space);
    for o in &outcome.outcomes {
        let slot = match *o {
            TokenOutcome::Match(id) if id >= 1 && (id as usize) <= n => id as usize - 1,
            TokenOutcome::NonMatch(l) if l >= 1 && (l as usize) <= label_space => {
                n + l as usize - 1
            }
            other => {
                return Err(LeakageError::Dimension(format!(
                    "outcome {other:?} outside n = {n}, |h| = {label_space}"
                )))
            }
        };
        row.counts[slot] += 1;
    }
    Ok(row)
}

/// `g_l` for keyword `w`: counters of label `l` that hold no root of `w`.
pub fn label_budgets(
    ds: &Dataset,
    plan: &LabelingPlan,
    params: &SchemeParams,
    w: Keyword,
) -> Vec<u64> {
    let mut used = vec![0u64; params.label_space as usize];
    for d in ds.documents().iter().filter(|d| d.contains(w)) {
        if let Some(slot) = plan.slot_of(d.id, w) {
            used[slot.label as usize - 1] += 1;
        }
    }
    used.into_iter()
        .map(|u| params.countermax as u64 - u)
        .collect()
}

/// Everything the server learns: public parameters plus one pattern per query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObfTrace {
    pub ids: Vec<DocId>,
    pub doc_sizes: Vec<usize>,
    pub hashing: Hashing,
    pub label_space: u32,
    pub hash_keys: [u64; 2],
    pub freqmax: u32,
    pub sizemax: u32,
    rows: Vec<ObfAccessPattern>,
}

impl ObfTrace {
    pub fn new(index: &SearchIndex, ds: &Dataset) -> Self {
        let p = index.params();
        ObfTrace {
            ids: ds.documents().iter().map(|d| d.id).collect(),
            doc_sizes: ds.documents().iter().map(|d| d.len()).collect(),
            hashing: p.hashing,
            label_space: p.label_space,
            hash_keys: p.hash_keys,
            freqmax: p.freqmax,
            sizemax: p.sizemax,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: ObfAccessPattern) -> Result<(), LeakageError> {
        let want = self.ids.len() + self.label_space as usize;
        if row.counts.len() != want || row.n != self.ids.len() {
            return Err(LeakageError::Dimension(format!(
                "row of length {} in a trace of width {want}",
                row.counts.len()
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn rows(&self) -> &[ObfAccessPattern] {
        &self.rows
    }

    /// Long-format CSV of the non-zero entries:
    /// `q_idx,outcome_kind,index,count` with `outcome_kind ∈ {doc, label}`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), LeakageError> {
        write_trace_csv(&self.rows, writer)
    }
}

pub fn write_trace_csv<W: Write>(rows: &[ObfAccessPattern], writer: W) -> Result<(), LeakageError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["q_idx", "outcome_kind", "index", "count"])?;
    for (q, row) in rows.iter().enumerate() {
        for (i, &c) in row.doc_counts().iter().enumerate().filter(|(_, &c)| c > 0) {
            w.write_record([
                q.to_string(),
                "doc".into(),
                (i + 1).to_string(),
                c.to_string(),
            ])?;
        }
        for (l, &c) in row
            .label_counts()
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
        {
            w.write_record([
                q.to_string(),
                "label".into(),
                (l + 1).to_string(),
                c.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
