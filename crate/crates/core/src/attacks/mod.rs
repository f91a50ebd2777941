//! Query-recovery attacks against observed access patterns.
//!
//! Every attack maps observed patterns (or clusters of them) to keyword codes.
//! Observed patterns are binarized: a document counts once however many
//! tokens matched it.

mod cooc;
mod count;
mod freq;
mod graphm;
mod ikk;
mod kmeans;
mod lap;
mod pipeline;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cooc::{
    cooccurrence_aux, cooccurrence_centers, cooccurrence_observed, hoeffding_widths, AuxMode,
    CoOccurrenceMatrix,
};
pub use count::{candidate_sets, count_attack, CountAux, CountConfig, CountOutcome};
pub use freq::{cluster_trends, frequency_attack};
pub use graphm::{graph_matching_attack, GraphMatchConfig};
pub use ikk::{frobenius_objective, ikk_anneal, ikk_attack, AnnealConfig, AnnealOutcome};
pub use kmeans::{
    binary_vector, cluster_patterns, Clustering, KMeansConfig, SparseVec, MAX_RESTARTS,
};
pub use lap::solve_lap;
pub use pipeline::{
    group_patterns, run_attack, AttackContext, AttackParams, AttackReport, Grouping,
};

use crate::corpus::Keyword;

#[derive(Debug, Error)]
pub enum AttackError {
    #[error("invalid attack input: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AttackKind {
    #[serde(rename = "freq")]
    Freq,
    #[serde(rename = "ikk")]
    Ikk,
    #[serde(rename = "ikk-star")]
    IkkStar,
    #[serde(rename = "count")]
    Count,
    #[serde(rename = "graphm")]
    Graphm,
}

impl AttackKind {
    pub const ALL: [AttackKind; 5] = [
        AttackKind::Freq,
        AttackKind::Ikk,
        AttackKind::IkkStar,
        AttackKind::Count,
        AttackKind::Graphm,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AttackKind::Freq => "freq",
            AttackKind::Ikk => "ikk",
            AttackKind::IkkStar => "ikk-star",
            AttackKind::Count => "count",
            AttackKind::Graphm => "graphm",
        }
    }
}

impl std::fmt::Display for AttackKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for AttackKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AttackKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| {
                format!("unknown attack {s:?} (expected freq, ikk, ikk-star, count or graphm)")
            })
    }
}

/// Attack output: keyword guess per observed pattern or cluster.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub mapping: Vec<Keyword>,
    pub failed: bool,
}

/// Fraction of queries whose guess equals the truth; a failed attack scores
/// `1/|Δ|`, the random-guess rate.
pub fn score(predicted: &[Keyword], truth: &[Keyword], failed: bool, universe: usize) -> f64 {
    if failed {
        return 1.0 / universe.max(1) as f64;
    }
    if truth.is_empty() {
        return 0.0;
    }
    let hits = predicted.iter().zip(truth).filter(|(a, b)| a == b).count();
    hits as f64 / truth.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scoring() {
        assert_eq!(score(&[1, 2, 3], &[1, 2, 3], false, 10), 1.0);
        assert_eq!(score(&[2, 3, 1], &[1, 2, 3], false, 10), 0.0);
        assert_eq!(score(&[1, 3], &[1, 2], false, 10), 0.5);
        assert_eq!(score(&[], &[1, 2], true, 500), 0.002);
    }

    #[test]
    fn kind_names_roundtrip() {
        for k in AttackKind::ALL {
            assert_eq!(k.as_str().parse::<AttackKind>().unwrap(), k);
            assert_eq!(
                serde_json::to_string(&k).unwrap(),
                format!("\"{}\"", k.as_str())
            );
        }
        assert!("path".parse::<AttackKind>().is_err());
    }
}
