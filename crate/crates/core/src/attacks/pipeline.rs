//! End-to-end attack runs: group observed patterns, build the adversary's
//! matrices, run the attack and score it per query.

use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::cooc::{
    cooccurrence_aux, cooccurrence_centers, cooccurrence_observed, AuxMode, CoOccurrenceMatrix,
};
use super::count::{count_attack, CountAux, CountConfig};
use super::freq::{cluster_trends, frequency_attack};
use super::graphm::{graph_matching_attack, GraphMatchConfig};
use super::ikk::{ikk_attack, AnnealConfig};
use super::kmeans::{binary_vector, cluster_patterns, KMeansConfig};
use super::{score, AttackError, AttackKind};
use crate::corpus::{Dataset, DocId, FrequencyMatrix, Keyword};
use crate::rng::{derive_seed, rng_from_seed};
use crate::scheme::Defense;

/// Everything the adversary observes or is assumed to know.
#[derive(Debug, Clone, Copy)]
pub struct AttackContext<'a> {
    pub defense: Defense,
    /// Binarized returned ids of every query, sorted.
    pub observed: &'a [Vec<DocId>],
    /// True keyword of every query (scoring and known-query sampling only).
    pub truth: &'a [Keyword],
    /// Week of every query, for the frequency attack.
    pub weeks: Option<&'a [u32]>,
    /// Size of the client's corpus.
    pub n: usize,
    /// Adversary's training data.
    pub train: &'a Dataset,
    pub tpr: f64,
    pub fpr: f64,
    /// Auxiliary weekly query frequencies.
    pub frequencies: Option<&'a FrequencyMatrix>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AttackParams {
    pub kmeans: KMeansConfig,
    pub anneal: AnnealConfig,
    /// Share of observed patterns whose keyword the IKK adversary knows.
    pub known_fraction: f64,
    pub count: CountConfig,
    pub graph: GraphMatchConfig,
}

impl Default for AttackParams {
    fn default() -> Self {
        AttackParams {
            kmeans: KMeansConfig::default(),
            anneal: AnnealConfig::default(),
            known_fraction: 0.15,
            count: CountConfig::default(),
            graph: GraphMatchConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackReport {
    pub accuracy: f64,
    pub failed: bool,
    /// Count attack only: every branch hit an empty candidate set.
    pub inconsistent: bool,
    /// Number of observed groups (distinct patterns or clusters) attacked.
    pub groups: usize,
}

/// Observed queries gathered into groups with one representative matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Grouping {
    /// Group of every query.
    pub labels: Vec<usize>,
    /// Representative co-occurrence matrix over groups.
    pub matrix: CoOccurrenceMatrix,
    /// Queries per group.
    pub sizes: Vec<usize>,
}

impl Grouping {
    fn groups(&self) -> usize {
        self.sizes.len()
    }

    /// Most common true keyword per group; ties go to the lower code.
    fn majority_truth(&self, truth: &[Keyword]) -> Vec<Keyword> {
        let mut tally: Vec<HashMap<Keyword, usize>> = vec![HashMap::new(); self.groups()];
        for (&g, &w) in self.labels.iter().zip(truth) {
            *tally[g].entry(w).or_default() += 1;
        }
        tally
            .into_iter()
            .map(|t| {
                t.into_iter()
                    .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
                    .map(|x| x.0)
                    .unwrap_or(1)
            })
            .collect()
    }
}

/// Identical patterns form one group each; with `clusters = Some(k)` the
/// patterns are instead clustered by k-means and centers represent groups.
pub fn group_patterns(
    observed: &[Vec<DocId>],
    n: usize,
    clusters: Option<usize>,
    kmeans: &KMeansConfig,
    seed: u64,
) -> Result<Grouping, AttackError> {
    match clusters {
        None => {
            let mut index: HashMap<&[DocId], usize> = HashMap::new();
            let mut distinct: Vec<Vec<DocId>> = Vec::new();
            let mut labels = Vec::with_capacity(observed.len());
            let mut sizes = Vec::new();
            for p in observed {
                let g = *index.entry(p.as_slice()).or_insert_with(|| {
                    distinct.push(p.clone());
                    sizes.push(0);
                    distinct.len() - 1
                });
                sizes[g] += 1;
                labels.push(g);
            }
            Ok(Grouping {
                labels,
                matrix: cooccurrence_observed(&distinct, n),
                sizes,
            })
        }
        Some(k) => {
            let points: Vec<_> = observed.iter().map(|p| binary_vector(p)).collect();
            let c = cluster_patterns(&points, n, k, kmeans, seed)?;
            let mut sizes = vec![0; k];
            for &l in &c.labels {
                sizes[l] += 1;
            }
            Ok(Grouping {
                labels: c.labels,
                matrix: cooccurrence_centers(&c.centers, n),
                sizes,
            })
        }
    }
}

fn distinct_keywords(truth: &[Keyword]) -> usize {
    let mut t = truth.to_vec();
    t.sort_unstable();
    t.dedup();
    t.len()
}

/// Runs one attack and scores it against the true keyword of every query.
pub fn run_attack(
    kind: AttackKind,
    ctx: &AttackContext<'_>,
    params: &AttackParams,
    seed: u64,
) -> Result<AttackReport, AttackError> {
    let q = ctx.observed.len();
    if ctx.truth.len() != q {
        return Err(AttackError::Invalid(format!(
            "{} truths for {q} queries",
            ctx.truth.len()
        )));
    }
    if q == 0 {
        return Err(AttackError::Invalid("no observed queries".into()));
    }
    let universe = ctx.train.universe_size();
    let fresh_noise = ctx.defense == Defense::Osse;
    // Fresh per-query noise defeats pattern equality; cluster with the true
    // number of distinct keywords instead. IKK against such patterns skips
    // clustering and lets patterns share keywords.
    let skip_clustering = fresh_noise && matches!(kind, AttackKind::Ikk | AttackKind::IkkStar);
    let clusters = (fresh_noise && !skip_clustering).then(|| distinct_keywords(ctx.truth));
    let grouping = if skip_clustering {
        Grouping {
            labels: (0..q).collect(),
            matrix: cooccurrence_observed(ctx.observed, ctx.n),
            sizes: vec![1; q],
        }
    } else {
        group_patterns(
            ctx.observed,
            ctx.n,
            clusters,
            &params.kmeans,
            derive_seed(seed, "cluster"),
        )?
    };
    let (tpr, fpr) = match ctx.defense {
        Defense::None => (1.0, 0.0),
        _ => (ctx.tpr, ctx.fpr),
    };

    let mut inconsistent = false;
    let assignment = match kind {
        AttackKind::Freq => {
            let f = ctx.frequencies.ok_or_else(|| {
                AttackError::Invalid("frequency attack needs a frequency matrix".into())
            })?;
            let weeks = ctx
                .weeks
                .ok_or_else(|| AttackError::Invalid("frequency attack needs query weeks".into()))?;
            let trends = cluster_trends(&grouping.labels, weeks, grouping.groups(), f.weeks())?;
            frequency_attack(&trends, f)?
        }
        AttackKind::Ikk | AttackKind::IkkStar => {
            let mode = if kind == AttackKind::Ikk {
                AuxMode::Naive
            } else {
                AuxMode::Adjusted { tpr, fpr }
            };
            let aux = cooccurrence_aux(ctx.train, mode);
            let truths = grouping.majority_truth(ctx.truth);
            let mut rng = rng_from_seed(derive_seed(seed, "known"));
            let mut taken = vec![false; universe + 1];
            let known: Vec<Option<Keyword>> = truths
                .iter()
                .map(|&w| {
                    let pick = rng.random::<f64>() < params.known_fraction;
                    // Injective runs never pin one keyword twice.
                    (pick && (skip_clustering || !std::mem::replace(&mut taken[w as usize], true)))
                        .then_some(w)
                })
                .collect();
            let cfg = params.anneal.with_repeats(skip_clustering);
            ikk_attack(
                &grouping.matrix,
                &aux,
                &known,
                &cfg,
                derive_seed(seed, "anneal"),
            )?
        }
        AttackKind::Count => {
            let aux = CountAux::from_training(ctx.train, tpr, fpr, params.count.conf_level);
            let out = count_attack(
                &grouping.matrix,
                &aux,
                &grouping.sizes,
                &params.count,
                derive_seed(seed, "count"),
            )?;
            inconsistent = out.inconsistent;
            out.assignment
        }
        AttackKind::Graphm => {
            let aux = cooccurrence_aux(ctx.train, AuxMode::Adjusted { tpr, fpr });
            graph_matching_attack(
                &grouping.matrix,
                &aux,
                &params.graph,
                derive_seed(seed, "graphm"),
            )?
        }
    };
    let predicted: Vec<Keyword> = if assignment.failed {
        Vec::new()
    } else {
        grouping
            .labels
            .iter()
            .map(|&g| assignment.mapping[g])
            .collect()
    };
    Ok(AttackReport {
        accuracy: score(&predicted, ctx.truth, assignment.failed, universe),
        failed: assignment.failed,
        inconsistent,
        groups: grouping.groups(),
    })
}
