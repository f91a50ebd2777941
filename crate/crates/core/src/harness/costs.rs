//! Empirical per-query costs against the closed-form predictions.

use serde::{Deserialize, Serialize};

use super::config::{CorpusConfig, CostConfig, ExperimentConfig, Sampler, Setting};
use super::run::{load_corpus, observe, workload, World};
use super::HarnessError;
use crate::corpus::{compute_stats, FrequencyLaw};
use crate::privacy::{overhead_report, pq_from, KeywordDistribution, OverheadReport};
use crate::rng::derive_seed;
use crate::scheme::{build_index, Defense};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub setting: Setting,
    pub queries: usize,
    /// Closed-form report for the first seed, with `E_w` the mean true volume of the issued queries.
    pub predicted: OverheadReport,
    pub predicted_tokens: f64,
    pub empirical_tokens: f64,
    pub tokens_rel_error: f64,
    pub predicted_returned: f64,
    pub empirical_returned: f64,
    pub returned_rel_error: f64,
    pub empirical_evaluations: f64,
    pub max_evaluations: u64,
    /// Smallest `n·(countermax + 1)` over the seeds.
    pub evaluation_bound: f64,
    pub evaluations_within_bound: bool,
    /// Measured `(tokens·s_tok + returned·s_doc) / (E_w·s_doc)`.
    pub empirical_overhead: f64,
}

fn rel(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        if a == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (a - b).abs() / b.abs()
    }
}

/// Runs the OSSE settings of `cfg` through the real scheme and compares
/// tokens, returned documents and match evaluations with their predictions.
pub fn measure_costs(cfg: &ExperimentConfig) -> Result<Vec<CostReport>, HarnessError> {
    cfg.validate()?;
    let sizes = cfg.costs.clone().unwrap_or(CostConfig {
        token_size: 1.0,
        document_size: 100.0,
    });
    let dist = match cfg.corpus {
        CorpusConfig::Synthetic {
            law: FrequencyLaw::Uniform,
            ..
        } => Some(KeywordDistribution::Uniform),
        _ => None,
    };
    let settings: Vec<Setting> = cfg
        .settings()?
        .into_iter()
        .filter(|s| s.defense == Defense::Osse)
        .collect();
    if settings.is_empty() {
        return Err(HarnessError::Config(
            "cost measurement needs an OSSE setting".into(),
        ));
    }
    let mut acc: Vec<Acc> = settings.iter().map(|_| Acc::default()).collect();
    for seed in cfg.seed_list() {
        let ds = load_corpus(cfg, seed)?;
        let stats = compute_stats(&ds)?;
        let base = super::run::scheme_params(cfg, &ds, 1.0, 0.0)?;
        let index = build_index(&ds, &base)?;
        let (queries, _) = workload(cfg, ds.universe_size(), seed)?;
        let post = ds.postings();
        let e_w = queries
            .keywords
            .iter()
            .map(|&w| post[w as usize - 1].len() as f64)
            .sum::<f64>()
            / queries.len() as f64;
        let world = World {
            train: ds.clone(),
            client: ds,
            osse: Some((index, base)),
        };
        for (s, a) in settings.iter().zip(acc.iter_mut()) {
            let (p, q) = pq_from(s.tpr, s.fpr)?;
            let params = base.with_probabilities(p, q)?;
            let report =
                overhead_report(&params, e_w, sizes.token_size, sizes.document_size, dist)?;
            let obs = observe(
                &world,
                s,
                Sampler::Scheme,
                &queries.keywords,
                derive_seed(seed, "costs"),
            )?;
            let k = queries.len() as f64;
            a.queries += queries.len();
            a.pred_tokens += report.expected_tokens * k;
            a.pred_returned += report.expected_returned * k;
            a.tokens += obs.tokens.iter().sum::<usize>() as f64;
            a.returned += obs.returned.iter().map(|r| r.len()).sum::<usize>() as f64;
            a.evaluations += obs.evaluations.iter().sum::<u64>() as f64;
            a.max_eval = a
                .max_eval
                .max(obs.evaluations.iter().copied().max().unwrap_or(0));
            let bound = stats.n as f64 * (params.countermax as f64 + 1.0);
            a.bound = a.bound.min(bound);
            a.within &= obs.evaluations.iter().all(|&e| (e as f64) < bound);
            a.e_w_sum += e_w * k;
            if a.first.is_none() {
                a.first = Some(report);
            }
        }
    }
    Ok(settings
        .into_iter()
        .zip(acc)
        .map(|(setting, a)| {
            let k = a.queries as f64;
            let (pt, et) = (a.pred_tokens / k, a.tokens / k);
            let (pr, er) = (a.pred_returned / k, a.returned / k);
            let e_w = a.e_w_sum / k;
            CostReport {
                setting,
                queries: a.queries,
                predicted: a.first.expect("at least one seed"),
                predicted_tokens: pt,
                empirical_tokens: et,
                tokens_rel_error: rel(et, pt),
                predicted_returned: pr,
                empirical_returned: er,
                returned_rel_error: rel(er, pr),
                empirical_evaluations: a.evaluations / k,
                max_evaluations: a.max_eval,
                evaluation_bound: a.bound,
                evaluations_within_bound: a.within,
                empirical_overhead: (et * sizes.token_size + er * sizes.document_size)
                    / (e_w * sizes.document_size),
            }
        })
        .collect())
}

struct Acc {
    queries: usize,
    pred_tokens: f64,
    pred_returned: f64,
    tokens: f64,
    returned: f64,
    evaluations: f64,
    max_eval: u64,
    bound: f64,
    within: bool,
    e_w_sum: f64,
    first: Option<OverheadReport>,
}

impl Default for Acc {
    fn default() -> Self {
        Acc {
            queries: 0,
            pred_tokens: 0.0,
            pred_returned: 0.0,
            tokens: 0.0,
            returned: 0.0,
            evaluations: 0.0,
            max_eval: 0,
            bound: f64::INFINITY,
            within: true,
            e_w_sum: 0.0,
            first: None,
        }
    }
}

/// CSV of cost reports, one line per OSSE setting.
pub fn write_costs_csv<W: std::io::Write>(
    reports: &[CostReport],
    w: W,
) -> Result<(), HarnessError> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record([
        "tpr",
        "fpr",
        "queries",
        "predicted_tokens",
        "empirical_tokens",
        "tokens_rel_error",
        "predicted_returned",
        "empirical_returned",
        "returned_rel_error",
        "empirical_evaluations",
        "max_evaluations",
        "evaluation_bound",
        "predicted_overhead",
        "empirical_overhead",
    ])?;
    for r in reports {
        wr.write_record([
            r.setting.tpr.to_string(),
            r.setting.fpr.to_string(),
            r.queries.to_string(),
            r.predicted_tokens.to_string(),
            r.empirical_tokens.to_string(),
            r.tokens_rel_error.to_string(),
            r.predicted_returned.to_string(),
            r.empirical_returned.to_string(),
            r.returned_rel_error.to_string(),
            r.empirical_evaluations.to_string(),
            r.max_evaluations.to_string(),
            r.evaluation_bound.to_string(),
            r.predicted.overhead.to_string(),
            r.empirical_overhead.to_string(),
        ])?;
    }
    wr.flush()?;
    Ok(())
}
