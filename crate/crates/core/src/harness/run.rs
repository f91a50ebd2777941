//! Seeded experiment execution.

use std::collections::HashMap;
use std::time::Instant;

use log::warn;
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{CorpusConfig, CountermaxRule, ExperimentConfig, QueryDist, Sampler, Setting};
use super::HarnessError;
use crate::attacks::{run_attack, AttackContext, AttackKind};
use crate::corpus::{
    compute_stats, gen_synthetic_corpus, ingest_dataset, sample_queries, synth_frequency_matrix,
    Dataset, DocId, FrequencyMatrix, IngestOptions, QuerySequence, QuerySpec, SyntheticSpec,
};
use crate::privacy::pq_from;
use crate::rng::{derive_seed, rng_from_seed};
use crate::scheme::{
    build_index, clrz_build, derive_params, gen_token, search, tightest_countermax, ClrzIndex,
    Defense, ParamOptions, SchemeParams, SearchIndex,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowKind {
    Run,
    Mean,
    Ci95Lo,
    Ci95Hi,
}

impl RowKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RowKind::Run => "run",
            RowKind::Mean => "mean",
            RowKind::Ci95Lo => "ci95_lo",
            RowKind::Ci95Hi => "ci95_hi",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub digest: String,
    pub attack: Option<AttackKind>,
    pub defense: Defense,
    pub tpr: f64,
    pub fpr: f64,
    /// `None` on aggregate rows.
    pub seed: Option<u64>,
    pub kind: RowKind,
    pub metric: String,
    pub value: f64,
    pub runtime_ms: f64,
}

impl ResultRow {
    /// Equality of everything except wall-clock time.
    pub fn same_result(&self, other: &ResultRow) -> bool {
        ResultRow {
            runtime_ms: 0.0,
            ..self.clone()
        } == ResultRow {
            runtime_ms: 0.0,
            ..other.clone()
        }
    }
}

/// Returned ids and cost counters of every query under one setting.
#[derive(Debug, Clone, PartialEq)]
pub struct Observations {
    pub returned: Vec<Vec<DocId>>,
    pub tokens: Vec<usize>,
    pub evaluations: Vec<u64>,
}

/// A client corpus and the adversary's training data.
pub(crate) struct World {
    pub client: Dataset,
    pub train: Dataset,
    pub osse: Option<(SearchIndex, SchemeParams)>,
}

pub(crate) fn load_corpus(cfg: &ExperimentConfig, seed: u64) -> Result<Dataset, HarnessError> {
    Ok(match &cfg.corpus {
        CorpusConfig::Synthetic {
            n,
            universe,
            law,
            freqmax,
            sizemax,
            per_seed,
        } => {
            let s = if *per_seed { seed } else { 0 };
            gen_synthetic_corpus(&SyntheticSpec {
                n: *n,
                universe: *universe,
                law: *law,
                freqmax: *freqmax,
                sizemax: *sizemax,
                seed: derive_seed(s, "corpus"),
            })?
        }
        CorpusConfig::File { path, universe } => {
            ingest_dataset(path, &IngestOptions::new(*universe))?
        }
    })
}

/// OSSE parameters under the configured hashing and counter rule.
pub fn scheme_params(
    cfg: &ExperimentConfig,
    ds: &Dataset,
    p: f64,
    q: f64,
) -> Result<SchemeParams, HarnessError> {
    let stats = compute_stats(ds)?;
    let params = derive_params(&stats, cfg.scheme.hashing, p, q, &ParamOptions::default())?;
    Ok(match cfg.scheme.countermax {
        CountermaxRule::Formula => params,
        CountermaxRule::Tight => {
            let c = tightest_countermax(ds, &params).max(1);
            params.with_countermax(c)?
        }
        CountermaxRule::Fixed(c) => params.with_countermax(c)?,
    })
}

fn make_world(
    cfg: &ExperimentConfig,
    client: Dataset,
    train: Dataset,
    need_osse: bool,
) -> Result<World, HarnessError> {
    let osse = if need_osse {
        let params = scheme_params(cfg, &client, 1.0, 0.0)?;
        let index = build_index(&client, &params)?;
        Some((index, params))
    } else {
        None
    };
    Ok(World {
        client,
        train,
        osse,
    })
}

/// Query workload of one seed, with the frequency matrix it was drawn from.
pub(crate) fn workload(
    cfg: &ExperimentConfig,
    universe: usize,
    seed: u64,
) -> Result<(QuerySequence, Option<FrequencyMatrix>), HarnessError> {
    let q = &cfg.queries;
    let qseed = derive_seed(seed, "queries");
    Ok(match q.dist {
        QueryDist::Uniform => (
            sample_queries(
                &QuerySpec::Uniform {
                    universe,
                    count: q.count,
                },
                None,
                qseed,
            )?,
            None,
        ),
        QueryDist::Zipf => (
            sample_queries(
                &QuerySpec::Zipf {
                    universe,
                    count: q.count,
                },
                None,
                qseed,
            )?,
            None,
        ),
        QueryDist::Matrix => {
            let f = synth_frequency_matrix(
                universe,
                q.weeks.unwrap_or(1),
                q.jitter,
                derive_seed(seed, "trends"),
            )?;
            (
                sample_queries(&QuerySpec::Matrix { per_week: q.count }, Some(&f), qseed)?,
                Some(f),
            )
        }
    })
}

/// Executes every query of `keywords` under `setting`.
pub(crate) fn observe(
    world: &World,
    setting: &Setting,
    sampler: Sampler,
    keywords: &[u32],
    seed: u64,
) -> Result<Observations, HarnessError> {
    let mut obs = Observations {
        returned: Vec::with_capacity(keywords.len()),
        tokens: Vec::new(),
        evaluations: Vec::new(),
    };
    match setting.defense {
        Defense::None => {
            let post = world.client.postings();
            obs.returned = keywords
                .iter()
                .map(|&w| post[w as usize - 1].clone())
                .collect();
        }
        Defense::Clrz => {
            let idx: ClrzIndex = clrz_build(
                &world.client,
                setting.tpr,
                setting.fpr,
                derive_seed(seed, "clrz"),
            )?;
            obs.returned = keywords.iter().map(|&w| idx.query(w).to_vec()).collect();
        }
        Defense::Osse => {
            let mut rng = rng_from_seed(derive_seed(seed, "osse"));
            match sampler {
                Sampler::Scheme => {
                    let (index, base) = world.osse.as_ref().expect("OSSE world has an index");
                    let (p, q) = pq_from(setting.tpr, setting.fpr)?;
                    let params = base.with_probabilities(p, q)?;
                    for &w in keywords {
                        let tokens = gen_token(w, &params, &mut rng);
                        let out = search(index, &tokens)?;
                        obs.tokens.push(tokens.len());
                        obs.evaluations.push(out.evaluations);
                        obs.returned.push(out.returned_ids());
                    }
                }
                Sampler::Direct => {
                    let docs = world.client.documents();
                    for &w in keywords {
                        let ids = docs
                            .iter()
                            .filter(|d| {
                                rng.random::<f64>()
                                    < if d.contains(w) {
                                        setting.tpr
                                    } else {
                                        setting.fpr
                                    }
                            })
                            .map(|d| d.id)
                            .collect();
                        obs.returned.push(ids);
                    }
                }
            }
        }
    }
    Ok(obs)
}

fn mean<T: Copy + Into<f64>>(xs: &[T]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().map(|&x| x.into()).sum::<f64>() / xs.len() as f64
}

fn u64_mean(xs: &[u64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().map(|&x| x as f64).sum::<f64>() / xs.len() as f64
}

/// Empirical `(TPR, FPR)` pooled over all queries.
pub fn empirical_rates(ds: &Dataset, keywords: &[u32], returned: &[Vec<DocId>]) -> (f64, f64) {
    let post = ds.postings();
    let n = ds.len() as f64;
    let (mut tp, mut pos, mut fp, mut neg) = (0.0, 0.0, 0.0, 0.0);
    for (&w, r) in keywords.iter().zip(returned) {
        let truth = &post[w as usize - 1];
        let hits = r
            .iter()
            .filter(|id| truth.binary_search(id).is_ok())
            .count() as f64;
        tp += hits;
        pos += truth.len() as f64;
        fp += r.len() as f64 - hits;
        neg += n - truth.len() as f64;
    }
    (
        if pos > 0.0 { tp / pos } else { f64::NAN },
        if neg > 0.0 { fp / neg } else { f64::NAN },
    )
}

fn stream(setting: &Setting) -> String {
    format!(
        "{}/{:016x}/{:016x}",
        setting.defense,
        setting.tpr.to_bits(),
        setting.fpr.to_bits()
    )
}

fn split(ds: &Dataset, train_fraction: f64, seed: u64) -> (Dataset, Dataset) {
    let mut ids: Vec<DocId> = (1..=ds.len() as DocId).collect();
    ids.shuffle(&mut rng_from_seed(derive_seed(seed, "split")));
    let cut = ((ds.len() as f64 * train_fraction).round() as usize)
        .clamp(1, ds.len().saturating_sub(1).max(1));
    let (train, test) = ids.split_at(cut);
    let (mut train, mut test) = (train.to_vec(), test.to_vec());
    train.sort_unstable();
    test.sort_unstable();
    (ds.subset(&test), ds.subset(&train))
}

struct Row {
    attack: Option<AttackKind>,
    setting: Setting,
    metric: &'static str,
    value: f64,
    runtime_ms: f64,
}

fn run_seed(
    cfg: &ExperimentConfig,
    settings: &[Setting],
    seed: u64,
) -> Result<Vec<Row>, HarnessError> {
    let full = load_corpus(cfg, seed)?;
    let universe = full.universe_size();
    let (queries, freq) = workload(cfg, universe, seed)?;
    let kinds: Vec<AttackKind> = cfg
        .attack
        .as_ref()
        .map(|a| a.kinds.clone())
        .unwrap_or_default();
    let need_osse = settings.iter().any(|s| s.defense == Defense::Osse)
        && cfg.scheme.sampler == Sampler::Scheme;
    let mut worlds: Vec<(Vec<AttackKind>, bool, World)> = Vec::new();
    let plain: Vec<AttackKind> = kinds
        .iter()
        .copied()
        .filter(|&k| k != AttackKind::Graphm)
        .collect();
    worlds.push((
        plain,
        true,
        make_world(cfg, full.clone(), full.clone(), need_osse)?,
    ));
    if kinds.contains(&AttackKind::Graphm) {
        let frac = cfg.attack.as_ref().map(|a| a.train_fraction).unwrap_or(0.5);
        let (client, train) = split(&full, frac, seed);
        worlds.push((
            vec![AttackKind::Graphm],
            false,
            make_world(cfg, client, train, need_osse)?,
        ));
    }
    let params = cfg.attack.as_ref().map(|a| a.params).unwrap_or_default();
    let mut rows = Vec::new();
    for setting in settings {
        for (wi, (attacks, utility, world)) in worlds.iter().enumerate() {
            let oseed = derive_seed(seed, &format!("observe/{wi}/{}", stream(setting)));
            let t0 = Instant::now();
            let obs = observe(world, setting, cfg.scheme.sampler, &queries.keywords, oseed)?;
            let observe_ms = t0.elapsed().as_secs_f64() * 1e3;
            if *utility {
                let (tpr, fpr) = empirical_rates(&world.client, &queries.keywords, &obs.returned);
                let mut push = |metric, value| {
                    rows.push(Row {
                        attack: None,
                        setting: *setting,
                        metric,
                        value,
                        runtime_ms: observe_ms,
                    })
                };
                push("tpr_empirical", tpr);
                push("fpr_empirical", fpr);
                push(
                    "returned_per_query",
                    mean(
                        &obs.returned
                            .iter()
                            .map(|r| r.len() as f64)
                            .collect::<Vec<_>>(),
                    ),
                );
                if !obs.tokens.is_empty() {
                    push(
                        "tokens_per_query",
                        mean(&obs.tokens.iter().map(|&t| t as f64).collect::<Vec<_>>()),
                    );
                    push("evaluations_per_query", u64_mean(&obs.evaluations));
                }
            }
            for &kind in attacks {
                let ctx = AttackContext {
                    defense: setting.defense,
                    observed: &obs.returned,
                    truth: &queries.keywords,
                    weeks: queries.weeks.as_deref(),
                    n: world.client.len(),
                    train: &world.train,
                    tpr: setting.tpr,
                    fpr: setting.fpr,
                    frequencies: freq.as_ref(),
                };
                let t0 = Instant::now();
                let report = run_attack(
                    kind,
                    &ctx,
                    &params,
                    derive_seed(seed, &format!("attack/{kind}/{}", stream(setting))),
                )?;
                let ms = t0.elapsed().as_secs_f64() * 1e3;
                let mut push = |metric, value| {
                    rows.push(Row {
                        attack: Some(kind),
                        setting: *setting,
                        metric,
                        value,
                        runtime_ms: ms,
                    })
                };
                push("accuracy", report.accuracy);
                push("failed", report.failed as u8 as f64);
                if kind == AttackKind::Count {
                    push("inconsistent", report.inconsistent as u8 as f64);
                }
            }
        }
    }
    Ok(rows)
}

/// Runs every seed (in parallel) and appends mean and 95% CI rows per
/// (attack, defense, rates, metric).
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>, HarnessError> {
    cfg.validate()?;
    let digest = cfg.digest();
    let settings = cfg.settings()?;
    let seeds = cfg.seed_list();
    let per_seed: Vec<(u64, Result<Vec<Row>, HarnessError>)> = seeds
        .par_iter()
        .map(|&s| (s, run_seed(cfg, &settings, s)))
        .collect();

    let mut rows = Vec::new();
    for (seed, result) in per_seed {
        match result {
            Ok(rs) => rows.extend(rs.into_iter().map(|r| ResultRow {
                digest: digest.clone(),
                attack: r.attack,
                defense: r.setting.defense,
                tpr: r.setting.tpr,
                fpr: r.setting.fpr,
                seed: Some(seed),
                kind: RowKind::Run,
                metric: r.metric.to_string(),
                value: r.value,
                runtime_ms: r.runtime_ms,
            })),
            Err(e) => {
                warn!("seed {seed} aborted: {e}");
                for s in &settings {
                    rows.push(ResultRow {
                        digest: digest.clone(),
                        attack: None,
                        defense: s.defense,
                        tpr: s.tpr,
                        fpr: s.fpr,
                        seed: Some(seed),
                        kind: RowKind::Run,
                        metric: "error".into(),
                        value: 1.0,
                        runtime_ms: 0.0,
                    });
                }
            }
        }
    }
    let aggregates = aggregate(&rows);
    rows.extend(aggregates);
    Ok(rows)
}

/// Summary statistics of one group of per-seed values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub sd: f64,
    pub runs: usize,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

/// Mean ± 1.96·s/√runs, with `s` the sample standard deviation.
pub fn summarize(values: &[f64]) -> Summary {
    let runs = values.len();
    let m = mean(values);
    let sd = if runs > 1 {
        (values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (runs - 1) as f64).sqrt()
    } else {
        0.0
    };
    let half = if runs > 0 {
        1.96 * sd / (runs as f64).sqrt()
    } else {
        0.0
    };
    Summary {
        mean: m,
        sd,
        runs,
        ci_lo: m - half,
        ci_hi: m + half,
    }
}

type GroupKey = (Option<AttackKind>, Defense, u64, u64, String);

fn aggregate(rows: &[ResultRow]) -> Vec<ResultRow> {
    let mut order: Vec<GroupKey> = Vec::new();
    let mut groups: HashMap<GroupKey, (Vec<f64>, Vec<f64>)> = HashMap::new();
    for r in rows.iter().filter(|r| r.kind == RowKind::Run) {
        let key = (
            r.attack,
            r.defense,
            r.tpr.to_bits(),
            r.fpr.to_bits(),
            r.metric.clone(),
        );
        let e = groups.entry(key.clone()).or_insert_with(|| {
            order.push(key);
            (Vec::new(), Vec::new())
        });
        e.0.push(r.value);
        e.1.push(r.runtime_ms);
    }
    let digest = rows.first().map(|r| r.digest.clone()).unwrap_or_default();
    let mut out = Vec::new();
    for key in order {
        let (values, times) = &groups[&key];
        let s = summarize(values);
        let rt = mean(times);
        for (kind, value) in [
            (RowKind::Mean, s.mean),
            (RowKind::Ci95Lo, s.ci_lo),
            (RowKind::Ci95Hi, s.ci_hi),
        ] {
            out.push(ResultRow {
                digest: digest.clone(),
                attack: key.0,
                defense: key.1,
                tpr: f64::from_bits(key.2),
                fpr: f64::from_bits(key.3),
                seed: None,
                kind,
                metric: key.4.clone(),
                value,
                runtime_ms: rt,
            });
        }
    }
    out
}

/// Per-seed values of one metric, in seed order.
pub fn metric_values(
    rows: &[ResultRow],
    attack: Option<AttackKind>,
    defense: Defense,
    fpr: f64,
    metric: &str,
) -> Vec<f64> {
    rows.iter()
        .filter(|r| {
            r.kind == RowKind::Run
                && r.attack == attack
                && r.defense == defense
                && r.metric == metric
        })
        .filter(|r| defense == Defense::None || (r.fpr - fpr).abs() < 1e-12)
        .map(|r| r.value)
        .collect()
}
