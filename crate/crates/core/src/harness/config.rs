//! Experiment configuration (TOML) and its digest.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use super::HarnessError;
use crate::attacks::{AttackKind, AttackParams};
use crate::corpus::{FrequencyLaw, DEFAULT_JITTER};
use crate::privacy::{pq_from, tpr_fpr};
use crate::scheme::{Defense, Hashing};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    /// Explicit seeds; when empty, `0..runs` is used.
    #[serde(default)]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub runs: Option<usize>,
    pub corpus: CorpusConfig,
    pub scheme: SchemeConfig,
    pub queries: QueryConfig,
    #[serde(default)]
    pub attack: Option<AttackConfig>,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub costs: Option<CostConfig>,
    #[serde(default)]
    pub checks: Vec<CheckConfig>,
    /// Output directory, relative to the working directory.
    #[serde(default)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "lowercase", deny_unknown_fields)]
pub enum CorpusConfig {
    Synthetic {
        n: usize,
        universe: usize,
        law: FrequencyLaw,
        freqmax: usize,
        #[serde(default)]
        sizemax: Option<usize>,
        /// Regenerate the corpus for every seed (otherwise seed 0 is used throughout).
        #[serde(default = "yes")]
        per_seed: bool,
    },
    File {
        path: PathBuf,
        universe: usize,
    },
}

fn yes() -> bool {
    true
}

/// Counter budget rule: the closed-form bound, the smallest budget that
/// builds, or a fixed value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CountermaxRule {
    #[default]
    Formula,
    Tight,
    Fixed(u32),
}

impl std::str::FromStr for CountermaxRule {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "formula" => Ok(CountermaxRule::Formula),
            "tight" => Ok(CountermaxRule::Tight),
            _ => match s.parse::<u32>() {
                Ok(c) if c >= 1 => Ok(CountermaxRule::Fixed(c)),
                _ => Err(format!(
                    "countermax must be \"formula\", \"tight\" or a number >= 1, got {s:?}"
                )),
            },
        }
    }
}

impl Serialize for CountermaxRule {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            CountermaxRule::Formula => s.serialize_str("formula"),
            CountermaxRule::Tight => s.serialize_str("tight"),
            CountermaxRule::Fixed(c) => s.serialize_u32(*c),
        }
    }
}

impl<'de> Deserialize<'de> for CountermaxRule {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(u32),
            Name(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(0) => Err(serde::de::Error::custom("countermax must be at least 1")),
            Raw::Num(c) => Ok(CountermaxRule::Fixed(c)),
            Raw::Name(s) if s == "formula" => Ok(CountermaxRule::Formula),
            Raw::Name(s) if s == "tight" => Ok(CountermaxRule::Tight),
            Raw::Name(s) => Err(serde::de::Error::custom(format!(
                "countermax must be \"formula\", \"tight\" or a number, got {s:?}"
            ))),
        }
    }
}

/// How OSSE responses are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sampler {
    /// Real token generation and index search.
    #[default]
    Scheme,
    /// Independent per-document coins with the scheme's TPR/FPR, which has
    /// the same returned-set distribution.
    Direct,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeConfig {
    pub defense: Defense,
    #[serde(default)]
    pub tpr: Option<f64>,
    #[serde(default)]
    pub fpr: Option<f64>,
    #[serde(default)]
    pub p: Option<f64>,
    #[serde(default)]
    pub q: Option<f64>,
    #[serde(default = "single")]
    pub hashing: Hashing,
    #[serde(default)]
    pub countermax: CountermaxRule,
    #[serde(default)]
    pub sampler: Sampler,
}

fn single() -> Hashing {
    Hashing::Single
}

impl SchemeConfig {
    /// `(TPR, FPR)` from whichever pair was given; no defense is `(1, 0)`.
    pub fn rates(&self) -> Result<(f64, f64), HarnessError> {
        match (self.tpr, self.fpr, self.p, self.q) {
            (Some(t), Some(f), None, None) => Ok((t, f)),
            (None, None, Some(p), Some(q)) => Ok(tpr_fpr(p, q)),
            (None, None, None, None) if self.defense == Defense::None => Ok((1.0, 0.0)),
            _ => Err(HarnessError::Config(
                "scheme needs exactly one of (tpr, fpr) or (p, q)".into(),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QueryDist {
    Uniform,
    Zipf,
    /// Weekly draws from a synthetic frequency matrix.
    Matrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryConfig {
    pub dist: QueryDist,
    /// Total queries (uniform/zipf) or queries per week (matrix).
    pub count: usize,
    #[serde(default)]
    pub weeks: Option<usize>,
    #[serde(default = "jitter")]
    pub jitter: f64,
}

fn jitter() -> f64 {
    DEFAULT_JITTER
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackConfig {
    pub kinds: Vec<AttackKind>,
    /// Share of the corpus given to the graph-matching adversary as training
    /// data; the client keeps the rest.
    #[serde(default = "half")]
    pub train_fraction: f64,
    #[serde(default)]
    pub params: AttackParams,
}

fn half() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default)]
    pub defense: Vec<Defense>,
    #[serde(default)]
    pub fpr: Vec<f64>,
}

/// Per-query cost measurement against the closed-form predictions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostConfig {
    #[serde(default = "one")]
    pub token_size: f64,
    #[serde(default = "doc_size")]
    pub document_size: f64,
}

fn one() -> f64 {
    1.0
}

fn doc_size() -> f64 {
    100.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
}

/// Assertion on the mean of a metric over matching settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckConfig {
    pub metric: String,
    pub op: CheckOp,
    pub value: f64,
    #[serde(default)]
    pub tolerance: f64,
    #[serde(default)]
    pub attack: Option<AttackKind>,
    #[serde(default)]
    pub defense: Option<Defense>,
    #[serde(default)]
    pub fpr: Option<f64>,
}

/// One point of the sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Setting {
    pub defense: Defense,
    pub tpr: f64,
    pub fpr: f64,
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self, HarnessError> {
        let cfg: ExperimentConfig =
            toml::from_str(s).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is representable in TOML")
    }

    pub fn seed_list(&self) -> Vec<u64> {
        if self.seeds.is_empty() {
            (0..self.runs.unwrap_or(0) as u64).collect()
        } else {
            self.seeds.clone()
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.seed_list().is_empty() {
            return bad("at least one seed (or runs >= 1) is required".into());
        }
        if !self.seeds.is_empty() && self.runs.is_some() {
            return bad("give either seeds or runs, not both".into());
        }
        if self.queries.count == 0 {
            return bad("query count must be positive".into());
        }
        if self.queries.dist == QueryDist::Matrix && self.queries.weeks.unwrap_or(0) == 0 {
            return bad("matrix queries need weeks >= 1".into());
        }
        if let CorpusConfig::Synthetic {
            n,
            universe,
            freqmax,
            ..
        } = self.corpus
        {
            if n == 0 || universe == 0 || freqmax == 0 || freqmax > n {
                return bad(format!("synthetic corpus needs n, universe >= 1 and 1 <= freqmax <= n (got n = {n}, freqmax = {freqmax})"));
            }
        }
        self.scheme.rates()?;
        for s in self.settings()? {
            if s.defense == Defense::Osse {
                pq_from(s.tpr, s.fpr).map_err(|e| HarnessError::Config(e.to_string()))?;
            } else if !(0.0..=1.0).contains(&s.tpr)
                || !(0.0..=1.0).contains(&s.fpr)
                || s.fpr > s.tpr
            {
                return bad(format!("invalid rates TPR = {}, FPR = {}", s.tpr, s.fpr));
            }
        }
        if let Some(a) = &self.attack {
            if a.kinds.is_empty() {
                return bad("attack.kinds must name at least one attack".into());
            }
            if a.kinds.contains(&AttackKind::Freq) && self.queries.dist != QueryDist::Matrix {
                return bad("the frequency attack needs matrix (weekly) queries".into());
            }
            if !(a.train_fraction > 0.0 && a.train_fraction < 1.0) {
                return bad("attack.train_fraction must lie in (0,1)".into());
            }
        }
        if self.costs.is_some() && self.settings()?.iter().all(|s| s.defense != Defense::Osse) {
            return bad("cost measurement needs an OSSE setting".into());
        }
        Ok(())
    }

    /// Defense/rate combinations, sweep first-defense-major.
    pub fn settings(&self) -> Result<Vec<Setting>, HarnessError> {
        let (tpr, fpr) = self.scheme.rates()?;
        let sweep = self.sweep.clone().unwrap_or_default();
        let defenses = if sweep.defense.is_empty() {
            vec![self.scheme.defense]
        } else {
            sweep.defense
        };
        let fprs = if sweep.fpr.is_empty() {
            vec![fpr]
        } else {
            sweep.fpr
        };
        let mut out = Vec::new();
        for &d in &defenses {
            if d == Defense::None {
                out.push(Setting {
                    defense: d,
                    tpr: 1.0,
                    fpr: 0.0,
                });
                continue;
            }
            for &f in &fprs {
                out.push(Setting {
                    defense: d,
                    tpr,
                    fpr: f,
                });
            }
        }
        Ok(out)
    }

    /// SHA-256 over the canonical (key-sorted) JSON form of the config.
    pub fn digest(&self) -> String {
        let value = serde_json::to_value(self).expect("config serializes");
        let canonical = serde_json::to_string(&value).expect("value serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }
}
