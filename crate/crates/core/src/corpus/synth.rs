use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use super::{CorpusError, Dataset, Keyword};
use crate::rng::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrequencyLaw {
    /// Every keyword appears in exactly `freqmax` documents.
    Uniform,
    /// Keyword of rank `i` appears in `⌈freqmax / i⌉` documents.
    Zipf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n: usize,
    pub universe: usize,
    pub law: FrequencyLaw,
    pub freqmax: usize,
    /// Optional cap on keywords per document.
    #[serde(default)]
    pub sizemax: Option<usize>,
    pub seed: u64,
}

impl SyntheticSpec {
    /// Target document frequency of each keyword, by rank.
    pub fn frequencies(&self) -> Vec<usize> {
        (1..=self.universe)
            .map(|i| match self.law {
                FrequencyLaw::Uniform => self.freqmax,
                FrequencyLaw::Zipf => self.freqmax.div_ceil(i),
            })
            .collect()
    }
}

/// Generates a corpus where keyword `i`'s documents are a uniformly random
/// subset of the documents (with spare capacity when `sizemax` is set).
pub fn gen_synthetic_corpus(spec: &SyntheticSpec) -> Result<Dataset, CorpusError> {
    if spec.n == 0 || spec.universe == 0 {
        return Err(CorpusError::Generation(
            "n and universe must be at least 1".into(),
        ));
    }
    if spec.freqmax == 0 || spec.freqmax > spec.n {
        return Err(CorpusError::Generation(format!(
            "freqmax {} must lie in 1..={}",
            spec.freqmax, spec.n
        )));
    }
    let freqs = spec.frequencies();
    if let Some(cap) = spec.sizemax {
        let total: usize = freqs.iter().sum();
        if total > cap * spec.n {
            return Err(CorpusError::Generation(format!(
                "{total} keyword placements exceed capacity {} x {}",
                spec.n, cap
            )));
        }
    }

    let mut rng = rng_from_seed(spec.seed);
    let mut lists: Vec<Vec<Keyword>> = vec![Vec::new(); spec.n];
    for (rank, &f) in freqs.iter().enumerate() {
        let w = rank as Keyword + 1;
        match spec.sizemax {
            None => {
                for j in sample(&mut rng, spec.n, f) {
                    lists[j].push(w);
                }
            }
            Some(cap) => {
                let open: Vec<usize> = (0..spec.n).filter(|&j| lists[j].len() < cap).collect();
                if open.len() < f {
                    return Err(CorpusError::Generation(format!(
                        "cannot place keyword {w} in {f} documents under sizemax {cap}"
                    )));
                }
                for j in sample(&mut rng, open.len(), f) {
                    lists[open[j]].push(w);
                }
            }
        }
    }
    Dataset::from_keyword_lists(lists, spec.universe)
}
