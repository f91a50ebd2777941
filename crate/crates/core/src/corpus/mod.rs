//! Documents, datasets and the workloads run against them.
//!
//! Keyword codes are dense integers `1..=|Δ|` assigned by descending document
//! frequency, so code order equals frequency rank. Document ids are dense
//! `1..=n` and `documents()[i].id == i + 1`.

mod frequency;
mod ingest;
mod queries;
mod synth;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use frequency::{
    export_frequency_csv, import_frequency_csv, synth_frequency_matrix, FrequencyMatrix,
    DEFAULT_JITTER,
};
pub use ingest::{ingest_dataset, ingest_reader, IngestOptions, DEFAULT_STOPWORDS};
pub use queries::{harmonic, sample_queries, zipf_pmf, QuerySequence, QuerySpec};
pub use synth::{gen_synthetic_corpus, FrequencyLaw, SyntheticSpec};

/// Keyword code, `1..=|Δ|`.
pub type Keyword = u32;
/// Document identifier, `1..=n`.
pub type DocId = u32;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("empty universe")]
    EmptyUniverse,
    #[error("dataset has no documents")]
    EmptyDataset,
    #[error("keyword code {code} outside universe 1..={universe}")]
    KeywordOutOfRange { code: Keyword, universe: usize },
    #[error("invalid generation parameters: {0}")]
    Generation(String),
    #[error("invalid query workload: {0}")]
    Queries(String),
    #[error("frequency matrix: {0}")]
    Frequency(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: DocId,
    /// Sorted, duplicate-free keyword codes.
    pub keywords: Vec<Keyword>,
}

impl Document {
    pub fn len(&self) -> usize {
        self.keywords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keywords.is_empty()
    }

    pub fn contains(&self, w: Keyword) -> bool {
        self.keywords.binary_search(&w).is_ok()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dataset {
    documents: Vec<Document>,
    universe_size: usize,
    /// Keyword strings by code (index `code - 1`), when the corpus was ingested from text.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    vocabulary: Option<Vec<String>>,
}

impl Dataset {
    /// Builds a dataset from per-document keyword lists; ids are assigned in order.
    pub fn from_keyword_lists(
        lists: Vec<Vec<Keyword>>,
        universe_size: usize,
    ) -> Result<Self, CorpusError> {
        let mut documents = Vec::with_capacity(lists.len());
        for (i, mut keywords) in lists.into_iter().enumerate() {
            keywords.sort_unstable();
            keywords.dedup();
            if let Some(&bad) = keywords
                .iter()
                .find(|&&w| w == 0 || w as usize > universe_size)
            {
                return Err(CorpusError::KeywordOutOfRange {
                    code: bad,
                    universe: universe_size,
                });
            }
            documents.push(Document {
                id: i as DocId + 1,
                keywords,
            });
        }
        Ok(Dataset {
            documents,
            universe_size,
            vocabulary: None,
        })
    }

    pub fn with_vocabulary(mut self, vocabulary: Vec<String>) -> Self {
        debug_assert_eq!(vocabulary.len(), self.universe_size);
        self.vocabulary = Some(vocabulary);
        self
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn document(&self, id: DocId) -> Option<&Document> {
        id.checked_sub(1)
            .and_then(|i| self.documents.get(i as usize))
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn universe_size(&self) -> usize {
        self.universe_size
    }

    pub fn vocabulary(&self) -> Option<&[String]> {
        self.vocabulary.as_deref()
    }

    /// Inverted index: entry `w - 1` holds the sorted ids of documents containing `w`.
    pub fn postings(&self) -> Vec<Vec<DocId>> {
        let mut out = vec![Vec::new(); self.universe_size];
        for d in &self.documents {
            for &w in &d.keywords {
                out[w as usize - 1].push(d.id);
            }
        }
        out
    }

    /// Document frequency `|𝒟(w)|` per keyword (index `w - 1`).
    pub fn keyword_frequencies(&self) -> Vec<usize> {
        let mut out = vec![0usize; self.universe_size];
        for d in &self.documents {
            for &w in &d.keywords {
                out[w as usize - 1] += 1;
            }
        }
        out
    }

    /// Returns the documents whose ids are listed, renumbered densely in the given order.
    pub fn subset(&self, ids: &[DocId]) -> Dataset {
        let lists = ids
            .iter()
            .map(|&id| {
                self.document(id)
                    .map(|d| d.keywords.clone())
                    .unwrap_or_default()
            })
            .collect();
        let mut ds = Dataset::from_keyword_lists(lists, self.universe_size)
            .expect("codes already validated");
        ds.vocabulary = self.vocabulary.clone();
        ds
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub n: usize,
    /// Largest number of documents sharing one keyword.
    pub freqmax: usize,
    /// Largest number of keywords in one document.
    pub sizemax: usize,
    pub universe_size: usize,
}

pub fn compute_stats(ds: &Dataset) -> Result<DatasetStats, CorpusError> {
    if ds.is_empty() {
        return Err(CorpusError::EmptyDataset);
    }
    let freqmax = ds.keyword_frequencies().into_iter().max().unwrap_or(0);
    let sizemax = ds.documents.iter().map(Document::len).max().unwrap_or(0);
    Ok(DatasetStats {
        n: ds.len(),
        freqmax,
        sizemax,
        universe_size: ds.universe_size,
    })
}

/// Splits every document larger than `sizemax` into consecutive chunks of its
/// (code-ordered) keywords. Parts get fresh sequential ids.
pub fn split_oversized(ds: &Dataset, sizemax: usize) -> Dataset {
    split_oversized_with_origin(ds, sizemax).0
}

/// Like [`split_oversized`], also returning the original id of each output document.
pub fn split_oversized_with_origin(ds: &Dataset, sizemax: usize) -> (Dataset, Vec<DocId>) {
    assert!(sizemax >= 1, "sizemax must be at least 1");
    let mut lists = Vec::with_capacity(ds.len());
    let mut origin = Vec::with_capacity(ds.len());
    for d in &ds.documents {
        if d.keywords.len() <= sizemax {
            lists.push(d.keywords.clone());
            origin.push(d.id);
        } else {
            for chunk in d.keywords.chunks(sizemax) {
                lists.push(chunk.to_vec());
                origin.push(d.id);
            }
        }
    }
    let mut out =
        Dataset::from_keyword_lists(lists, ds.universe_size).expect("codes already validated");
    out.vocabulary = ds.vocabulary.clone();
    (out, origin)
}
