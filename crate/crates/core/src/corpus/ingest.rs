use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use log::warn;
use serde::Deserialize;

use super::{CorpusError, Dataset, Keyword};

/// A common English stopword list.
pub const DEFAULT_STOPWORDS: &[&str] = &[
    "a",
    "about",
    "above",
    "after",
    "again",
    "against",
    "all",
    "am",
    "an",
    "and",
    "any",
    "are",
    "as",
    "at",
    "be",
    "because",
    "been",
    "before",
    "being",
    "below",
    "between",
    "both",
    "but",
    "by",
    "can",
    "could",
    "did",
    "do",
    "does",
    "doing",
    "down",
    "during",
    "each",
    "few",
    "for",
    "from",
    "further",
    "had",
    "has",
    "have",
    "having",
    "he",
    "her",
    "here",
    "hers",
    "herself",
    "him",
    "himself",
    "his",
    "how",
    "i",
    "if",
    "in",
    "into",
    "is",
    "it",
    "its",
    "itself",
    "just",
    "me",
    "more",
    "most",
    "my",
    "myself",
    "no",
    "nor",
    "not",
    "now",
    "of",
    "off",
    "on",
    "once",
    "only",
    "or",
    "other",
    "our",
    "ours",
    "ourselves",
    "out",
    "over",
    "own",
    "same",
    "she",
    "should",
    "so",
    "some",
    "such",
    "than",
    "that",
    "the",
    "their",
    "theirs",
    "them",
    "themselves",
    "then",
    "there",
    "these",
    "they",
    "this",
    "those",
    "through",
    "to",
    "too",
    "under",
    "until",
    "up",
    "very",
    "was",
    "we",
    "were",
    "what",
    "when",
    "where",
    "which",
    "while",
    "who",
    "whom",
    "why",
    "will",
    "with",
    "would",
    "you",
    "your",
    "yours",
    "yourself",
    "yourselves",
];

#[derive(Debug, Clone)]
pub struct IngestOptions {
    /// Number of most frequent keywords kept as the universe.
    pub universe_limit: usize,
    pub stopwords: HashSet<String>,
    /// When set, tokens outside this word list are dropped.
    pub dictionary: Option<HashSet<String>>,
    pub lowercase: bool,
    /// Drop tokens containing anything other than ASCII letters.
    pub alphabetic_only: bool,
}

impl IngestOptions {
    pub fn new(universe_limit: usize) -> Self {
        IngestOptions {
            universe_limit,
            stopwords: DEFAULT_STOPWORDS.iter().map(|s| s.to_string()).collect(),
            dictionary: None,
            lowercase: true,
            alphabetic_only: true,
        }
    }

    /// Loads a newline-separated word list as the dictionary filter.
    pub fn with_dictionary_file(mut self, path: &Path) -> Result<Self, CorpusError> {
        let text = std::fs::read_to_string(path)?;
        let words = text
            .lines()
            .map(|l| l.trim().to_lowercase())
            .filter(|l| !l.is_empty())
            .collect();
        self.dictionary = Some(words);
        Ok(self)
    }

    fn normalize(&self, token: &str) -> Option<String> {
        let t = token.trim();
        let t = if self.lowercase {
            t.to_lowercase()
        } else {
            t.to_string()
        };
        if t.is_empty() || (self.alphabetic_only && !t.bytes().all(|b| b.is_ascii_alphabetic())) {
            return None;
        }
        if self.stopwords.contains(&t) {
            return None;
        }
        if let Some(dict) = &self.dictionary {
            if !dict.contains(&t) {
                return None;
            }
        }
        Some(t)
    }
}

#[derive(Deserialize)]
struct Record {
    id: i64,
    tokens: Vec<String>,
}

pub fn ingest_dataset(path: &Path, options: &IngestOptions) -> Result<Dataset, CorpusError> {
    ingest_reader(BufReader::new(File::open(path)?), options)
}

/// Reads JSON-lines records `{"id": int, "tokens": [str]}`. Records are ordered by
/// their `id` and renumbered densely; empty documents are kept.
pub fn ingest_reader<R: BufRead>(
    reader: R,
    options: &IngestOptions,
) -> Result<Dataset, CorpusError> {
    if options.universe_limit == 0 {
        return Err(CorpusError::EmptyUniverse);
    }
    let mut records: Vec<(i64, Vec<String>)> = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: Record = serde_json::from_str(&line).map_err(|e| CorpusError::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        let mut tokens: Vec<String> = rec
            .tokens
            .iter()
            .filter_map(|t| options.normalize(t))
            .collect();
        tokens.sort_unstable();
        tokens.dedup();
        records.push((rec.id, tokens));
    }
    records.sort_by_key(|r| r.0);

    let mut df: HashMap<&str, usize> = HashMap::new();
    for (_, tokens) in &records {
        for t in tokens {
            *df.entry(t.as_str()).or_default() += 1;
        }
    }
    // Descending frequency, ties lexicographic.
    let mut ranked: Vec<(&str, usize)> = df.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    if ranked.is_empty() {
        return Err(CorpusError::EmptyUniverse);
    }
    if ranked.len() < options.universe_limit {
        warn!(
            "only {} distinct keywords available; universe shrunk from {}",
            ranked.len(),
            options.universe_limit
        );
    }
    ranked.truncate(options.universe_limit);
    let code_of: BTreeMap<&str, Keyword> = ranked
        .iter()
        .enumerate()
        .map(|(i, (t, _))| (*t, i as Keyword + 1))
        .collect();
    let vocabulary: Vec<String> = ranked.iter().map(|(t, _)| t.to_string()).collect();

    let lists = records
        .iter()
        .map(|(_, tokens)| {
            tokens
                .iter()
                .filter_map(|t| code_of.get(t.as_str()).copied())
                .collect()
        })
        .collect();
    Ok(Dataset::from_keyword_lists(lists, vocabulary.len())?.with_vocabulary(vocabulary))
}
