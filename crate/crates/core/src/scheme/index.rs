use serde::{Deserialize, Serialize};

use super::{assign_labels_and_counters, gen_vec, PolyCoeffs, SchemeError, SchemeParams, Token};
use crate::corpus::{compute_stats, Dataset, DatasetStats, DocId};

/// The outsourced index: one polynomial per document plus the public label map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchIndex {
    params: SchemeParams,
    stats: DatasetStats,
    polys: Vec<PolyCoeffs>,
    /// Entry `l - 1` lists the documents evaluated for tokens with label `l`.
    label_docs: Vec<Vec<DocId>>,
}

impl SearchIndex {
    pub fn from_parts(
        params: SchemeParams,
        stats: DatasetStats,
        polys: Vec<PolyCoeffs>,
    ) -> Result<Self, SchemeError> {
        if polys.len() != params.n as usize {
            return Err(SchemeError::Codec(format!(
                "{} polynomials for n = {}",
                polys.len(),
                params.n
            )));
        }
        let width = params.sizemax as usize + 2;
        if let Some(bad) = polys.iter().position(|p| p.coefficients().len() != width) {
            return Err(SchemeError::Codec(format!(
                "polynomial {} has wrong length",
                bad + 1
            )));
        }
        let mut label_docs = vec![Vec::new(); params.label_space as usize];
        for id in 1..=params.n {
            for l in params.doc_labels(id) {
                label_docs[l as usize - 1].push(id);
            }
        }
        Ok(SearchIndex {
            params,
            stats,
            polys,
            label_docs,
        })
    }

    pub fn params(&self) -> &SchemeParams {
        &self.params
    }

    pub fn stats(&self) -> &DatasetStats {
        &self.stats
    }

    pub fn polynomial(&self, id: DocId) -> &PolyCoeffs {
        &self.polys[id as usize - 1]
    }

    pub fn polynomials(&self) -> &[PolyCoeffs] {
        &self.polys
    }

    pub fn docs_with_label(&self, label: u32) -> &[DocId] {
        &self.label_docs[label as usize - 1]
    }

    pub fn n(&self) -> usize {
        self.polys.len()
    }
}

/// Builds the index for `ds` under `params`.
pub fn build_index(ds: &Dataset, params: &SchemeParams) -> Result<SearchIndex, SchemeError> {
    let stats = compute_stats(ds)?;
    if stats.n != params.n as usize || stats.universe_size != params.universe as usize {
        return Err(SchemeError::InvalidParams(
            "parameters were derived for a different dataset".into(),
        ));
    }
    let plan = assign_labels_and_counters(ds, params)?;
    let polys = ds
        .documents()
        .iter()
        .map(|d| gen_vec(d, &plan, params))
        .collect::<Result<Vec<_>, _>>()?;
    SearchIndex::from_parts(*params, stats, polys)
}

/// `true` iff the token's point is a root of the polynomial.
#[inline]
pub fn match_token(token: &Token, poly: &PolyCoeffs) -> bool {
    poly.evaluate(token.point).is_zero()
}

/// What the server sees for a single token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TokenOutcome {
    Match(DocId),
    NonMatch(u32),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub outcomes: Vec<TokenOutcome>,
    /// Number of polynomial evaluations performed.
    pub evaluations: u64,
}

impl SearchOutcome {
    /// Deduplicated, sorted ids returned to the client.
    pub fn returned_ids(&self) -> Vec<DocId> {
        let mut ids: Vec<DocId> = self
            .outcomes
            .iter()
            .filter_map(|o| match o {
                TokenOutcome::Match(id) => Some(*id),
                TokenOutcome::NonMatch(_) => None,
            })
            .collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    pub fn token_count(&self) -> usize {
        self.outcomes.len()
    }
}

/// Evaluates each token against the documents carrying its label.
pub fn search(index: &SearchIndex, tokens: &[Token]) -> Result<SearchOutcome, SchemeError> {
    let mut outcomes = Vec::with_capacity(tokens.len());
    let mut evaluations = 0u64;
    for token in tokens {
        if token.label == 0 || token.label > index.params.label_space {
            return Err(SchemeError::InvalidToken { label: token.label });
        }
        let mut hit: Option<DocId> = None;
        for &id in index.docs_with_label(token.label) {
            evaluations += 1;
            if match_token(token, index.polynomial(id)) {
                if let Some(first) = hit {
                    return Err(SchemeError::AmbiguousToken { first, second: id });
                }
                hit = Some(id);
            }
        }
        outcomes.push(match hit {
            Some(id) => TokenOutcome::Match(id),
            None => TokenOutcome::NonMatch(token.label),
        });
    }
    Ok(SearchOutcome {
        outcomes,
        evaluations,
    })
}
