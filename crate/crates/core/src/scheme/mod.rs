//! The obfuscated scheme: parameters, index construction, token generation and
//! search, plus the fixed-obfuscation baseline.

mod clrz;
pub mod codec;
mod encode;
mod index;
pub mod ippe;
mod labels;
mod params;
mod poly;
mod token;

use thiserror::Error;

pub use clrz::{clrz_build, ClrzIndex};
pub use encode::{PointEncoder, Prefix, RootCode};
pub use index::{build_index, match_token, search, SearchIndex, SearchOutcome, TokenOutcome};
pub use labels::{assign_labels_and_counters, tightest_countermax, LabelingPlan, RootSlot};
pub use params::{
    derive_params, dual_hash_countermax, single_hash_countermax, Hashing, ParamOptions,
    SchemeParams,
};
pub use poly::{document_roots, gen_vec, PolyCoeffs};
pub use token::{gen_token, Token, DUMMY_KEYWORD};

use serde::{Deserialize, Serialize};

use crate::corpus::{CorpusError, DocId, Keyword};

/// Which protection sits between the client and the server.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Defense {
    /// Plain SSE: every query returns the exact postings.
    None,
    /// Noise fixed at build time.
    Clrz,
    /// Fresh noise per query.
    Osse,
}

impl Defense {
    pub fn as_str(self) -> &'static str {
        match self {
            Defense::None => "none",
            Defense::Clrz => "clrz",
            Defense::Osse => "osse",
        }
    }
}

impl std::fmt::Display for Defense {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Defense {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(Defense::None),
            "clrz" => Ok(Defense::Clrz),
            "osse" => Ok(Defense::Osse),
            other => Err(format!("unknown defense {other:?}")),
        }
    }
}

#[derive(Debug, Error)]
pub enum SchemeError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("encoding span {span} does not fit below modulus {modulus}")]
    EncodingOverflow { span: u128, modulus: u64 },
    #[error("index build failed: counter budget exhausted for keyword {keyword}, label {label}")]
    BuildFailure { keyword: Keyword, label: u32 },
    #[error("document {id} has {size} keywords; sizemax is {sizemax} (split it first)")]
    DocumentTooLarge {
        id: DocId,
        size: usize,
        sizemax: usize,
    },
    #[error("token label {label} outside the label space")]
    InvalidToken { label: u32 },
    #[error("index corrupt: token matched documents {first} and {second}")]
    AmbiguousToken { first: DocId, second: DocId },
    #[error("codec: {0}")]
    Codec(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
