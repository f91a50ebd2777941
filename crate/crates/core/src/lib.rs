//! Obfuscated searchable symmetric encryption laboratory.

pub mod attacks;
pub mod corpus;
pub mod field;
pub mod harness;
pub mod leakage;
pub mod privacy;
pub mod rng;
pub mod scheme;

pub use attacks::AttackKind;
pub use corpus::{Dataset, DocId, Keyword};
pub use harness::{ExperimentConfig, ResultRow};
pub use scheme::{Defense, Hashing, SchemeParams, SearchIndex};
