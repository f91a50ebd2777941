//! Experiment orchestration: configuration, seeded runs, cost measurement and output.

mod checks;
mod config;
mod costs;
mod emit;
mod run;

use thiserror::Error;

pub use checks::{evaluate_checks, CheckResult};
pub use config::{
    AttackConfig, CheckConfig, CheckOp, CorpusConfig, CostConfig, CountermaxRule, ExperimentConfig,
    QueryConfig, QueryDist, Sampler, SchemeConfig, Setting, SweepConfig,
};
pub use costs::{measure_costs, write_costs_csv, CostReport};
pub use emit::{
    emit, output_dir, render_svg, write_rows_csv, EmitFormat, OUTPUT_DIR_ENV, RESULT_HEADER,
};
pub use run::{
    empirical_rates, metric_values, run_experiment, scheme_params, summarize, Observations,
    ResultRow, RowKind, Summary,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid experiment config: {0}")]
    Config(String),
    #[error(transparent)]
    Corpus(#[from] crate::corpus::CorpusError),
    #[error(transparent)]
    Scheme(#[from] crate::scheme::SchemeError),
    #[error(transparent)]
    Privacy(#[from] crate::privacy::PrivacyError),
    #[error(transparent)]
    Attack(#[from] crate::attacks::AttackError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
