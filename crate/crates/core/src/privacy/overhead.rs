//! Expected per-query communication and server work.

use serde::{Deserialize, Serialize};

use super::PrivacyError;
use crate::corpus::harmonic;
use crate::scheme::SchemeParams;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// How queried keywords relate to document frequencies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KeywordDistribution {
    /// Every keyword is in `freqmax` documents.
    Uniform,
    /// Rank `i` is queried with probability `1/(i·H_|Δ|)` and held by `freqmax/i` documents.
    Zipf,
    /// Every queried keyword is in a single document.
    WorstCase,
}

impl std::str::FromStr for KeywordDistribution {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "uniform" => Ok(KeywordDistribution::Uniform),
            "zipf" => Ok(KeywordDistribution::Zipf),
            "worstcase" | "worst-case" => Ok(KeywordDistribution::WorstCase),
            other => Err(format!("unknown keyword distribution {other:?}")),
        }
    }
}

/// `E_w`, the expected number of documents holding the queried keyword.
pub fn expected_matching_docs(
    dist: KeywordDistribution,
    freqmax: usize,
    universe: usize,
) -> Result<f64, PrivacyError> {
    if universe == 0 {
        return Err(PrivacyError::InvalidSizes(
            "universe must be non-empty".into(),
        ));
    }
    let f = freqmax as f64;
    Ok(match dist {
        KeywordDistribution::Uniform => f,
        KeywordDistribution::Zipf => {
            let h = harmonic(universe);
            (1..=universe).map(|i| f / (h * (i * i) as f64)).sum()
        }
        KeywordDistribution::WorstCase => 1.0,
    })
}

/// Closed-form approximation `freqmax/(ln|Δ| + γ) · π²/6` of the Zipf case.
pub fn zipf_expected_matching_docs_approx(freqmax: usize, universe: usize) -> f64 {
    freqmax as f64 / ((universe as f64).ln() + EULER_GAMMA) * std::f64::consts::PI.powi(2) / 6.0
}

/// Published overhead ceilings for the three keyword distributions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CaseBounds {
    pub uniform: f64,
    pub zipf: f64,
    pub worst_case: f64,
}

impl CaseBounds {
    pub fn new(universe: usize, freqmax: usize) -> Self {
        CaseBounds {
            uniform: 3.0,
            zipf: 1.36 + 0.61 * (universe as f64).ln(),
            worst_case: 1.0 + 2.0 * freqmax as f64,
        }
    }

    pub fn get(&self, dist: KeywordDistribution) -> f64 {
        match dist {
            KeywordDistribution::Uniform => self.uniform,
            KeywordDistribution::Zipf => self.zipf,
            KeywordDistribution::WorstCase => self.worst_case,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverheadReport {
    /// `n_cs = |h|·countermax·p + (n + |h|)·q/(1-q)`.
    pub expected_tokens: f64,
    /// `n_sc = E_w(p + q - pq) + (n - E_w) q`.
    pub expected_returned: f64,
    /// `(n_cs·s_tok + n_sc·s_doc) / (E_w·s_doc)`.
    pub overhead: f64,
    /// Expected match evaluations, `n_cs·n/|h|`.
    pub computation: f64,
    /// `n·(countermax + 1)`.
    pub computation_bound: f64,
    /// `freqmax/E_w·((countermax + 1)·s_tok/s_doc + 1) + 1`.
    pub overhead_bound: f64,
    pub case_bounds: CaseBounds,
    /// Whether `overhead` is below the ceiling of the stated distribution.
    pub within_case_bound: Option<bool>,
}

pub fn overhead_report(
    params: &SchemeParams,
    e_w: f64,
    s_tok: f64,
    s_doc: f64,
    dist: Option<KeywordDistribution>,
) -> Result<OverheadReport, PrivacyError> {
    if !(e_w > 0.0) {
        return Err(PrivacyError::InvalidSizes(format!(
            "E_w = {e_w} must be positive"
        )));
    }
    if !(s_tok > 0.0 && s_doc > 0.0) {
        return Err(PrivacyError::InvalidSizes(
            "token and document sizes must be positive".into(),
        ));
    }
    let (p, q) = (params.p, params.q);
    let (n, h, cmax) = (
        params.n as f64,
        params.label_space as f64,
        params.countermax as f64,
    );
    let expected_tokens = h * cmax * p + (n + h) * q / (1.0 - q);
    let expected_returned = e_w * (p + q - p * q) + (n - e_w) * q;
    let overhead = (expected_tokens * s_tok + expected_returned * s_doc) / (e_w * s_doc);
    let case_bounds = CaseBounds::new(params.universe as usize, params.freqmax as usize);
    Ok(OverheadReport {
        expected_tokens,
        expected_returned,
        overhead,
        computation: expected_tokens * n / h,
        computation_bound: n * (cmax + 1.0),
        overhead_bound: params.freqmax as f64 / e_w * ((cmax + 1.0) * s_tok / s_doc + 1.0) + 1.0,
        case_bounds,
        within_case_bound: dist.map(|d| overhead < case_bounds.get(d)),
    })
}
