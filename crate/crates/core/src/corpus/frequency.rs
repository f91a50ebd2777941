use std::io::{Read, Write};

use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};

use super::{zipf_pmf, CorpusError};
use crate::rng::rng_from_seed;

/// Default log-normal sigma for synthetic weekly jitter.
pub const DEFAULT_JITTER: f64 = 0.25;

const ROW_TOLERANCE: f64 = 1e-6;

/// Per-week query probabilities: `rows()[week][w - 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyMatrix {
    rows: Vec<Vec<f64>>,
}

impl FrequencyMatrix {
    /// Validates non-negativity, a common width, and unit row sums (±1e-6).
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self, CorpusError> {
        let width = rows.first().map(Vec::len).unwrap_or(0);
        if rows.is_empty() || width == 0 {
            return Err(CorpusError::Frequency(
                "matrix must have at least one row and column".into(),
            ));
        }
        for (week, row) in rows.iter().enumerate() {
            if row.len() != width {
                return Err(CorpusError::Frequency(format!(
                    "row {week} has {} entries, expected {width}",
                    row.len()
                )));
            }
            if let Some(v) = row.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
                return Err(CorpusError::Frequency(format!(
                    "row {week} has invalid entry {v}"
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_TOLERANCE {
                return Err(CorpusError::Frequency(format!("row {week} sums to {sum}")));
            }
        }
        Ok(FrequencyMatrix { rows })
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn weeks(&self) -> usize {
        self.rows.len()
    }

    pub fn universe(&self) -> usize {
        self.rows[0].len()
    }

    /// Trend of keyword `w` across weeks.
    pub fn column(&self, w: u32) -> Vec<f64> {
        self.rows.iter().map(|r| r[w as usize - 1]).collect()
    }
}

/// Zipf-shaped weekly rows with independent log-normal multiplicative jitter,
/// renormalized per week. `sigma = 0` reproduces the Zipf pmf exactly.
pub fn synth_frequency_matrix(
    universe: usize,
    weeks: usize,
    sigma: f64,
    seed: u64,
) -> Result<FrequencyMatrix, CorpusError> {
    if weeks == 0 || universe == 0 {
        return Err(CorpusError::Frequency(
            "weeks and universe must be at least 1".into(),
        ));
    }
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(CorpusError::Frequency(format!(
            "invalid jitter sigma {sigma}"
        )));
    }
    let base = zipf_pmf(universe);
    let mut rng = rng_from_seed(seed);
    let noise = LogNormal::new(0.0, sigma).map_err(|e| CorpusError::Frequency(e.to_string()))?;
    let rows = (0..weeks)
        .map(|_| {
            let mut row: Vec<f64> = if sigma == 0.0 {
                base.clone()
            } else {
                base.iter().map(|p| p * noise.sample(&mut rng)).collect()
            };
            let s: f64 = row.iter().sum();
            row.iter_mut().for_each(|v| *v /= s);
            row
        })
        .collect();
    FrequencyMatrix::new(rows)
}

/// Reads a CSV whose header lists keyword codes `1..=|Δ|` and whose rows are weeks.
pub fn import_frequency_csv<R: Read>(reader: R) -> Result<FrequencyMatrix, CorpusError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    for (i, h) in header.iter().enumerate() {
        if h.parse::<usize>().ok() != Some(i + 1) {
            return Err(CorpusError::Frequency(format!(
                "header column {i} is {h:?}, expected keyword code {}",
                i + 1
            )));
        }
    }
    let mut rows = Vec::new();
    for (week, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|e| CorpusError::Frequency(format!("row {week}: {e}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    FrequencyMatrix::new(rows)
}

pub fn export_frequency_csv<W: Write>(
    matrix: &FrequencyMatrix,
    writer: W,
) -> Result<(), CorpusError> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record((1..=matrix.universe()).map(|i| i.to_string()))?;
    for row in matrix.rows() {
        wtr.write_record(row.iter().map(|v| format!("{v:e}")))?;
    }
    wtr.flush()?;
    Ok(())
}
