use rand::distr::weighted::WeightedIndex;
use rand::distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use super::{CorpusError, FrequencyMatrix, Keyword};
use crate::rng::rng_from_seed;

/// How a query workload is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "dist", rename_all = "lowercase")]
pub enum QuerySpec {
    Uniform {
        universe: usize,
        count: usize,
    },
    /// Rank `i` drawn with probability `1 / (i · H_|Δ|)`.
    Zipf {
        universe: usize,
        count: usize,
    },
    /// `per_week` queries per row of a frequency matrix.
    Matrix {
        per_week: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuerySequence {
    pub keywords: Vec<Keyword>,
    /// Week index (0-based) of each query, for matrix workloads.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weeks: Option<Vec<u32>>,
}

impl QuerySequence {
    pub fn len(&self) -> usize {
        self.keywords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keywords.is_empty()
    }

    /// Number of distinct keywords queried.
    pub fn distinct(&self) -> usize {
        let mut k = self.keywords.clone();
        k.sort_unstable();
        k.dedup();
        k.len()
    }
}

/// `H_k = Σ_{i=1}^k 1/i`.
pub fn harmonic(k: usize) -> f64 {
    (1..=k).map(|i| 1.0 / i as f64).sum()
}

/// Zipf query distribution over ranks `1..=universe` (index `i - 1`).
pub fn zipf_pmf(universe: usize) -> Vec<f64> {
    let h = harmonic(universe);
    (1..=universe).map(|i| 1.0 / (i as f64 * h)).collect()
}

pub fn sample_queries(
    spec: &QuerySpec,
    matrix: Option<&FrequencyMatrix>,
    seed: u64,
) -> Result<QuerySequence, CorpusError> {
    let mut rng = rng_from_seed(seed);
    match *spec {
        QuerySpec::Uniform { universe, count } | QuerySpec::Zipf { universe, count } => {
            if count == 0 {
                return Err(CorpusError::Queries("query count must be positive".into()));
            }
            if universe == 0 {
                return Err(CorpusError::EmptyUniverse);
            }
            let keywords = if matches!(spec, QuerySpec::Uniform { .. }) {
                let d = Uniform::new_inclusive(1, universe as Keyword).expect("non-empty range");
                (0..count).map(|_| d.sample(&mut rng)).collect()
            } else {
                let d = WeightedIndex::new(zipf_pmf(universe)).expect("positive weights");
                (0..count)
                    .map(|_| d.sample(&mut rng) as Keyword + 1)
                    .collect()
            };
            Ok(QuerySequence {
                keywords,
                weeks: None,
            })
        }
        QuerySpec::Matrix { per_week } => {
            let f = matrix.ok_or_else(|| {
                CorpusError::Queries("matrix workload needs a frequency matrix".into())
            })?;
            if per_week == 0 {
                return Err(CorpusError::Queries(
                    "queries per week must be positive".into(),
                ));
            }
            let mut keywords = Vec::with_capacity(per_week * f.weeks());
            let mut weeks = Vec::with_capacity(per_week * f.weeks());
            for (week, row) in f.rows().iter().enumerate() {
                let d =
                    WeightedIndex::new(row).map_err(|e| CorpusError::Frequency(e.to_string()))?;
                for _ in 0..per_week {
                    keywords.push(d.sample(&mut rng) as Keyword + 1);
                    weeks.push(week as u32);
                }
            }
            Ok(QuerySequence {
                keywords,
                weeks: Some(weeks),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::synth_frequency_matrix;

    #[test]
    fn zipf_two_keywords() {
        let p = zipf_pmf(2);
        assert!((p[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((p[1] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn zero_count_rejected() {
        let spec = QuerySpec::Uniform {
            universe: 5,
            count: 0,
        };
        assert!(sample_queries(&spec, None, 1).is_err());
    }

    #[test]
    fn matrix_workload_tags_weeks() {
        let f = synth_frequency_matrix(30, 50, 0.25, 3).unwrap();
        let q = sample_queries(&QuerySpec::Matrix { per_week: 100 }, Some(&f), 9).unwrap();
        assert_eq!(q.len(), 5000);
        let weeks = q.weeks.unwrap();
        assert_eq!(weeks[0], 0);
        assert_eq!(weeks[4999], 49);
        assert_eq!(weeks.iter().filter(|&&w| w == 7).count(), 100);
    }

    #[test]
    fn matrix_workload_requires_matrix() {
        assert!(sample_queries(&QuerySpec::Matrix { per_week: 3 }, None, 1).is_err());
    }

    #[test]
    fn deterministic_under_seed() {
        let spec = QuerySpec::Zipf {
            universe: 40,
            count: 300,
        };
        assert_eq!(
            sample_queries(&spec, None, 5).unwrap(),
            sample_queries(&spec, None, 5).unwrap()
        );
    }

    #[test]
    fn zipf_empirical_frequencies_within_three_standard_errors() {
        let universe = 10;
        let t = 1_000_000;
        let q = sample_queries(&QuerySpec::Zipf { universe, count: t }, None, 2024).unwrap();
        let mut counts = vec![0usize; universe];
        for &w in &q.keywords {
            counts[w as usize - 1] += 1;
        }
        for (i, p) in zipf_pmf(universe).into_iter().enumerate() {
            let se = (p * (1.0 - p) / t as f64).sqrt();
            let emp = counts[i] as f64 / t as f64;
            assert!(
                (emp - p).abs() < 3.0 * se,
                "rank {} emp {emp} vs {p}",
                i + 1
            );
        }
    }
}
