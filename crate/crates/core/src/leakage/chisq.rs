//! Chi-square goodness of fit for count histograms against a discrete pmf.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Bins whose expected count falls below this are merged with their neighbours.
pub const MIN_EXPECTED: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareOutcome {
    pub statistic: f64,
    pub df: usize,
    pub threshold: f64,
    pub bins: usize,
    pub accepted: bool,
}

/// Per-test level when `tests` simultaneous tests share the family level `level`.
pub fn bonferroni_level(level: f64, tests: usize) -> f64 {
    1.0 - (1.0 - level) / tests.max(1) as f64
}

/// `level`-quantile of the chi-square distribution with `df` degrees of freedom.
pub fn chi_square_quantile(df: usize, level: f64) -> f64 {
    ChiSquared::new(df as f64)
        .expect("df > 0")
        .inverse_cdf(level)
}

/// Tests `samples` (one count per draw) against `pmf`.
///
/// Cells `0, 1, ..., K-1` and a final `≥ K` cell are formed, where `K` exceeds
/// every observed value and the pmf support worth a bin. Cells are merged left
/// to right until each holds an expected count of at least [`MIN_EXPECTED`],
/// and a short remainder joins the last closed bin.
pub fn chi_square_gof(samples: &[u64], pmf: impl Fn(u64) -> f64, level: f64) -> ChiSquareOutcome {
    let total = samples.len() as f64;
    let max_obs = samples.iter().copied().max().unwrap_or(0);
    let mut hist = vec![0u64; max_obs as usize + 1];
    for &s in samples {
        hist[s as usize] += 1;
    }
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let mut cumulative = 0.0;
    for k in 0..=max_obs.max(1 << 16) {
        if k > max_obs && total * (1.0 - cumulative) < MIN_EXPECTED {
            break;
        }
        let m = pmf(k);
        cumulative += m;
        cells.push((hist.get(k as usize).copied().unwrap_or(0) as f64, total * m));
    }
    cells.push((0.0, (total * (1.0 - cumulative)).max(0.0)));

    let mut bins: Vec<(f64, f64)> = Vec::new();
    let (mut o, mut e) = (0.0, 0.0);
    for (co, ce) in cells {
        o += co;
        e += ce;
        if e >= MIN_EXPECTED {
            bins.push((o, e));
            o = 0.0;
            e = 0.0;
        }
    }
    if o > 0.0 || e > 0.0 {
        match bins.last_mut() {
            Some(last) => {
                last.0 += o;
                last.1 += e;
            }
            None => bins.push((o, e)),
        }
    }
    if bins.len() < 2 {
        return ChiSquareOutcome {
            statistic: 0.0,
            df: 0,
            threshold: f64::INFINITY,
            bins: bins.len(),
            accepted: true,
        };
    }
    let statistic: f64 = bins.iter().map(|&(o, e)| (o - e) * (o - e) / e).sum();
    let df = bins.len() - 1;
    let threshold = chi_square_quantile(df, level);
    ChiSquareOutcome {
        statistic,
        df,
        threshold,
        bins: bins.len(),
        accepted: statistic <= threshold,
    }
}
