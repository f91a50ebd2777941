//! Query-frequency attack: match weekly cluster trends to known keyword trends.

use super::{Assignment, AttackError};
use crate::corpus::{FrequencyMatrix, Keyword};

/// Per-cluster weekly trends: entry `[c][t]` is the share of week `t` queries
/// that fell in cluster `c`.
pub fn cluster_trends(
    labels: &[usize],
    weeks: &[u32],
    clusters: usize,
    num_weeks: usize,
) -> Result<Vec<Vec<f64>>, AttackError> {
    if labels.len() != weeks.len() {
        return Err(AttackError::Invalid(format!(
            "{} labels for {} week tags",
            labels.len(),
            weeks.len()
        )));
    }
    let mut counts = vec![vec![0.0; num_weeks]; clusters];
    let mut totals = vec![0.0; num_weeks];
    for (&c, &t) in labels.iter().zip(weeks) {
        let t = t as usize;
        if c >= clusters || t >= num_weeks {
            return Err(AttackError::Invalid(format!(
                "cluster {c} / week {t} out of range"
            )));
        }
        counts[c][t] += 1.0;
        totals[t] += 1.0;
    }
    for row in &mut counts {
        for (x, &tot) in row.iter_mut().zip(&totals) {
            if tot > 0.0 {
                *x /= tot;
            }
        }
    }
    Ok(counts)
}

/// Assigns every trend the keyword whose column of `f` is nearest in
/// Euclidean distance; ties go to the lower code.
pub fn frequency_attack(
    trends: &[Vec<f64>],
    f: &FrequencyMatrix,
) -> Result<Assignment, AttackError> {
    let columns: Vec<Vec<f64>> = (1..=f.universe() as Keyword).map(|w| f.column(w)).collect();
    let mut mapping = Vec::with_capacity(trends.len());
    for trend in trends {
        if trend.len() != f.weeks() {
            return Err(AttackError::Invalid(format!(
                "trend of {} weeks against {} matrix weeks",
                trend.len(),
                f.weeks()
            )));
        }
        let mut best = (f64::INFINITY, 1);
        for (i, col) in columns.iter().enumerate() {
            let d: f64 = trend.iter().zip(col).map(|(a, b)| (a - b) * (a - b)).sum();
            if d < best.0 {
                best = (d, i as Keyword + 1);
            }
        }
        mapping.push(best.1);
    }
    Ok(Assignment {
        mapping,
        failed: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orthogonal_columns_exact() {
        // Keyword k is only queried in week k.
        let rows: Vec<Vec<f64>> = (0..4)
            .map(|t| (0..4).map(|k| if k == t { 1.0 } else { 0.0 }).collect())
            .collect();
        let f = FrequencyMatrix::new(rows).unwrap();
        let labels = [2, 0, 3, 1, 2];
        let weeks = [0, 1, 2, 3, 0];
        let trends = cluster_trends(&labels, &weeks, 4, 4).unwrap();
        let a = frequency_attack(&trends, &f).unwrap();
        assert_eq!(a.mapping, vec![2, 4, 1, 3]);
    }

    #[test]
    fn ties_go_low() {
        let f = FrequencyMatrix::new(vec![vec![0.5, 0.5]]).unwrap();
        let a = frequency_attack(&[vec![0.5]], &f).unwrap();
        assert_eq!(a.mapping, vec![1]);
    }

    #[test]
    fn bad_shapes() {
        assert!(cluster_trends(&[0], &[0, 1], 1, 2).is_err());
        assert!(cluster_trends(&[3], &[0], 1, 2).is_err());
    }
}
