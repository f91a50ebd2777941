//! Assertions over experiment results.

use serde::{Deserialize, Serialize};

use super::config::{CheckConfig, CheckOp};
use super::run::{ResultRow, RowKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub description: String,
    /// Mean of the matching per-seed values; `None` when nothing matched.
    pub observed: Option<f64>,
    pub passed: bool,
}

fn describe(c: &CheckConfig) -> String {
    let mut scope = Vec::new();
    if let Some(a) = c.attack {
        scope.push(format!("attack={a}"));
    }
    if let Some(d) = c.defense {
        scope.push(format!("defense={d}"));
    }
    if let Some(f) = c.fpr {
        scope.push(format!("fpr={f}"));
    }
    let op = match c.op {
        CheckOp::Lt => "<",
        CheckOp::Le => "<=",
        CheckOp::Gt => ">",
        CheckOp::Ge => ">=",
        CheckOp::Eq => "==",
    };
    let tol = if c.tolerance > 0.0 {
        format!(" ± {}", c.tolerance)
    } else {
        String::new()
    };
    format!(
        "mean {}[{}] {op} {}{tol}",
        c.metric,
        scope.join(","),
        c.value
    )
}

/// Evaluates every check against the mean of its matching run rows. A check
/// that matches no rows fails.
pub fn evaluate_checks(checks: &[CheckConfig], rows: &[ResultRow]) -> Vec<CheckResult> {
    checks
        .iter()
        .map(|c| {
            let vals: Vec<f64> = rows
                .iter()
                .filter(|r| r.kind == RowKind::Run && r.metric == c.metric)
                .filter(|r| c.attack.is_none_or(|a| r.attack == Some(a)))
                .filter(|r| c.defense.is_none_or(|d| r.defense == d))
                .filter(|r| c.fpr.is_none_or(|f| (r.fpr - f).abs() < 1e-12))
                .map(|r| r.value)
                .collect();
            let observed = (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64);
            let passed = observed.is_some_and(|m| {
                let t = c.tolerance;
                match c.op {
                    CheckOp::Lt => m < c.value + t,
                    CheckOp::Le => m <= c.value + t,
                    CheckOp::Gt => m > c.value - t,
                    CheckOp::Ge => m >= c.value - t,
                    CheckOp::Eq => (m - c.value).abs() <= t,
                }
            });
            CheckResult {
                description: describe(c),
                observed,
                passed,
            }
        })
        .collect()
}
