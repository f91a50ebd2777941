//! Exhaustive numeric checks of the probability-ratio bounds that give the
//! per-query budget, and a brute-force budget measurement on tiny datasets.
//!
//! Notation: `G ~ Geometric(1-q)`, `A ~ Bernoulli(p)`, `B_n ~ Binomial(n, p)`.
//! With `a = (p + q(1-p))/q` and `b = 1/(1-p)` the six bounds are
//! `G+A / G ≤ a`, `G / G+A ≤ b`, `G+B_{n+1} / G+B_n ≤ a`, `G+B_n / G+B_{n+1} ≤ b`,
//! `G+B_{n+m} / G+B_n ≤ a^m` and `G+B_n / G+B_{n+m} ≤ b^m`.

use serde::{Deserialize, Serialize};

use super::{epsilon_osse_pq, PrivacyError};
use crate::corpus::{DocId, Keyword};
use crate::leakage::{ln_pmf_match, ln_pmf_nonmatch};

const LEMMA_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaViolation {
    pub lemma: String,
    pub alpha: u64,
    pub n: u64,
    pub m: u64,
    pub ln_ratio: f64,
    pub ln_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub p: f64,
    pub q: f64,
    pub checks: u64,
    pub violations: Vec<LemmaViolation>,
    /// Largest `|ratio - (1-p)|` over the `α = 0` case of `G+A / G`.
    pub alpha_zero_deviation: f64,
    /// Largest relative deviation of `G+A / G` from `a` over `α > 0`.
    pub alpha_positive_deviation: f64,
}

impl LemmaReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks all six bounds for `α ∈ 0..=alpha_cap` and `n, m ∈ 0..=n_cap`.
pub fn verify_ratio_lemmas(
    p: f64,
    q: f64,
    alpha_cap: u64,
    n_cap: u64,
) -> Result<LemmaReport, PrivacyError> {
    if !(0.0 < p && p < 1.0 && 0.0 < q && q < 1.0) {
        return Err(PrivacyError::InvalidRates(format!(
            "need 0 < p, q < 1, got p = {p}, q = {q}"
        )));
    }
    let ln_a = ((p + q * (1.0 - p)) / q).ln();
    let ln_b = -(1.0 - p).ln();
    // ln Pr[G + B_n = α] for n up to 2·n_cap.
    let table: Vec<Vec<f64>> = (0..=2 * n_cap)
        .map(|n| {
            (0..=alpha_cap)
                .map(|a| ln_pmf_nonmatch(a, n, p, q))
                .collect()
        })
        .collect();
    let mut report = LemmaReport {
        p,
        q,
        checks: 0,
        violations: Vec::new(),
        alpha_zero_deviation: 0.0,
        alpha_positive_deviation: 0.0,
    };
    let check = |report: &mut LemmaReport,
                 lemma: &str,
                 alpha: u64,
                 n: u64,
                 m: u64,
                 ln_ratio: f64,
                 ln_bound: f64| {
        report.checks += 1;
        if ln_ratio > ln_bound + LEMMA_SLACK * ln_bound.abs().max(1.0) {
            report.violations.push(LemmaViolation {
                lemma: lemma.into(),
                alpha,
                n,
                m,
                ln_ratio,
                ln_bound,
            });
        }
    };
    for alpha in 0..=alpha_cap {
        let r = ln_pmf_match(alpha, true, p, q) - ln_pmf_match(alpha, false, p, q);
        check(&mut report, "G+A/G", alpha, 0, 0, r, ln_a);
        check(&mut report, "G/G+A", alpha, 0, 0, -r, ln_b);
        if alpha == 0 {
            report.alpha_zero_deviation = (r.exp() - (1.0 - p)).abs();
        } else {
            let dev = (r.exp() / ln_a.exp() - 1.0).abs();
            report.alpha_positive_deviation = report.alpha_positive_deviation.max(dev);
        }
        for n in 0..=n_cap {
            let lo = table[n as usize][alpha as usize];
            let up = table[n as usize + 1][alpha as usize];
            check(&mut report, "G+B(n+1)/G+B(n)", alpha, n, 1, up - lo, ln_a);
            check(&mut report, "G+B(n)/G+B(n+1)", alpha, n, 1, lo - up, ln_b);
            for m in 0..=n_cap {
                let up = table[(n + m) as usize][alpha as usize];
                check(
                    &mut report,
                    "G+B(n+m)/G+B(n)",
                    alpha,
                    n,
                    m,
                    up - lo,
                    m as f64 * ln_a,
                );
                check(
                    &mut report,
                    "G+B(n)/G+B(n+m)",
                    alpha,
                    n,
                    m,
                    lo - up,
                    m as f64 * ln_b,
                );
            }
        }
    }
    Ok(report)
}

/// Largest probability ratio between two tiny instances over an outcome grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRatio {
    pub ratio: f64,
    /// Outcome vector (`n` document counts then `|h|` label counts) attaining it.
    pub outcome: Vec<u64>,
}

/// Fixed public labels for the brute-force instances: document `i` gets
/// label `((i - 1) mod |h|) + 1`.
fn label_of(id: usize, label_space: usize) -> usize {
    (id - 1) % label_space
}

/// Per-coordinate log-pmf tables of one query on one dataset.
fn coordinate_tables(
    docs: &[Vec<Keyword>],
    w: Keyword,
    p: f64,
    q: f64,
    label_space: usize,
    alpha_cap: u64,
) -> Vec<Vec<f64>> {
    let n = docs.len();
    let countermax = n as u64;
    let mut used = vec![0u64; label_space];
    let mut tables = Vec::with_capacity(n + label_space);
    for (i, d) in docs.iter().enumerate() {
        let contains = d.contains(&w);
        if contains {
            used[label_of(i + 1, label_space)] += 1;
        }
        tables.push(
            (0..=alpha_cap)
                .map(|k| ln_pmf_match(k, contains, p, q))
                .collect(),
        );
    }
    for u in used {
        tables.push(
            (0..=alpha_cap)
                .map(|k| ln_pmf_nonmatch(k, countermax - u, p, q))
                .collect(),
        );
    }
    tables
}

/// Maximizes `Pr[trace | a, wa] / Pr[trace | b, wb]` over every outcome with
/// all coordinates in `0..=alpha_cap`. Coordinates are independent, so the
/// log-ratio is a sum of per-coordinate terms and the grid maximum is attained
/// coordinate by coordinate.
#[allow(clippy::too_many_arguments)]
pub fn max_trace_ratio(
    a: &[Vec<Keyword>],
    wa: Keyword,
    b: &[Vec<Keyword>],
    wb: Keyword,
    p: f64,
    q: f64,
    label_space: usize,
    alpha_cap: u64,
) -> TraceRatio {
    assert_eq!(a.len(), b.len(), "instances must have equal size");
    let diff = log_ratio_tables(a, wa, b, wb, p, q, label_space, alpha_cap);
    let mut total = 0.0;
    let mut outcome = Vec::with_capacity(diff.len());
    for d in &diff {
        let (k, v) = d.iter().enumerate().filter(|(_, v)| v.is_finite()).fold(
            (0, f64::NEG_INFINITY),
            |best, (k, &v)| if v > best.1 { (k, v) } else { best },
        );
        total += v;
        outcome.push(k as u64);
    }
    TraceRatio {
        ratio: total.exp(),
        outcome,
    }
}

#[allow(clippy::too_many_arguments)]
fn log_ratio_tables(
    a: &[Vec<Keyword>],
    wa: Keyword,
    b: &[Vec<Keyword>],
    wb: Keyword,
    p: f64,
    q: f64,
    label_space: usize,
    alpha_cap: u64,
) -> Vec<Vec<f64>> {
    let ta = coordinate_tables(a, wa, p, q, label_space, alpha_cap);
    let tb = coordinate_tables(b, wb, p, q, label_space, alpha_cap);
    ta.iter()
        .zip(&tb)
        .map(|(x, y)| x.iter().zip(y).map(|(u, v)| u - v).collect())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BruteForceReport {
    pub n: usize,
    pub label_space: usize,
    pub alpha_cap: u64,
    /// `e^ε` for `ε = ln(1 + p/(q(1-p)))`.
    pub bound: f64,
    /// Largest ratio over datasets differing in one keyword of one document.
    pub max_document_ratio: f64,
    pub document_witness: Option<DocumentWitness>,
    /// Largest `ratio^(1/d)` over keyword pairs whose postings differ in `d ≥ 1` documents.
    pub max_keyword_ratio_per_document: f64,
    /// Largest ratio among keyword pairs with identical postings (should be 1).
    pub max_keyword_ratio_identical: f64,
    pub pairs_checked: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentWitness {
    pub dataset: Vec<Vec<Keyword>>,
    pub neighbour: Vec<Vec<Keyword>>,
    pub query: Keyword,
    pub differing_doc: DocId,
    pub outcome: Vec<u64>,
}

const SUBSETS: [&[Keyword]; 4] = [&[], &[1], &[2], &[1, 2]];

/// Neighbouring document contents: one keyword added, removed, or replaced.
fn neighbours(subset: usize) -> impl Iterator<Item = usize> {
    (0..4).filter(move |&t| t != subset && !matches!((subset, t), (0, 3) | (3, 0)))
}

/// Enumerates every dataset of `n_small ≤ 4` documents over the universe
/// `{1, 2}` with two labels, every neighbour, and both keywords.
pub fn epsilon_bruteforce_check(
    n_small: usize,
    p: f64,
    q: f64,
    alpha_cap: u64,
) -> Result<BruteForceReport, PrivacyError> {
    if !(1..=4).contains(&n_small) {
        return Err(PrivacyError::InvalidSizes(format!(
            "n_small = {n_small} must be in 1..=4"
        )));
    }
    if !(0.0 < p && p < 1.0 && 0.0 < q && q < 1.0) {
        return Err(PrivacyError::InvalidRates(format!(
            "need 0 < p, q < 1, got p = {p}, q = {q}"
        )));
    }
    let label_space = 2;
    let bound = epsilon_osse_pq(p, q).value().expect("interior rates").exp();
    let mut report = BruteForceReport {
        n: n_small,
        label_space,
        alpha_cap,
        bound,
        max_document_ratio: 0.0,
        document_witness: None,
        max_keyword_ratio_per_document: 0.0,
        max_keyword_ratio_identical: 0.0,
        pairs_checked: 0,
    };
    let total = 4usize.pow(n_small as u32);
    let decode = |code: usize| -> (Vec<usize>, Vec<Vec<Keyword>>) {
        let digits: Vec<usize> = (0..n_small).map(|i| (code >> (2 * i)) & 3).collect();
        let docs = digits.iter().map(|&s| SUBSETS[s].to_vec()).collect();
        (digits, docs)
    };
    for code in 0..total {
        let (digits, docs) = decode(code);
        for k in 0..n_small {
            for t in neighbours(digits[k]) {
                let mut other = docs.clone();
                other[k] = SUBSETS[t].to_vec();
                for w in [1, 2] {
                    let r = max_trace_ratio(&docs, w, &other, w, p, q, label_space, alpha_cap);
                    report.pairs_checked += 1;
                    if r.ratio > report.max_document_ratio {
                        report.max_document_ratio = r.ratio;
                        report.document_witness = Some(DocumentWitness {
                            dataset: docs.clone(),
                            neighbour: other.clone(),
                            query: w,
                            differing_doc: k as DocId + 1,
                            outcome: r.outcome,
                        });
                    }
                }
            }
        }
        let d = docs
            .iter()
            .filter(|doc| doc.contains(&1) != doc.contains(&2))
            .count();
        for (wa, wb) in [(1, 2), (2, 1)] {
            let r = max_trace_ratio(&docs, wa, &docs, wb, p, q, label_space, alpha_cap);
            report.pairs_checked += 1;
            if d == 0 {
                report.max_keyword_ratio_identical =
                    report.max_keyword_ratio_identical.max(r.ratio);
            } else {
                report.max_keyword_ratio_per_document = report
                    .max_keyword_ratio_per_document
                    .max(r.ratio.powf(1.0 / d as f64));
            }
        }
    }
    Ok(report)
}
