//! Differential privacy of the two obfuscation schemes, numeric checks of the
//! ratio bounds behind it, and the expected communication/computation costs.

mod lemmas;
mod overhead;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use lemmas::{
    epsilon_bruteforce_check, max_trace_ratio, verify_ratio_lemmas, BruteForceReport,
    DocumentWitness, LemmaReport, LemmaViolation, TraceRatio,
};
pub use overhead::{
    expected_matching_docs, overhead_report, zipf_expected_matching_docs_approx, CaseBounds,
    KeywordDistribution, OverheadReport,
};

use crate::scheme::Defense;

#[derive(Debug, Error, PartialEq)]
pub enum PrivacyError {
    #[error("invalid rates: {0}")]
    InvalidRates(String),
    #[error("invalid sizes: {0}")]
    InvalidSizes(String),
}

/// A privacy budget; `Infinite` means no guarantee at all.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Epsilon {
    Finite(f64),
    Infinite,
}

impl Epsilon {
    pub fn value(self) -> Option<f64> {
        match self {
            Epsilon::Finite(v) => Some(v),
            Epsilon::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Epsilon::Infinite)
    }
}

impl std::fmt::Display for Epsilon {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Epsilon::Finite(v) => write!(f, "{v}"),
            Epsilon::Infinite => f.write_str("inf"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DpReport {
    pub scheme: Defense,
    pub tpr: f64,
    pub fpr: f64,
    pub epsilon_documents: Epsilon,
    pub epsilon_keywords: Epsilon,
}

fn check_rates(tpr: f64, fpr: f64) -> Result<(), PrivacyError> {
    if !(0.0..=1.0).contains(&tpr) || !(0.0..=1.0).contains(&fpr) {
        return Err(PrivacyError::InvalidRates(format!(
            "TPR = {tpr}, FPR = {fpr} outside [0, 1]"
        )));
    }
    if fpr > tpr {
        return Err(PrivacyError::InvalidRates(format!(
            "FPR = {fpr} exceeds TPR = {tpr}"
        )));
    }
    Ok(())
}

/// `TPR = p + (1 - p) q`, `FPR = q`.
pub fn tpr_fpr(p: f64, q: f64) -> (f64, f64) {
    (p + (1.0 - p) * q, q)
}

/// Inverse of [`tpr_fpr`]: `q = FPR`, `p = (TPR - FPR) / (1 - FPR)`.
pub fn pq_from(tpr: f64, fpr: f64) -> Result<(f64, f64), PrivacyError> {
    check_rates(tpr, fpr)?;
    if fpr >= tpr {
        return Err(PrivacyError::InvalidRates(format!(
            "need FPR < TPR, got TPR = {tpr}, FPR = {fpr}"
        )));
    }
    Ok(((tpr - fpr) / (1.0 - fpr), fpr))
}

/// `ln((TPR/FPR)·(1-FPR)/(1-TPR))`, infinite when `FPR = 0` or `TPR = 1`.
pub fn epsilon_osse(tpr: f64, fpr: f64) -> Result<Epsilon, PrivacyError> {
    check_rates(tpr, fpr)?;
    if tpr == fpr {
        return Ok(Epsilon::Finite(0.0));
    }
    if fpr == 0.0 || tpr == 1.0 {
        return Ok(Epsilon::Infinite);
    }
    Ok(Epsilon::Finite(
        ((tpr / fpr) * (1.0 - fpr) / (1.0 - tpr)).ln(),
    ))
}

/// The same budget in terms of the token probabilities: `ln(1 + p/(q(1-p)))`.
pub fn epsilon_osse_pq(p: f64, q: f64) -> Epsilon {
    if p == 0.0 {
        return Epsilon::Finite(0.0);
    }
    if q == 0.0 || p == 1.0 {
        return Epsilon::Infinite;
    }
    Epsilon::Finite((p / (q * (1.0 - p))).ln_1p())
}

fn epsilon_clrz_documents(tpr: f64, fpr: f64) -> Epsilon {
    let a = if fpr == 0.0 {
        if tpr == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        tpr / fpr
    };
    let b = if tpr == 1.0 {
        if fpr == 1.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        (1.0 - fpr) / (1.0 - tpr)
    };
    let m = a.max(b);
    if m.is_infinite() {
        Epsilon::Infinite
    } else {
        Epsilon::Finite(m.ln())
    }
}

/// Fixed obfuscation: `ln max{TPR/FPR, (1-FPR)/(1-TPR)}` for documents and no
/// protection for keywords, since repeated queries return identical results.
pub fn epsilon_clrz(tpr: f64, fpr: f64) -> Result<DpReport, PrivacyError> {
    check_rates(tpr, fpr)?;
    Ok(DpReport {
        scheme: Defense::Clrz,
        tpr,
        fpr,
        epsilon_documents: epsilon_clrz_documents(tpr, fpr),
        epsilon_keywords: Epsilon::Infinite,
    })
}

/// Per-query obfuscation protects documents and keywords with the same budget.
pub fn osse_report(tpr: f64, fpr: f64) -> Result<DpReport, PrivacyError> {
    let e = epsilon_osse(tpr, fpr)?;
    Ok(DpReport {
        scheme: Defense::Osse,
        tpr,
        fpr,
        epsilon_documents: e,
        epsilon_keywords: e,
    })
}

pub fn dp_report(defense: Defense, tpr: f64, fpr: f64) -> Result<DpReport, PrivacyError> {
    match defense {
        Defense::Osse => osse_report(tpr, fpr),
        Defense::Clrz => epsilon_clrz(tpr, fpr),
        Defense::None => {
            check_rates(tpr, fpr)?;
            Ok(DpReport {
                scheme: Defense::None,
                tpr,
                fpr,
                epsilon_documents: Epsilon::Infinite,
                epsilon_keywords: Epsilon::Infinite,
            })
        }
    }
}

/// The FPR at which the document budget equals `epsilon` for a fixed TPR.
/// Both schemes' budgets fall strictly from `∞` at `FPR → 0` to `0` at
/// `FPR = TPR`, so the root is unique and found by bisection.
pub fn fpr_for_epsilon(defense: Defense, tpr: f64, epsilon: f64) -> Result<f64, PrivacyError> {
    if !(0.0 < tpr && tpr < 1.0) || !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(PrivacyError::InvalidRates(format!(
            "need 0 < TPR < 1 and a positive finite epsilon, got {tpr}, {epsilon}"
        )));
    }
    let eps_at = |fpr: f64| -> f64 {
        let e = match defense {
            Defense::Osse => epsilon_osse(tpr, fpr).expect("fpr in range"),
            Defense::Clrz => epsilon_clrz_documents(tpr, fpr),
            Defense::None => Epsilon::Infinite,
        };
        e.value().unwrap_or(f64::INFINITY)
    };
    if defense == Defense::None {
        return Err(PrivacyError::InvalidRates(
            "no defense has no finite budget".into(),
        ));
    }
    let (mut lo, mut hi) = (0.0, tpr);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if eps_at(mid) > epsilon {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Total budget of `t` queries under basic composition: `t·ε`.
pub fn basic_composition(epsilon: f64, t: u64) -> f64 {
    t as f64 * epsilon
}

/// Advanced composition: `ε √(2t ln(1/δ)) + t ε (e^ε - 1)`, valid with
/// failure probability `δ`. Informative only.
pub fn advanced_composition(epsilon: f64, t: u64, delta: f64) -> f64 {
    let t = t as f64;
    epsilon * (2.0 * t * (1.0 / delta).ln()).sqrt() + t * epsilon * epsilon.exp_m1()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rates_from_probabilities() {
        let (t, f) = tpr_fpr(0.9999, 0.01);
        assert!((t - 0.999901).abs() < 1e-12);
        assert_eq!(f, 0.01);
        assert_eq!(tpr_fpr(1.0, 0.3).0, 1.0);
        assert!(pq_from(0.3, 0.3).is_err());
        assert!(pq_from(0.2, 0.5).is_err());
        assert_eq!(pq_from(0.9999, 0.0).unwrap(), (0.9999, 0.0));
    }

    #[test]
    fn budget_values() {
        let e = epsilon_osse(0.9999, 0.025).unwrap().value().unwrap();
        // ln(0.9999/0.025 · 0.975/0.0001)
        assert!((e - (0.9999f64 / 0.025 * 0.975 / 0.0001).ln()).abs() < 1e-12);
        assert!((e - 12.874).abs() < 1e-3);
        assert!(
            (fpr_for_epsilon(Defense::Osse, 0.8, 1.0).unwrap() - 1.0 / (1.0 + 1f64.exp() / 4.0))
                .abs()
                < 1e-12
        );
        assert!(
            (fpr_for_epsilon(Defense::Clrz, 0.8, 1.0).unwrap() - (1.0 - 0.2 * 1f64.exp())).abs()
                < 1e-12
        );
        assert!((fpr_for_epsilon(Defense::Osse, 0.3, 1.0).unwrap() - 0.1362).abs() < 1e-3);
        assert!(
            (fpr_for_epsilon(Defense::Clrz, 0.3, 1.0).unwrap() - 0.3 / 1f64.exp()).abs() < 1e-12
        );
    }

    #[test]
    fn boundaries_are_infinite() {
        assert!(epsilon_osse(0.9, 0.0).unwrap().is_infinite());
        assert!(epsilon_osse(1.0, 0.2).unwrap().is_infinite());
        assert_eq!(epsilon_osse(0.4, 0.4).unwrap(), Epsilon::Finite(0.0));
        let r = epsilon_clrz(0.5, 0.5).unwrap();
        assert_eq!(r.epsilon_documents, Epsilon::Finite(0.0));
        assert!(r.epsilon_keywords.is_infinite());
        assert!(epsilon_clrz(0.9999, 0.0)
            .unwrap()
            .epsilon_documents
            .is_infinite());
        let o = osse_report(0.9, 0.1).unwrap();
        assert_eq!(o.epsilon_documents, o.epsilon_keywords);
    }

    #[test]
    fn infinity_survives_serialization() {
        let r = epsilon_clrz(0.9, 0.1).unwrap();
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains("\"infinite\""));
        assert_eq!(serde_json::from_str::<DpReport>(&json).unwrap(), r);
        assert_eq!(Epsilon::Infinite.to_string(), "inf");
    }

    #[test]
    fn composition_figures() {
        assert_eq!(basic_composition(0.5, 10), 5.0);
        let a = advanced_composition(0.01, 1000, 1e-6);
        assert!(a < basic_composition(0.01, 1000));
    }

    proptest! {
        #[test]
        fn two_forms_agree(p in 0.001f64..0.999, q in 0.001f64..0.999) {
            let (t, f) = tpr_fpr(p, q);
            let a = epsilon_osse(t, f).unwrap().value().unwrap();
            let b = epsilon_osse_pq(p, q).value().unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0), "{} vs {}", a, b);
        }

        #[test]
        fn roundtrip(p in 0.0f64..0.999, q in 0.0f64..0.999) {
            prop_assume!(p > 1e-9);
            let (t, f) = tpr_fpr(p, q);
            let (p2, q2) = pq_from(t, f).unwrap();
            prop_assert!((p2 - p).abs() < 1e-12 && (q2 - q).abs() < 1e-12);
        }

        #[test]
        fn monotone(t in 0.05f64..0.95, a in 0.01f64..0.9, b in 0.01f64..0.99) {
            // 0 < f1 < f2 < t by construction
            let f1 = a * t;
            let f2 = (a + (1.0 - a) * b) * t;
            let e1 = epsilon_osse(t, f1).unwrap().value().unwrap();
            let e2 = epsilon_osse(t, f2).unwrap().value().unwrap();
            prop_assert!(e1 > e2);
            let g1 = epsilon_osse(t.min(0.99), f1.min(t * 0.5)).unwrap().value().unwrap();
            let g2 = epsilon_osse((t + 0.04).min(0.999), f1.min(t * 0.5)).unwrap().value().unwrap();
            prop_assert!(g2 > g1);
        }
    }
}
