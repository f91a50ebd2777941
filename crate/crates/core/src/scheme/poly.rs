use serde::{Deserialize, Serialize};

use super::{LabelingPlan, SchemeError, SchemeParams};
use crate::corpus::Document;
use crate::field::Fp;

/// Coefficients `a_0, a_1, ..., a_d` (ascending degree) of a monic polynomial.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolyCoeffs {
    coeffs: Vec<Fp>,
}

impl PolyCoeffs {
    /// `∏ (x - r)` over the given roots.
    pub fn from_roots(roots: &[Fp]) -> Self {
        let mut coeffs = Vec::with_capacity(roots.len() + 1);
        coeffs.push(Fp::ONE);
        for &r in roots {
            // multiply by (x - r)
            coeffs.push(Fp::ZERO);
            for k in (1..coeffs.len()).rev() {
                coeffs[k] = coeffs[k - 1] - r * coeffs[k];
            }
            coeffs[0] = -(r * coeffs[0]);
        }
        PolyCoeffs { coeffs }
    }

    pub fn from_coefficients(coeffs: Vec<Fp>) -> Self {
        PolyCoeffs { coeffs }
    }

    pub fn coefficients(&self) -> &[Fp] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    /// Horner evaluation.
    #[inline]
    pub fn evaluate(&self, x: Fp) -> Fp {
        self.coeffs
            .iter()
            .rev()
            .fold(Fp::ZERO, |acc, &a| acc * x + a)
    }
}

/// Root list of a document: one keyword root per keyword, padding roots up to
/// `sizemax`, and the document's false-positive root.
pub fn document_roots(
    doc: &Document,
    plan: &LabelingPlan,
    params: &SchemeParams,
) -> Result<Vec<Fp>, SchemeError> {
    let sizemax = params.sizemax as usize;
    if doc.len() > sizemax {
        return Err(SchemeError::DocumentTooLarge {
            id: doc.id,
            size: doc.len(),
            sizemax,
        });
    }
    let enc = params.encoder();
    let mut roots = Vec::with_capacity(sizemax + 1);
    for slot in plan.slots(doc.id) {
        roots.push(enc.keyword_point(slot.keyword, slot.label, slot.counter));
    }
    roots.resize(sizemax, enc.padding_root());
    roots.push(enc.false_positive_root(doc.id));
    Ok(roots)
}

/// Coefficient vector (length `sizemax + 2`) of a document's polynomial.
pub fn gen_vec(
    doc: &Document,
    plan: &LabelingPlan,
    params: &SchemeParams,
) -> Result<PolyCoeffs, SchemeError> {
    Ok(PolyCoeffs::from_roots(&document_roots(doc, plan, params)?))
}
