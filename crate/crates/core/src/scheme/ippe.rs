//! Inner-product predicate backend contract.
//!
//! The index stores one encrypted coefficient vector per document and a token
//! carries a predicate vector `(x^0, x^1, ..., x^d)`; a query reveals only
//! whether the inner product is zero. [`PlaintextBackend`] is the exact
//! reference used throughout the lab: it keeps vectors in the clear and tests
//! `⟨v, x⃗⟩ = 0` over the field.

use super::PolyCoeffs;
use crate::field::Fp;

pub trait PredicateBackend {
    type Ciphertext;
    type Token;

    fn encrypt(&self, coefficients: &PolyCoeffs) -> Self::Ciphertext;
    fn gen_token(&self, point: Fp, degree: usize) -> Self::Token;
    /// Returns `true` iff the inner product of plaintext and predicate is zero.
    fn query(&self, ciphertext: &Self::Ciphertext, token: &Self::Token) -> bool;
}

/// Power vector `(x^0, ..., x^degree)`.
pub fn predicate_vector(x: Fp, degree: usize) -> Vec<Fp> {
    std::iter::successors(Some(Fp::ONE), |&acc| Some(acc * x))
        .take(degree + 1)
        .collect()
}

pub fn inner_product(a: &[Fp], b: &[Fp]) -> Fp {
    a.iter().zip(b).fold(Fp::ZERO, |acc, (&x, &y)| acc + x * y)
}

#[derive(Debug, Clone, Copy, Default)]
pub struct PlaintextBackend;

impl PredicateBackend for PlaintextBackend {
    type Ciphertext = PolyCoeffs;
    type Token = Vec<Fp>;

    fn encrypt(&self, coefficients: &PolyCoeffs) -> PolyCoeffs {
        coefficients.clone()
    }

    fn gen_token(&self, point: Fp, degree: usize) -> Vec<Fp> {
        predicate_vector(point, degree)
    }

    fn query(&self, ciphertext: &PolyCoeffs, token: &Vec<Fp>) -> bool {
        inner_product(ciphertext.coefficients(), token).is_zero()
    }
}
