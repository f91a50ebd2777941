//! Arithmetic over the Mersenne prime field GF(2^61 - 1).

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// The field modulus, 2^61 - 1.
pub const MODULUS: u64 = (1u64 << 61) - 1;

/// An element of GF(2^61 - 1), always stored reduced.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct Fp(u64);

impl Fp {
    pub const ZERO: Fp = Fp(0);
    pub const ONE: Fp = Fp(1);

    /// Reduces an arbitrary `u64` into the field.
    #[inline]
    pub fn new(value: u64) -> Self {
        let r = (value & MODULUS) + (value >> 61);
        Fp(if r >= MODULUS { r - MODULUS } else { r })
    }

    /// Wraps a value already known to be `< MODULUS`.
    #[inline]
    pub fn from_canonical(value: u64) -> Option<Self> {
        (value < MODULUS).then_some(Fp(value))
    }

    #[inline]
    pub fn value(self) -> u64 {
        self.0
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    pub fn pow(self, mut exp: u64) -> Self {
        let mut base = self;
        let mut acc = Fp::ONE;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            exp >>= 1;
        }
        acc
    }
}

impl fmt::Debug for Fp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Fp({})", self.0)
    }
}

impl fmt::Display for Fp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl Add for Fp {
    type Output = Fp;
    #[inline]
    fn add(self, rhs: Fp) -> Fp {
        let s = self.0 + rhs.0;
        Fp(if s >= MODULUS { s - MODULUS } else { s })
    }
}

impl Sub for Fp {
    type Output = Fp;
    #[inline]
    fn sub(self, rhs: Fp) -> Fp {
        if self.0 >= rhs.0 {
            Fp(self.0 - rhs.0)
        } else {
            Fp(self.0 + MODULUS - rhs.0)
        }
    }
}

impl Neg for Fp {
    type Output = Fp;
    #[inline]
    fn neg(self) -> Fp {
        Fp::ZERO - self
    }
}

impl Mul for Fp {
    type Output = Fp;
    #[inline]
    fn mul(self, rhs: Fp) -> Fp {
        let wide = self.0 as u128 * rhs.0 as u128;
        let lo = (wide as u64) & MODULUS;
        let hi = (wide >> 61) as u64;
        let r = lo + hi;
        Fp(if r >= MODULUS { r - MODULUS } else { r })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reduction_wraps_at_modulus() {
        assert_eq!(Fp::new(MODULUS), Fp::ZERO);
        assert_eq!(Fp::new(MODULUS + 5), Fp::new(5));
        assert_eq!(Fp::new(u64::MAX).value(), u64::MAX % MODULUS);
        assert!(Fp::from_canonical(MODULUS).is_none());
    }

    #[test]
    fn fermat_little_theorem() {
        let a = Fp::new(123_456_789);
        assert_eq!(a.pow(MODULUS - 1), Fp::ONE);
    }

    proptest! {
        #[test]
        fn mul_matches_u128_reference(a in 0..MODULUS, b in 0..MODULUS) {
            let expect = ((a as u128 * b as u128) % MODULUS as u128) as u64;
            prop_assert_eq!((Fp::new(a) * Fp::new(b)).value(), expect);
        }

        #[test]
        fn add_sub_inverse(a in 0..MODULUS, b in 0..MODULUS) {
            let (x, y) = (Fp::new(a), Fp::new(b));
            prop_assert_eq!(x + y - y, x);
            prop_assert_eq!(x + (-x), Fp::ZERO);
        }
    }
}
