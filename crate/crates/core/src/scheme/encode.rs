//! Injective packing of `(first ‖ label ‖ counter)` triples into field elements.

use serde::{Deserialize, Serialize};

use crate::field::Fp;

/// The leading component of a root or query point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Prefix {
    /// The dummy keyword outside the universe.
    Dummy,
    Keyword(u32),
    /// A document identifier, used by false-positive roots.
    Doc(u32),
}

/// A decoded point `(first, label, counter)` with label in `-1..=|h|` and
/// counter in `-1..countermax`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RootCode {
    pub prefix: Prefix,
    pub label: i64,
    pub counter: i64,
}

/// Fixed-width mixed-radix encoder:
/// `first · (|h|+2)(cmax+2) + (label+1)(cmax+2) + (counter+1)` where
/// `first = 0` for the dummy keyword, `w` for keyword codes and `|Δ|+1+id` for ids.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PointEncoder {
    universe: u64,
    n: u64,
    label_radix: u64,
    counter_radix: u64,
}

impl PointEncoder {
    pub fn new(universe: u32, n: u32, label_space: u32, countermax: u32) -> Self {
        PointEncoder {
            universe: universe as u64,
            n: n as u64,
            label_radix: label_space as u64 + 2,
            counter_radix: countermax as u64 + 2,
        }
    }

    fn first_code(&self, prefix: Prefix) -> u64 {
        match prefix {
            Prefix::Dummy => 0,
            Prefix::Keyword(w) => {
                debug_assert!(w >= 1 && w as u64 <= self.universe);
                w as u64
            }
            Prefix::Doc(id) => {
                debug_assert!(id >= 1 && id as u64 <= self.n);
                self.universe + 1 + id as u64
            }
        }
    }

    pub fn encode(&self, code: RootCode) -> Fp {
        debug_assert!(code.label >= -1 && ((code.label + 1) as u64) < self.label_radix);
        debug_assert!(code.counter >= -1 && ((code.counter + 1) as u64) < self.counter_radix);
        let v = self.first_code(code.prefix) * self.label_radix * self.counter_radix
            + (code.label + 1) as u64 * self.counter_radix
            + (code.counter + 1) as u64;
        Fp::from_canonical(v).expect("encodability checked when parameters were derived")
    }

    pub fn decode(&self, point: Fp) -> Option<RootCode> {
        let v = point.value();
        let counter = (v % self.counter_radix) as i64 - 1;
        let rest = v / self.counter_radix;
        let label = (rest % self.label_radix) as i64 - 1;
        let first = rest / self.label_radix;
        let prefix = if first == 0 {
            Prefix::Dummy
        } else if first <= self.universe {
            Prefix::Keyword(first as u32)
        } else if first == self.universe + 1 {
            return None;
        } else if first - self.universe - 1 <= self.n {
            Prefix::Doc((first - self.universe - 1) as u32)
        } else {
            return None;
        };
        Some(RootCode {
            prefix,
            label,
            counter,
        })
    }

    /// Keyword root `(w ‖ l ‖ cnt)`; `w = 0` addresses the dummy keyword.
    pub fn keyword_point(&self, w: u32, label: u32, counter: u32) -> Fp {
        let prefix = if w == 0 {
            Prefix::Dummy
        } else {
            Prefix::Keyword(w)
        };
        self.encode(RootCode {
            prefix,
            label: label as i64,
            counter: counter as i64,
        })
    }

    /// Padding root `(w₋₁ ‖ 0 ‖ 0)`, shared by every padded polynomial.
    pub fn padding_root(&self) -> Fp {
        self.encode(RootCode {
            prefix: Prefix::Dummy,
            label: 0,
            counter: 0,
        })
    }

    /// Point `(w₋₁ ‖ -1 ‖ 0)`, a root of no polynomial.
    pub fn nonmatch_point(&self) -> Fp {
        self.encode(RootCode {
            prefix: Prefix::Dummy,
            label: -1,
            counter: 0,
        })
    }

    /// False-positive root `(id ‖ 0 ‖ -1)`.
    pub fn false_positive_root(&self, id: u32) -> Fp {
        self.encode(RootCode {
            prefix: Prefix::Doc(id),
            label: 0,
            counter: -1,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn reserved_constants() {
        let e = PointEncoder::new(10, 20, 4, 3);
        // counter radix 5: dummy root = 1*5 + 1
        assert_eq!(e.padding_root().value(), 6);
        assert_eq!(e.nonmatch_point().value(), 1);
        assert_ne!(e.padding_root(), e.nonmatch_point());
    }

    #[test]
    fn false_positive_offset() {
        let e = PointEncoder::new(10, 20, 4, 3);
        let x = e.false_positive_root(5).value();
        let first = x / (6 * 5);
        assert_eq!(first, 10 + 1 + 5);
        assert_eq!(
            e.decode(Fp::new(x)).unwrap(),
            RootCode {
                prefix: Prefix::Doc(5),
                label: 0,
                counter: -1
            }
        );
    }

    #[test]
    fn exhaustive_injectivity_small() {
        let (universe, n, labels, cmax) = (4u32, 5u32, 3u32, 2u32);
        let e = PointEncoder::new(universe, n, labels, cmax);
        let mut prefixes = vec![Prefix::Dummy];
        prefixes.extend((1..=universe).map(Prefix::Keyword));
        prefixes.extend((1..=n).map(Prefix::Doc));
        let mut seen = HashSet::new();
        for &prefix in &prefixes {
            for label in -1..=labels as i64 {
                for counter in -1..cmax as i64 {
                    let code = RootCode {
                        prefix,
                        label,
                        counter,
                    };
                    let x = e.encode(code);
                    assert!(seen.insert(x), "collision at {code:?}");
                    assert_eq!(e.decode(x), Some(code));
                }
            }
        }
    }
}
