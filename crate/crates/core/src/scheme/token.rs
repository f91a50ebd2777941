//! Randomized token generation for one query.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::SchemeParams;
use crate::corpus::Keyword;
use crate::field::Fp;
use crate::rng::geometric;

/// Keyword code that addresses the dummy keyword `w₋₁`; querying it yields only non-matches.
pub const DUMMY_KEYWORD: Keyword = 0;

/// An evaluation point and the label whose documents it is checked against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Token {
    pub point: Fp,
    pub label: u32,
}

/// Builds the query token multiset for keyword `w`:
///
/// 1. every `(label, counter)` keyword point with probability `p`;
/// 2. `Geometric(1-q)` copies of each document's false-positive point;
/// 3. `Geometric(1-q)` copies of the non-match point for each label;
///
/// then shuffles the result.
pub fn gen_token<R: Rng + ?Sized>(w: Keyword, params: &SchemeParams, rng: &mut R) -> Vec<Token> {
    let enc = params.encoder();
    let expected = (params.label_space as f64 * params.countermax as f64 * params.p
        + (params.n + params.label_space) as f64 * params.q / (1.0 - params.q))
        as usize;
    let mut tokens = Vec::with_capacity(expected + 16);

    for label in 1..=params.label_space {
        for counter in 0..params.countermax {
            if params.p >= 1.0 || rng.random::<f64>() < params.p {
                tokens.push(Token {
                    point: enc.keyword_point(w, label, counter),
                    label,
                });
            }
        }
    }
    if params.q > 0.0 {
        for id in 1..=params.n {
            let copies = geometric(rng, params.q);
            if copies > 0 {
                let t = Token {
                    point: enc.false_positive_root(id),
                    label: params.h1(id),
                };
                tokens.extend(std::iter::repeat_n(t, copies as usize));
            }
        }
        let nonmatch = enc.nonmatch_point();
        for label in 1..=params.label_space {
            let copies = geometric(rng, params.q);
            tokens.extend(std::iter::repeat_n(
                Token {
                    point: nonmatch,
                    label,
                },
                copies as usize,
            ));
        }
    }
    tokens.shuffle(rng);
    tokens
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::DatasetStats;
    use crate::rng::rng_from_seed;
    use crate::scheme::Hashing;

    fn params(p: f64, q: f64) -> SchemeParams {
        let s = DatasetStats {
            n: 300,
            freqmax: 20,
            sizemax: 5,
            universe_size: 50,
        };
        SchemeParams::new(&s, Hashing::Single, p, q, 4, 20, [1, 2]).unwrap()
    }

    #[test]
    fn degenerate_probabilities_give_only_keyword_tokens() {
        let p = params(1.0, 0.0);
        let t = gen_token(7, &p, &mut rng_from_seed(1));
        assert_eq!(t.len(), 20 * 4);
        let enc = p.encoder();
        let mut got: Vec<_> = t.iter().map(|t| enc.decode(t.point).unwrap()).collect();
        got.sort();
        got.dedup();
        assert_eq!(got.len(), 80);
        assert!(got
            .iter()
            .all(|c| c.prefix == crate::scheme::Prefix::Keyword(7)));
    }

    #[test]
    fn zero_probabilities_give_no_tokens() {
        assert!(gen_token(3, &params(0.0, 0.0), &mut rng_from_seed(2)).is_empty());
    }

    #[test]
    fn deterministic_under_seed() {
        let p = params(0.9, 0.1);
        assert_eq!(
            gen_token(5, &p, &mut rng_from_seed(9)),
            gen_token(5, &p, &mut rng_from_seed(9))
        );
        assert_ne!(
            gen_token(5, &p, &mut rng_from_seed(9)),
            gen_token(5, &p, &mut rng_from_seed(10))
        );
    }

    #[test]
    fn expected_token_count() {
        let p = params(0.9999, 0.01);
        let mut rng = rng_from_seed(4);
        let runs = 4000;
        let total: usize = (0..runs).map(|_| gen_token(2, &p, &mut rng).len()).sum();
        let mean = total as f64 / runs as f64;
        let expect = 20.0 * 4.0 * 0.9999 + 320.0 * 0.01 / 0.99;
        assert!((mean - expect).abs() / expect < 0.01, "{mean} vs {expect}");
    }

    #[test]
    fn false_positive_tokens_carry_primary_label() {
        let p = params(0.5, 0.3);
        let enc = p.encoder();
        for t in gen_token(1, &p, &mut rng_from_seed(3)) {
            if let Some(crate::scheme::RootCode {
                prefix: crate::scheme::Prefix::Doc(id),
                ..
            }) = enc.decode(t.point)
            {
                assert_eq!(t.label, p.h1(id));
            }
        }
    }
}
