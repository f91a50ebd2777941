use rand::seq::SliceRandom;
use rand::Rng;

use super::{LeakageError, ObfAccessPattern};
use crate::scheme::{SchemeParams, Token};

/// Rebuilds a token multiset from an obfuscated access pattern alone: each
/// document count becomes copies of that document's false-positive point, each
/// label count copies of the non-match point, then the multiset is shuffled.
pub fn simulate_query_tokens<R: Rng + ?Sized>(
    row: &ObfAccessPattern,
    params: &SchemeParams,
    rng: &mut R,
) -> Result<Vec<Token>, LeakageError> {
    if row.n() != params.n as usize || row.label_space() != params.label_space as usize {
        return Err(LeakageError::Dimension(format!(
            "row is {}+{}, parameters are {}+{}",
            row.n(),
            row.label_space(),
            params.n,
            params.label_space
        )));
    }
    let enc = params.encoder();
    let mut tokens = Vec::with_capacity(row.total() as usize);
    for (i, &c) in row.doc_counts().iter().enumerate() {
        let id = i as u32 + 1;
        let t = Token {
            point: enc.false_positive_root(id),
            label: params.h1(id),
        };
        tokens.extend(std::iter::repeat_n(t, c as usize));
    }
    let nonmatch = enc.nonmatch_point();
    for (l, &c) in row.label_counts().iter().enumerate() {
        tokens.extend(std::iter::repeat_n(
            Token {
                point: nonmatch,
                label: l as u32 + 1,
            },
            c as usize,
        ));
    }
    tokens.shuffle(rng);
    Ok(tokens)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{compute_stats, gen_synthetic_corpus, FrequencyLaw, SyntheticSpec};
    use crate::leakage::observe;
    use crate::rng::rng_from_seed;
    use crate::scheme::{build_index, derive_params, gen_token, search, Hashing, ParamOptions};

    #[test]
    fn reproduces_observed_row() {
        for hashing in [Hashing::Single, Hashing::Dual] {
            let ds = gen_synthetic_corpus(&SyntheticSpec {
                n: 100,
                universe: 10,
                law: FrequencyLaw::Zipf,
                freqmax: 30,
                sizemax: None,
                seed: 3,
            })
            .unwrap();
            let params = derive_params(
                &compute_stats(&ds).unwrap(),
                hashing,
                0.8,
                0.3,
                &ParamOptions::default(),
            )
            .unwrap();
            let idx = build_index(&ds, &params).unwrap();
            let mut rng = rng_from_seed(5);
            for w in 1..=10 {
                let out = search(&idx, &gen_token(w, &params, &mut rng)).unwrap();
                let row = observe(&out, 100, params.label_space as usize).unwrap();
                let sim = simulate_query_tokens(&row, &params, &mut rng).unwrap();
                assert_eq!(sim.len() as u64, row.total());
                let again = observe(
                    &search(&idx, &sim).unwrap(),
                    100,
                    params.label_space as usize,
                )
                .unwrap();
                assert_eq!(again, row);
            }
        }
    }

    #[test]
    fn zero_row_gives_no_tokens() {
        let ds = gen_synthetic_corpus(&SyntheticSpec {
            n: 20,
            universe: 4,
            law: FrequencyLaw::Uniform,
            freqmax: 5,
            sizemax: None,
            seed: 1,
        })
        .unwrap();
        let params = derive_params(
            &compute_stats(&ds).unwrap(),
            Hashing::Single,
            0.5,
            0.5,
            &ParamOptions::default(),
        )
        .unwrap();
        let row = ObfAccessPattern::zeros(20, params.label_space as usize);
        assert!(simulate_query_tokens(&row, &params, &mut rng_from_seed(1))
            .unwrap()
            .is_empty());
        assert!(simulate_query_tokens(
            &ObfAccessPattern::zeros(3, 1),
            &params,
            &mut rng_from_seed(1)
        )
        .is_err());
    }
}
