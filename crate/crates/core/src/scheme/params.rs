use log::warn;
use serde::{Deserialize, Serialize};

use super::encode::PointEncoder;
use super::SchemeError;
use crate::corpus::DatasetStats;
use crate::field::MODULUS;
use crate::rng::mix64;

/// How document labels are chosen for keyword roots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Hashing {
    /// Every keyword of a document uses `h1(id)`.
    Single,
    /// Each (document, keyword) root picks the less loaded of `h1(id)` and `h2(id)`.
    Dual,
}

impl std::str::FromStr for Hashing {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "single" => Ok(Hashing::Single),
            "dual" => Ok(Hashing::Dual),
            other => Err(format!("unknown hashing mode {other:?}")),
        }
    }
}

/// Knobs for [`derive_params`] beyond the dataset statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamOptions {
    /// Constant `c` in the dual-hashing bound `⌈c · ln ln freqmax⌉`.
    pub dual_constant: f64,
    /// Keys of the two label hash functions.
    pub hash_keys: [u64; 2],
}

impl Default for ParamOptions {
    fn default() -> Self {
        ParamOptions {
            dual_constant: 3.0,
            hash_keys: [0x6f73_7365_5f68_3131, 0x6f73_7365_5f68_3232],
        }
    }
}

/// Everything client and server need to agree on to build and query an index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchemeParams {
    /// Probability of emitting each (label, counter) keyword token.
    pub p: f64,
    /// Geometric parameter: false positives per document follow `Pr[k] = q^k (1-q)`.
    pub q: f64,
    pub countermax: u32,
    /// `|h|`, size of the label space; labels are `1..=label_space`.
    pub label_space: u32,
    pub hashing: Hashing,
    pub modulus: u64,
    pub n: u32,
    pub universe: u32,
    pub sizemax: u32,
    pub freqmax: u32,
    pub hash_keys: [u64; 2],
}

impl SchemeParams {
    /// Assembles parameters directly, validating probabilities and encodability.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        stats: &DatasetStats,
        hashing: Hashing,
        p: f64,
        q: f64,
        countermax: u32,
        label_space: u32,
        hash_keys: [u64; 2],
    ) -> Result<Self, SchemeError> {
        if !(0.0..=1.0).contains(&p) {
            return Err(SchemeError::InvalidParams(format!(
                "p = {p} outside [0, 1]"
            )));
        }
        if !(0.0..1.0).contains(&q) {
            return Err(SchemeError::InvalidParams(format!(
                "q = {q} outside [0, 1)"
            )));
        }
        if countermax == 0 || label_space == 0 {
            return Err(SchemeError::InvalidParams(
                "countermax and label space must be at least 1".into(),
            ));
        }
        let p = SchemeParams {
            p,
            q,
            countermax,
            label_space,
            hashing,
            modulus: MODULUS,
            n: stats.n as u32,
            universe: stats.universe_size as u32,
            sizemax: stats.sizemax as u32,
            freqmax: stats.freqmax as u32,
            hash_keys,
        };
        p.check_encodable()?;
        Ok(p)
    }

    /// Same parameters with a different counter budget.
    pub fn with_countermax(mut self, countermax: u32) -> Result<Self, SchemeError> {
        if countermax == 0 {
            return Err(SchemeError::InvalidParams(
                "countermax must be at least 1".into(),
            ));
        }
        self.countermax = countermax;
        self.check_encodable()?;
        Ok(self)
    }

    pub fn with_probabilities(mut self, p: f64, q: f64) -> Result<Self, SchemeError> {
        if !(0.0..=1.0).contains(&p) || !(0.0..1.0).contains(&q) {
            return Err(SchemeError::InvalidParams(format!(
                "invalid probabilities p = {p}, q = {q}"
            )));
        }
        self.p = p;
        self.q = q;
        Ok(self)
    }

    /// `(|Δ| + n + 2) · (|h| + 2) · (countermax + 2) < modulus`.
    pub fn check_encodable(&self) -> Result<(), SchemeError> {
        let span = (self.universe as u128 + self.n as u128 + 2)
            * (self.label_space as u128 + 2)
            * (self.countermax as u128 + 2);
        if span >= self.modulus as u128 {
            return Err(SchemeError::EncodingOverflow {
                span,
                modulus: self.modulus,
            });
        }
        Ok(())
    }

    pub fn encoder(&self) -> PointEncoder {
        PointEncoder::new(self.universe, self.n, self.label_space, self.countermax)
    }

    /// Primary label `h1(id)` in `1..=|h|`.
    #[inline]
    pub fn h1(&self, id: u32) -> u32 {
        label_hash(self.hash_keys[0], id, self.label_space)
    }

    /// Secondary label `h2(id)`, used only in dual mode.
    #[inline]
    pub fn h2(&self, id: u32) -> u32 {
        label_hash(self.hash_keys[1], id, self.label_space)
    }

    /// Labels under which the server evaluates document `id`.
    pub fn doc_labels(&self, id: u32) -> Vec<u32> {
        match self.hashing {
            Hashing::Single => vec![self.h1(id)],
            Hashing::Dual => {
                let (a, b) = (self.h1(id), self.h2(id));
                if a == b {
                    vec![a]
                } else {
                    vec![a, b]
                }
            }
        }
    }

    /// True/false positive rates implied by `(p, q)`.
    pub fn rates(&self) -> (f64, f64) {
        (self.p + (1.0 - self.p) * self.q, self.q)
    }
}

#[inline]
fn label_hash(key: u64, id: u32, label_space: u32) -> u32 {
    (mix64(key ^ mix64(id as u64)) % label_space as u64) as u32 + 1
}

/// `⌈3 ln n / ln ln freqmax⌉`, or `None` when `ln ln freqmax ≤ 0`.
pub fn single_hash_countermax(n: usize, freqmax: usize) -> Option<u32> {
    let lnln = (freqmax as f64).ln().ln();
    (lnln > 0.0 && n >= 1).then(|| ((3.0 * (n as f64).ln() / lnln).ceil() as u32).max(1))
}

/// `⌈c · ln ln freqmax⌉`, or `None` when `ln ln freqmax ≤ 0`.
pub fn dual_hash_countermax(freqmax: usize, c: f64) -> Option<u32> {
    let lnln = (freqmax as f64).ln().ln();
    (lnln > 0.0).then(|| ((c * lnln).ceil() as u32).max(1))
}

/// Derives `|h| = freqmax` and the counter budget from the dataset statistics.
///
/// When `freqmax ≤ e` the bounds are undefined and `countermax = n` is used.
/// The bound is also clamped at `n`, which always suffices.
pub fn derive_params(
    stats: &DatasetStats,
    hashing: Hashing,
    p: f64,
    q: f64,
    options: &ParamOptions,
) -> Result<SchemeParams, SchemeError> {
    if stats.n == 0 {
        return Err(SchemeError::InvalidParams(
            "dataset has no documents".into(),
        ));
    }
    let label_space = stats.freqmax.max(1) as u32;
    let bound = match hashing {
        Hashing::Single => single_hash_countermax(stats.n, stats.freqmax),
        Hashing::Dual => dual_hash_countermax(stats.freqmax, options.dual_constant),
    };
    let countermax = match bound {
        Some(c) => c.min(stats.n as u32),
        None => {
            warn!(
                "freqmax = {} too small for the counter bound; using countermax = n = {}",
                stats.freqmax, stats.n
            );
            stats.n as u32
        }
    };
    SchemeParams::new(
        stats,
        hashing,
        p,
        q,
        countermax,
        label_space,
        options.hash_keys,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stats(n: usize, freqmax: usize) -> DatasetStats {
        DatasetStats {
            n,
            freqmax,
            sizemax: 300,
            universe_size: 500,
        }
    }

    #[test]
    fn enron_scale_bounds() {
        // 3 ln 30562 / ln ln 2000 = 15.26...
        assert_eq!(single_hash_countermax(30_562, 2000), Some(16));
        let p = derive_params(
            &stats(30_562, 2000),
            Hashing::Single,
            0.9999,
            0.01,
            &ParamOptions::default(),
        )
        .unwrap();
        assert_eq!((p.label_space, p.countermax), (2000, 16));
        let d = derive_params(
            &stats(30_562, 2000),
            Hashing::Dual,
            0.9999,
            0.01,
            &ParamOptions::default(),
        )
        .unwrap();
        assert!(d.countermax < p.countermax);
    }

    #[test]
    fn tiny_freqmax_falls_back_to_n() {
        let p = derive_params(
            &stats(40, 1),
            Hashing::Single,
            0.9,
            0.1,
            &ParamOptions::default(),
        )
        .unwrap();
        assert_eq!(p.countermax, 40);
        let p = derive_params(
            &stats(40, 2),
            Hashing::Dual,
            0.9,
            0.1,
            &ParamOptions::default(),
        )
        .unwrap();
        assert_eq!(p.countermax, 40);
    }

    #[test]
    fn encodability_checked() {
        let s = DatasetStats {
            n: 1 << 20,
            freqmax: 1 << 20,
            sizemax: 1,
            universe_size: 1 << 20,
        };
        let err =
            SchemeParams::new(&s, Hashing::Single, 0.5, 0.1, 1 << 20, 1 << 20, [1, 2]).unwrap_err();
        assert!(matches!(err, SchemeError::EncodingOverflow { .. }));
    }

    #[test]
    fn labels_in_range_and_spread() {
        let p = derive_params(
            &stats(5000, 50),
            Hashing::Dual,
            0.9,
            0.1,
            &ParamOptions::default(),
        )
        .unwrap();
        let mut hist = vec![0usize; 51];
        for id in 1..=5000 {
            let l = p.h1(id);
            assert!((1..=50).contains(&l));
            assert!((1..=50).contains(&p.h2(id)));
            hist[l as usize] += 1;
        }
        // 100 expected per label
        assert!(
            hist[1..].iter().all(|&c| (50..=160).contains(&c)),
            "{hist:?}"
        );
    }

    #[test]
    fn probability_ranges_enforced() {
        let s = stats(100, 10);
        assert!(SchemeParams::new(&s, Hashing::Single, 1.5, 0.1, 3, 10, [1, 2]).is_err());
        assert!(SchemeParams::new(&s, Hashing::Single, 0.5, 1.0, 3, 10, [1, 2]).is_err());
        assert!(SchemeParams::new(&s, Hashing::Single, 1.0, 0.0, 3, 10, [1, 2]).is_ok());
    }
}
