//! Closed-form marginals of one obfuscated access pattern coordinate.
//!
//! A document coordinate is `Bernoulli(p) + Geometric(1-q)` when the document
//! holds the keyword and `Geometric(1-q)` otherwise. A label coordinate is
//! `Binomial(g, p) + Geometric(1-q)` where `g` counts the counters of that
//! label left unused by the keyword. `Geometric(1-q)` has `Pr[k] = q^k (1-q)`.

use statrs::function::factorial::ln_binomial;

/// Largest count summed explicitly in normalization checks; the remainder is
/// added through the analytic tails below.
pub const PMF_TAIL_CAP: u64 = 200;

#[inline]
fn ln_pow(x: f64, k: u64) -> f64 {
    if k == 0 {
        0.0
    } else {
        k as f64 * x.ln()
    }
}

fn log_sum_exp(terms: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = terms.collect();
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|t| (t - m).exp()).sum::<f64>().ln()
}

/// `ln Pr[Geometric(1-q) = k]`.
pub fn ln_pmf_geometric(k: u64, q: f64) -> f64 {
    ln_pow(q, k) + (1.0 - q).ln()
}

pub fn pmf_geometric(k: u64, q: f64) -> f64 {
    ln_pmf_geometric(k, q).exp()
}

/// `ln Pr[Bernoulli(p)·contains + Geometric(1-q) = k]`.
pub fn ln_pmf_match(k: u64, contains: bool, p: f64, q: f64) -> f64 {
    if !contains {
        return ln_pmf_geometric(k, q);
    }
    let miss = (1.0 - p).ln() + ln_pmf_geometric(k, q);
    if k == 0 {
        return miss;
    }
    let hit = p.ln() + ln_pmf_geometric(k - 1, q);
    log_sum_exp([miss, hit].into_iter())
}

pub fn pmf_match(k: u64, contains: bool, p: f64, q: f64) -> f64 {
    ln_pmf_match(k, contains, p, q).exp()
}

/// `ln Pr[Binomial(g, p) + Geometric(1-q) = k]`.
pub fn ln_pmf_nonmatch(k: u64, g: u64, p: f64, q: f64) -> f64 {
    log_sum_exp((0..=k.min(g)).map(|b| {
        ln_binomial(g, b) + ln_pow(p, b) + ln_pow(1.0 - p, g - b) + ln_pmf_geometric(k - b, q)
    }))
}

pub fn pmf_nonmatch(k: u64, g: u64, p: f64, q: f64) -> f64 {
    ln_pmf_nonmatch(k, g, p, q).exp()
}

/// `Pr[X > k]` for the document coordinate.
pub fn match_tail(k: u64, contains: bool, p: f64, q: f64) -> f64 {
    let geo_tail = |j: u64| q.powf(j as f64 + 1.0);
    if contains {
        (1.0 - p) * geo_tail(k) + p * if k == 0 { 1.0 } else { geo_tail(k - 1) }
    } else {
        geo_tail(k)
    }
}

/// `Pr[X > k]` for the label coordinate: `Σ_b Pr[B = b]·Pr[G > k - b]`.
pub fn nonmatch_tail(k: u64, g: u64, p: f64, q: f64) -> f64 {
    (0..=g)
        .map(|b| {
            let w = (ln_binomial(g, b) + ln_pow(p, b) + ln_pow(1.0 - p, g - b)).exp();
            if b > k {
                w
            } else {
                w * q.powf((k - b) as f64 + 1.0)
            }
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_values() {
        assert!((pmf_match(0, true, 0.5, 0.2) - 0.4).abs() < 1e-15);
        assert!((pmf_match(0, false, 0.5, 0.2) - 0.8).abs() < 1e-15);
        assert!((pmf_nonmatch(0, 1, 0.5, 0.2) - 0.5 * 0.8).abs() < 1e-15);
        for k in 0..10 {
            assert!((pmf_nonmatch(k, 0, 0.3, 0.2) - pmf_geometric(k, 0.2)).abs() < 1e-15);
        }
    }

    #[test]
    fn direct_convolution_oracle() {
        // Enumerate Binomial and Geometric masses separately and convolve.
        let (p, q, g) = (0.35f64, 0.4f64, 6u64);
        let binom: Vec<f64> = (0..=g)
            .map(|b| {
                let c = (1..=b).fold(1.0, |acc, i| acc * (g - b + i) as f64 / i as f64);
                c * p.powi(b as i32) * (1.0 - p).powi((g - b) as i32)
            })
            .collect();
        for k in 0..25u64 {
            let want: f64 = (0..=k.min(g))
                .map(|b| binom[b as usize] * q.powi((k - b) as i32) * (1.0 - q))
                .sum();
            assert!((pmf_nonmatch(k, g, p, q) - want).abs() < 1e-14, "k = {k}");
        }
        for k in 0..25u64 {
            let want = (1.0 - p) * q.powi(k as i32) * (1.0 - q)
                + if k > 0 {
                    p * q.powi(k as i32 - 1) * (1.0 - q)
                } else {
                    0.0
                };
            assert!((pmf_match(k, true, p, q) - want).abs() < 1e-15);
        }
    }

    #[test]
    fn normalized_with_tails() {
        for &(p, q) in &[(0.5, 0.2), (0.9999, 0.01), (0.1, 0.5), (0.7, 0.9)] {
            for contains in [false, true] {
                let s: f64 = (0..=PMF_TAIL_CAP)
                    .map(|k| pmf_match(k, contains, p, q))
                    .sum();
                assert!((s + match_tail(PMF_TAIL_CAP, contains, p, q) - 1.0).abs() < 1e-12);
            }
            for g in [0u64, 1, 5, 16] {
                let s: f64 = (0..=PMF_TAIL_CAP).map(|k| pmf_nonmatch(k, g, p, q)).sum();
                assert!(
                    (s + nonmatch_tail(PMF_TAIL_CAP, g, p, q) - 1.0).abs() < 1e-12,
                    "p={p} q={q} g={g}"
                );
            }
        }
    }

    #[test]
    fn degenerate_rates() {
        assert_eq!(pmf_match(0, false, 0.5, 0.0), 1.0);
        assert_eq!(pmf_match(1, false, 0.5, 0.0), 0.0);
        assert_eq!(pmf_match(1, true, 1.0, 0.0), 1.0);
        assert_eq!(pmf_nonmatch(3, 3, 1.0, 0.0), 1.0);
        assert_eq!(pmf_nonmatch(2, 3, 1.0, 0.0), 0.0);
    }

    #[test]
    fn memoryless_ratio_constant() {
        let (p, q) = (0.6, 0.15);
        let want = (p + q * (1.0 - p)) / q;
        for k in 1..60 {
            let r = pmf_match(k, true, p, q) / pmf_match(k, false, p, q);
            assert!((r - want).abs() / want < 1e-12);
        }
    }
}
