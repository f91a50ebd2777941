//! Seeded random streams and the samplers shared across modules.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// The deterministic generator used everywhere in the lab.
pub type LabRng = ChaCha8Rng;

/// Largest geometric draw ever returned; bounds memory of a single token loop.
pub const GEOMETRIC_CAP: u64 = 1 << 30;

pub fn rng_from_seed(seed: u64) -> LabRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent child seed for a named sub-stream.
pub fn derive_seed(seed: u64, stream: &str) -> u64 {
    let mut h = mix64(seed);
    for b in stream.bytes() {
        h = mix64(h ^ b as u64);
    }
    h
}

/// Uniform draw in (0, 1] built from the top 53 bits of a 64-bit word.
#[inline]
pub fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Number of failures before the first success of a Bernoulli(1 - q) trial,
/// i.e. `Pr[k] = q^k (1 - q)`, sampled by inverse CDF.
#[inline]
pub fn geometric<R: Rng + ?Sized>(rng: &mut R, q: f64) -> u64 {
    if q <= 0.0 {
        return 0;
    }
    let u = open_unit(rng);
    let k = (u.ln() / q.ln()).floor();
    if k >= GEOMETRIC_CAP as f64 {
        GEOMETRIC_CAP
    } else {
        k as u64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_zero_q_is_zero() {
        let mut rng = rng_from_seed(1);
        assert!((0..1000).all(|_| geometric(&mut rng, 0.0) == 0));
    }

    #[test]
    fn geometric_mean_matches() {
        let mut rng = rng_from_seed(7);
        let q = 0.3;
        let trials = 200_000;
        let sum: u64 = (0..trials).map(|_| geometric(&mut rng, q)).sum();
        let mean = sum as f64 / trials as f64;
        let expect = q / (1.0 - q);
        assert!((mean - expect).abs() < 0.01, "mean {mean} vs {expect}");
    }

    #[test]
    fn derived_seeds_differ_by_stream() {
        assert_ne!(derive_seed(5, "corpus"), derive_seed(5, "queries"));
        assert_eq!(derive_seed(5, "corpus"), derive_seed(5, "corpus"));
    }
}
