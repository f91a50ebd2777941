//! k-means with k-means++ seeding on sparse non-negative vectors.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::AttackError;
use crate::rng::rng_from_seed;

/// Hard cap on restarts.
pub const MAX_RESTARTS: usize = 50;

/// Sparse vector: `(coordinate, value)` pairs with distinct coordinates.
pub type SparseVec = Vec<(u32, f64)>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KMeansConfig {
    pub restarts: usize,
    pub max_iter: usize,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        KMeansConfig {
            restarts: 10,
            max_iter: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clustering {
    /// Cluster of every input point.
    pub labels: Vec<usize>,
    /// Dense centers of dimension `dim`.
    pub centers: Vec<Vec<f64>>,
    pub inertia: f64,
}

/// Binary vector from sorted 1-based ids.
pub fn binary_vector(ids: &[u32]) -> SparseVec {
    ids.iter().map(|&id| (id - 1, 1.0)).collect()
}

struct Points {
    /// Distinct vectors, their multiplicities and squared norms.
    vecs: Vec<SparseVec>,
    weight: Vec<f64>,
    norm2: Vec<f64>,
    /// Distinct index of every input point.
    of_input: Vec<usize>,
}

fn dedup(points: &[SparseVec]) -> Points {
    let mut index = std::collections::HashMap::new();
    let mut p = Points {
        vecs: Vec::new(),
        weight: Vec::new(),
        norm2: Vec::new(),
        of_input: Vec::with_capacity(points.len()),
    };
    for v in points {
        let key: Vec<(u32, u64)> = v.iter().map(|&(i, x)| (i, x.to_bits())).collect();
        let id = *index.entry(key).or_insert_with(|| {
            p.vecs.push(v.clone());
            p.weight.push(0.0);
            p.norm2.push(v.iter().map(|&(_, x)| x * x).sum());
            p.vecs.len() - 1
        });
        p.weight[id] += 1.0;
        p.of_input.push(id);
    }
    p
}

#[inline]
fn dist2(v: &SparseVec, norm2: f64, center: &[f64], center_norm2: f64) -> f64 {
    let dot: f64 = v.iter().map(|&(i, x)| x * center[i as usize]).sum();
    (norm2 - 2.0 * dot + center_norm2).max(0.0)
}

fn densify(v: &SparseVec, dim: usize) -> Vec<f64> {
    let mut c = vec![0.0; dim];
    for &(i, x) in v {
        c[i as usize] = x;
    }
    c
}

fn weighted_pick<R: Rng>(rng: &mut R, weights: &[f64]) -> Option<usize> {
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return None;
    }
    let mut r = rng.random::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        if r < w {
            return Some(i);
        }
        r -= w;
    }
    weights.iter().rposition(|&w| w > 0.0)
}

fn one_run<R: Rng>(
    p: &Points,
    dim: usize,
    k: usize,
    max_iter: usize,
    rng: &mut R,
) -> (Vec<usize>, Vec<Vec<f64>>, f64) {
    let m = p.vecs.len();
    // k-means++ seeding over distinct points, weighted by multiplicity.
    let mut centers: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut chosen = vec![false; m];
    let first = weighted_pick(rng, &p.weight).unwrap_or(0);
    chosen[first] = true;
    centers.push(densify(&p.vecs[first], dim));
    let mut best_d = vec![f64::INFINITY; m];
    while centers.len() < k {
        let c = centers.last().expect("non-empty");
        let cn: f64 = c.iter().map(|x| x * x).sum();
        for i in 0..m {
            best_d[i] = best_d[i].min(dist2(&p.vecs[i], p.norm2[i], c, cn));
        }
        let w: Vec<f64> = (0..m)
            .map(|i| {
                if chosen[i] {
                    0.0
                } else {
                    p.weight[i] * best_d[i]
                }
            })
            .collect();
        let next = weighted_pick(rng, &w).or_else(|| {
            // All remaining points coincide with a center; take any unused one.
            let free: Vec<usize> = (0..m).filter(|&i| !chosen[i]).collect();
            (!free.is_empty()).then(|| free[rng.random_range(0..free.len())])
        });
        match next {
            Some(i) => {
                chosen[i] = true;
                centers.push(densify(&p.vecs[i], dim));
            }
            None => centers.push(centers[rng.random_range(0..centers.len())].clone()),
        }
    }

    let mut labels = vec![usize::MAX; m];
    let mut inertia = f64::INFINITY;
    for _ in 0..max_iter {
        let norms: Vec<f64> = centers
            .iter()
            .map(|c| c.iter().map(|x| x * x).sum())
            .collect();
        let mut changed = false;
        let mut d_own = vec![0.0; m];
        for i in 0..m {
            let (mut bl, mut bd) = (0, f64::INFINITY);
            for (c, center) in centers.iter().enumerate() {
                let d = dist2(&p.vecs[i], p.norm2[i], center, norms[c]);
                if d < bd {
                    bd = d;
                    bl = c;
                }
            }
            if labels[i] != bl {
                labels[i] = bl;
                changed = true;
            }
            d_own[i] = bd;
        }
        inertia = (0..m).map(|i| p.weight[i] * d_own[i]).sum();
        if !changed {
            break;
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut mass = vec![0.0; k];
        for i in 0..m {
            let l = labels[i];
            mass[l] += p.weight[i];
            for &(j, x) in &p.vecs[i] {
                sums[l][j as usize] += p.weight[i] * x;
            }
        }
        for c in 0..k {
            if mass[c] > 0.0 {
                centers[c] = sums[c].iter().map(|s| s / mass[c]).collect();
            } else {
                // Re-seed an empty cluster at the point worst served by its center.
                let far = (0..m)
                    .max_by(|&a, &b| d_own[a].total_cmp(&d_own[b]))
                    .expect("points");
                centers[c] = densify(&p.vecs[far], dim);
                d_own[far] = 0.0;
            }
        }
    }
    (labels, centers, inertia)
}

/// Clusters `points` (dimension `dim`) into `k` groups, keeping the restart
/// with the lowest inertia. Identical points are merged before clustering.
pub fn cluster_patterns(
    points: &[SparseVec],
    dim: usize,
    k: usize,
    cfg: &KMeansConfig,
    seed: u64,
) -> Result<Clustering, AttackError> {
    if k == 0 {
        return Err(AttackError::Invalid(
            "number of clusters must be positive".into(),
        ));
    }
    if k > points.len() {
        return Err(AttackError::Invalid(format!(
            "{k} clusters for {} patterns",
            points.len()
        )));
    }
    let p = dedup(points);
    let mut rng = rng_from_seed(seed);
    let mut best: Option<(Vec<usize>, Vec<Vec<f64>>, f64)> = None;
    for _ in 0..cfg.restarts.clamp(1, MAX_RESTARTS) {
        let run = one_run(&p, dim, k, cfg.max_iter.max(1), &mut rng);
        if best.as_ref().is_none_or(|b| run.2 < b.2) {
            best = Some(run);
        }
    }
    let (labels, centers, inertia) = best.expect("at least one restart");
    Ok(Clustering {
        labels: p.of_input.iter().map(|&d| labels[d]).collect(),
        centers,
        inertia,
    })
}
