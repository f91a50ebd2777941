//! Graph-matching attack: quadratic assignment between observed and auxiliary
//! co-occurrence matrices, relaxed over row-stochastic matrices whose column
//! sums are at most one and solved with Frank-Wolfe.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::cooc::CoOccurrenceMatrix;
use super::ikk::{frobenius_objective, reassign_delta, swap_delta};
use super::lap::solve_lap;
use super::{Assignment, AttackError};
use crate::corpus::Keyword;
use crate::rng::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GraphMatchConfig {
    /// Frank-Wolfe iterations per restart.
    pub iterations: usize,
    pub restarts: usize,
    /// Local swap/reassign search after projection.
    pub polish: bool,
}

impl Default for GraphMatchConfig {
    fn default() -> Self {
        GraphMatchConfig {
            iterations: 60,
            restarts: 4,
            polish: true,
        }
    }
}

/// Dense row-major `rows × cols`.
#[derive(Clone)]
struct Mat {
    rows: usize,
    cols: usize,
    v: Vec<f64>,
}

impl Mat {
    fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            v: vec![0.0; rows * cols],
        }
    }

    fn from_cooc(c: &CoOccurrenceMatrix) -> Self {
        let n = c.size();
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m.v[i * n..(i + 1) * n].copy_from_slice(c.row(i));
        }
        m
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.v[i * self.cols + j]
    }

    fn mul(&self, o: &Mat) -> Mat {
        let mut out = Mat::zeros(self.rows, o.cols);
        for i in 0..self.rows {
            let row = &mut out.v[i * o.cols..(i + 1) * o.cols];
            for k in 0..self.cols {
                let a = self.v[i * self.cols + k];
                if a != 0.0 {
                    let orow = &o.v[k * o.cols..(k + 1) * o.cols];
                    for (r, &b) in row.iter_mut().zip(orow) {
                        *r += a * b;
                    }
                }
            }
        }
        out
    }

    /// `self · oᵀ`.
    fn mul_t(&self, o: &Mat) -> Mat {
        let mut out = Mat::zeros(self.rows, o.rows);
        for i in 0..self.rows {
            let a = &self.v[i * self.cols..(i + 1) * self.cols];
            for j in 0..o.rows {
                let b = &o.v[j * o.cols..(j + 1) * o.cols];
                out.v[i * o.rows + j] = a.iter().zip(b).map(|(x, y)| x * y).sum();
            }
        }
        out
    }

    fn dot(&self, o: &Mat) -> f64 {
        self.v.iter().zip(&o.v).map(|(a, b)| a * b).sum()
    }

    fn add(&self, o: &Mat, s: f64) -> Mat {
        Mat {
            rows: self.rows,
            cols: self.cols,
            v: self.v.iter().zip(&o.v).map(|(a, b)| a + s * b).collect(),
        }
    }

    fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.v[j * self.rows + i] = self.at(i, j);
            }
        }
        t
    }
}

/// Minimizer over `[0,1]` of the quartic `c0 + c1 t + c2 t² + c3 t³ + c4 t⁴`.
fn minimize_quartic(c: [f64; 5]) -> f64 {
    let f = |t: f64| c[0] + t * (c[1] + t * (c[2] + t * (c[3] + t * c[4])));
    let grid = 64;
    let mut best = (f(0.0), 0.0);
    for s in 1..=grid {
        let t = s as f64 / grid as f64;
        let v = f(t);
        if v < best.0 {
            best = (v, t);
        }
    }
    // Golden-section refinement around the best grid point.
    let h = 1.0 / grid as f64;
    let (mut lo, mut hi) = ((best.1 - h).max(0.0), (best.1 + h).min(1.0));
    let g = 0.618_033_988_749_895;
    for _ in 0..40 {
        let a = hi - g * (hi - lo);
        let b = lo + g * (hi - lo);
        if f(a) < f(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    let t = 0.5 * (lo + hi);
    if f(t) < best.0 {
        t
    } else {
        best.1
    }
}

fn frank_wolfe(m: &Mat, a: &Mat, start: Mat, iterations: usize) -> Mat {
    let mut p = start;
    let (rows, cols) = (p.rows, p.cols);
    for _ in 0..iterations {
        let pa = p.mul(a);
        let r = m.add(&pa.mul_t(&p), -1.0);
        // ∇ = −4 R P A
        let grad = r.mul(&pa);
        let cost: Vec<Vec<f64>> = (0..rows)
            .map(|i| (0..cols).map(|j| -grad.at(i, j)).collect())
            .collect();
        let s_cols = solve_lap(&cost);
        let mut d = Mat {
            rows,
            cols,
            v: p.v.iter().map(|x| -x).collect(),
        };
        for (i, &j) in s_cols.iter().enumerate() {
            d.v[i * cols + j] += 1.0;
        }
        // Q(t) = PAPᵀ + t·B + t²·C with B = DAPᵀ + PADᵀ, C = DADᵀ.
        let da = d.mul(a);
        let dap = da.mul_t(&p);
        let b = dap.add(&dap.transpose(), 1.0);
        let c = da.mul_t(&d);
        let coeffs = [
            r.dot(&r),
            -2.0 * r.dot(&b),
            b.dot(&b) - 2.0 * r.dot(&c),
            2.0 * b.dot(&c),
            c.dot(&c),
        ];
        let t = minimize_quartic(coeffs);
        if t <= 0.0 {
            break;
        }
        p = p.add(&d, t);
    }
    p
}

/// Greedy improvement by single reassignments to free keywords and pair swaps.
fn polish(m: &CoOccurrenceMatrix, aux: &CoOccurrenceMatrix, sigma: &mut [usize]) {
    let (size, kw) = (sigma.len(), aux.size());
    let mut used = vec![false; kw];
    for &s in sigma.iter() {
        used[s] = true;
    }
    for _ in 0..100 {
        let mut improved = false;
        for i in 0..size {
            let mut best = (-1e-15, None);
            for b in (0..kw).filter(|&b| !used[b]) {
                let d = reassign_delta(m, aux, sigma, i, b);
                if d < best.0 {
                    best = (d, Some(b));
                }
            }
            if let Some(b) = best.1 {
                used[sigma[i]] = false;
                used[b] = true;
                sigma[i] = b;
                improved = true;
            }
            for k in i + 1..size {
                if swap_delta(m, aux, sigma, i, k) < -1e-15 {
                    sigma.swap(i, k);
                    improved = true;
                }
            }
        }
        if !improved {
            break;
        }
    }
}

/// Injective map (0-based) minimizing the projection distance to `p`.
fn project(p: &Mat) -> Vec<usize> {
    let cost: Vec<Vec<f64>> = (0..p.rows)
        .map(|i| (0..p.cols).map(|j| -p.at(i, j)).collect())
        .collect();
    solve_lap(&cost)
}

pub fn graph_matching_attack(
    m: &CoOccurrenceMatrix,
    aux: &CoOccurrenceMatrix,
    cfg: &GraphMatchConfig,
    seed: u64,
) -> Result<Assignment, AttackError> {
    let (size, kw) = (m.size(), aux.size());
    if size > kw {
        return Err(AttackError::Invalid(format!(
            "{size} patterns cannot map injectively to {kw} keywords"
        )));
    }
    if size == 0 {
        return Ok(Assignment {
            mapping: Vec::new(),
            failed: false,
        });
    }
    let (mm, am) = (Mat::from_cooc(m), Mat::from_cooc(aux));
    let mut rng = rng_from_seed(seed);
    let mut best: Option<(f64, Vec<usize>)> = None;
    for restart in 0..cfg.restarts.max(1) {
        // Barycenter first, then halfway to the volume matching, then halfway to random partial permutations.
        let mut start = Mat {
            rows: size,
            cols: kw,
            v: vec![1.0 / kw as f64; size * kw],
        };
        if restart == 1 {
            // Halfway to the best volume (diagonal) matching.
            let cost: Vec<Vec<f64>> = (0..size)
                .map(|i| {
                    (0..kw)
                        .map(|k| (m.get(i, i) - aux.get(k, k)).abs())
                        .collect()
                })
                .collect();
            for (i, j) in solve_lap(&cost).into_iter().enumerate() {
                for x in &mut start.v[i * kw..(i + 1) * kw] {
                    *x *= 0.5;
                }
                start.v[i * kw + j] += 0.5;
            }
        } else if restart > 1 {
            let mut cols: Vec<usize> = (0..kw).collect();
            for i in 0..size {
                let j = rng.random_range(i..kw);
                cols.swap(i, j);
                for x in &mut start.v[i * kw..(i + 1) * kw] {
                    *x *= 0.5;
                }
                start.v[i * kw + cols[i]] += 0.5;
            }
        }
        let p = frank_wolfe(&mm, &am, start, cfg.iterations);
        let mut sigma = project(&p);
        if cfg.polish {
            polish(m, aux, &mut sigma);
        }
        let obj = frobenius_objective(m, aux, &sigma);
        if best.as_ref().is_none_or(|b| obj < b.0) {
            best = Some((obj, sigma));
        }
    }
    let sigma = best.expect("one restart").1;
    Ok(Assignment {
        mapping: sigma.iter().map(|&k| k as Keyword + 1).collect(),
        failed: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quartic_minimizer() {
        // (t - 0.3)² expanded.
        let t = minimize_quartic([0.09, -0.6, 1.0, 0.0, 0.0]);
        assert!((t - 0.3).abs() < 1e-6);
        assert_eq!(minimize_quartic([0.0, 1.0, 0.0, 0.0, 0.0]), 0.0);
        assert!((minimize_quartic([0.0, -1.0, 0.0, 0.0, 0.0]) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn single_pattern_trivial() {
        let aux =
            CoOccurrenceMatrix::from_fn(3, |i, j| if i == j { [0.5, 0.2, 0.1][i] } else { 0.05 });
        let m = aux.induced(&[1]);
        let a = graph_matching_attack(&m, &aux, &GraphMatchConfig::default(), 0).unwrap();
        assert_eq!(a.mapping, vec![2]);
    }

    #[test]
    fn planted_permutation_and_injective() {
        let mut rng = rng_from_seed(11);
        let aux = CoOccurrenceMatrix::from_fn(30, |i, j| {
            if i == j {
                rng.random_range(0.2..0.6)
            } else {
                rng.random_range(0.0..0.2)
            }
        });
        let perm: Vec<usize> = vec![17, 3, 25, 8, 0, 29, 12, 6, 21, 14];
        let m = aux.induced(&perm);
        let a = graph_matching_attack(&m, &aux, &GraphMatchConfig::default(), 5).unwrap();
        let want: Vec<Keyword> = perm.iter().map(|&k| k as Keyword + 1).collect();
        assert_eq!(a.mapping, want);
        let mut s = a.mapping.clone();
        s.sort();
        s.dedup();
        assert_eq!(s.len(), perm.len());
    }
}
