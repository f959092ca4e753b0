//! Seed-frozen instance generators shared by tests, the acceptance suite, and
//! the benchmark harness. Everything here is deterministic given the RNG.

use crate::measures::{CostMatrix, DiscreteMeasure, IsometryMap};
use crate::rng::SplitMix64;

/// Weights proportional to the `N(mean, std^2)` density on an even grid of
/// `n` points over `[lo, hi]`; the standard discretization of a 1-D Gaussian.
pub fn gaussian_grid(mean: f64, std: f64, n: usize, lo: f64, hi: f64) -> DiscreteMeasure {
    assert!(n >= 2 && hi > lo && std > 0.0);
    let mut points = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for k in 0..n {
        let x = lo + (hi - lo) * k as f64 / (n - 1) as f64;
        let z = (x - mean) / std;
        points.push(vec![x]);
        weights.push((-0.5 * z * z).exp());
    }
    let total: f64 = weights.iter().sum();
    for w in weights.iter_mut() {
        *w /= total;
    }
    DiscreteMeasure::new(points, weights).expect("gaussian grid weights are valid")
}

/// `n` i.i.d. draws from `N(mean, std^2)` as a uniform empirical measure.
pub fn gaussian_samples(rng: &mut SplitMix64, mean: f64, std: f64, n: usize) -> DiscreteMeasure {
    let points = (0..n).map(|_| vec![mean + std * rng.normal()]).collect();
    DiscreteMeasure::uniform(points).expect("samples form a valid measure")
}

/// Random point on the probability simplex (all entries strictly positive).
pub fn random_simplex(rng: &mut SplitMix64, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| -rng.next_f64_open().ln()).collect();
    let sum: f64 = raw.iter().sum();
    raw.iter().map(|x| x / sum).collect()
}

/// Uniform empirical measure on `n` random points in `[-range, range]^d`.
pub fn random_points(rng: &mut SplitMix64, n: usize, d: usize, range: f64) -> DiscreteMeasure {
    let points = (0..n)
        .map(|_| (0..d).map(|_| rng.range(-range, range)).collect())
        .collect();
    DiscreteMeasure::uniform(points).expect("random points form a valid measure")
}

/// Weighted measure on random points.
pub fn random_measure(rng: &mut SplitMix64, n: usize, d: usize, range: f64) -> DiscreteMeasure {
    let weights = random_simplex(rng, n);
    let points = (0..n)
        .map(|_| (0..d).map(|_| rng.range(-range, range)).collect())
        .collect();
    DiscreteMeasure::new(points, weights).expect("random measure is valid")
}

/// Random nonnegative cost matrix with entries in `[0, hi)`.
pub fn random_cost(rng: &mut SplitMix64, n: usize, m: usize, hi: f64) -> CostMatrix {
    let rows = (0..n)
        .map(|_| (0..m).map(|_| rng.range(0.0, hi)).collect())
        .collect();
    CostMatrix::from_rows(rows).expect("random cost matrix is valid")
}

/// Haar-ish random orthogonal map with a random shift, via Gram-Schmidt on a
/// Gaussian matrix (re-orthogonalized once for the `1e-10` validation gate).
pub fn random_isometry(rng: &mut SplitMix64, d: usize, shift_range: f64) -> IsometryMap {
    loop {
        let mut cols: Vec<Vec<f64>> = (0..d)
            .map(|_| (0..d).map(|_| rng.normal()).collect())
            .collect();
        let mut ok = true;
        for pass in 0..2 {
            for j in 0..d {
                if pass == 0 || j > 0 {
                    for k in 0..j {
                        let dot: f64 = (0..d).map(|i| cols[j][i] * cols[k][i]).sum();
                        for i in 0..d {
                            cols[j][i] -= dot * cols[k][i];
                        }
                    }
                }
                let norm: f64 = cols[j].iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm < 1e-6 {
                    ok = false;
                    break;
                }
                for x in cols[j].iter_mut() {
                    *x /= norm;
                }
            }
            if !ok {
                break;
            }
        }
        if !ok {
            continue; // essentially never: resample a degenerate draw
        }
        let matrix: Vec<Vec<f64>> = (0..d)
            .map(|i| (0..d).map(|j| cols[j][i]).collect())
            .collect();
        let shift: Vec<f64> = (0..d).map(|_| rng.range(-shift_range, shift_range)).collect();
        if let Ok(map) = IsometryMap::new(matrix, shift) {
            return map;
        }
    }
}
