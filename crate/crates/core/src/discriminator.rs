//! c-transforms and the extended dual potential (the "discriminator").
//!
//! Given the dual potential `psi` on the target support, the optimal `phi`
//! extends to every point of space as
//!
//! ```text
//! phi_hat(x) = min_i { c(x, y_i) - psi_i }
//! ```
//!
//! the largest function feasible against `psi`. Its spatial gradient follows
//! the envelope rule: differentiate the active term. For the power cost
//! `c(x, y) = |x - y|^p` that gradient is `p |x - y|^{p-2} (x - y)` at the
//! selected target, which is what drives the particle flow.
//!
//! Argmin ties break to the smallest index so runs are reproducible.

use crate::error::{Error, Result};
use crate::measures::{power_cost, CostMatrix, CostSpec};

/// `phi_i = min_j (C_ij - psi_j)`: the feasibility-tightening transform from
/// column to row potentials. `(c_transform(psi), psi)` is feasible by
/// construction.
pub fn c_transform(psi: &[f64], cost: &CostMatrix) -> Vec<f64> {
    debug_assert_eq!(psi.len(), cost.n_cols());
    (0..cost.n_rows())
        .map(|i| {
            let row = cost.row(i);
            let mut best = f64::INFINITY;
            for (j, &c) in row.iter().enumerate() {
                let v = c - psi[j];
                if v < best {
                    best = v;
                }
            }
            best
        })
        .collect()
}

/// The adjoint direction: `psi_j = min_i (C_ij - phi_i)`.
pub fn c_transform_cols(phi: &[f64], cost: &CostMatrix) -> Vec<f64> {
    debug_assert_eq!(phi.len(), cost.n_rows());
    let mut psi = vec![f64::INFINITY; cost.n_cols()];
    for (i, &p) in phi.iter().enumerate() {
        let row = cost.row(i);
        for (j, &c) in row.iter().enumerate() {
            let v = c - p;
            if v < psi[j] {
                psi[j] = v;
            }
        }
    }
    psi
}

/// The extended dual potential over target points with a power-distance cost.
/// Immutable; evaluation and gradients are pure and thread-safe.
#[derive(Debug, Clone)]
pub struct Discriminator {
    target_points: Vec<Vec<f64>>,
    psi_values: Vec<f64>,
    p: f64,
    dim: usize,
}

impl Discriminator {
    /// Requires a power-distance cost (`p >= 1`), matching lengths, and finite
    /// `psi` on every stored target.
    pub fn new(target_points: Vec<Vec<f64>>, psi_values: Vec<f64>, cost: CostSpec) -> Result<Self> {
        let p = match cost {
            CostSpec::PowerDistance { p } => p,
            CostSpec::ExplicitMatrix(_) => {
                return Err(Error::InvalidParameter {
                    name: "cost",
                    value: f64::NAN,
                    requirement: "discriminator needs a pointwise cost (power_distance)",
                })
            }
        };
        if !(p >= 1.0) || !p.is_finite() {
            return Err(Error::InvalidParameter {
                name: "p",
                value: p,
                requirement: "power-distance exponent must satisfy p >= 1",
            });
        }
        if target_points.is_empty() {
            return Err(Error::EmptyMeasure);
        }
        if target_points.len() != psi_values.len() {
            return Err(Error::DimensionMismatch {
                expected: target_points.len(),
                got: psi_values.len(),
            });
        }
        let dim = target_points[0].len();
        for pt in &target_points {
            if pt.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: pt.len() });
            }
        }
        for (j, &v) in psi_values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite { what: "psi", index: j });
            }
        }
        Ok(Self { target_points, psi_values, p, dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.target_points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.target_points.is_empty()
    }

    /// Index of the active target at `x`. Scores within `1e-9` of the minimum
    /// count as tied and resolve to the smallest index; exact ties are forced
    /// by complementary slackness whenever the optimal plan splits a source,
    /// so the snap keeps the selection stable under rounding-level input
    /// perturbations.
    fn select(&self, x: &[f64]) -> Result<usize> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        let mut best = f64::INFINITY;
        for (i, y) in self.target_points.iter().enumerate() {
            let v = power_cost(x, y, self.p) - self.psi_values[i];
            if v < best {
                best = v;
            }
        }
        let tol = 1e-9 * (1.0 + best.abs());
        for (i, y) in self.target_points.iter().enumerate() {
            let v = power_cost(x, y, self.p) - self.psi_values[i];
            if v <= best + tol {
                return Ok(i);
            }
        }
        unreachable!("a finite minimum always exists")
    }

    /// `phi_hat(x) = min_i { |x - y_i|^p - psi_i }`.
    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        let i = self.select(x)?;
        Ok(power_cost(x, &self.target_points[i], self.p) - self.psi_values[i])
    }

    /// Envelope gradient `p |x - y*|^{p-2} (x - y*)` at the active target.
    ///
    /// Rejected for `p = 1` (nondifferentiable at ties) and, when `x`
    /// coincides with the active target, for `1 < p < 2` (the limit is
    /// unbounded there); for `p >= 2` coincidence yields the zero vector.
    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        if self.p <= 1.0 {
            return Err(Error::GradientUndefined(
                "power-distance gradient needs p > 1".into(),
            ));
        }
        let i = self.select(x)?;
        let y = &self.target_points[i];
        let dist_sq: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
        if dist_sq == 0.0 {
            if self.p >= 2.0 {
                return Ok(vec![0.0; self.dim]);
            }
            return Err(Error::GradientUndefined(format!(
                "gradient is unbounded at a coincident target for p = {}",
                self.p
            )));
        }
        let scale = if self.p == 2.0 {
            2.0
        } else {
            self.p * dist_sq.sqrt().powf(self.p - 2.0)
        };
        Ok(x.iter().zip(y).map(|(a, b)| scale * (a - b)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn disc(targets: &[f64], psi: &[f64], p: f64) -> Discriminator {
        Discriminator::new(
            targets.iter().map(|&t| vec![t]).collect(),
            psi.to_vec(),
            CostSpec::power(p).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn c_transform_rowwise_minima() {
        let cost = CostMatrix::from_rows(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(c_transform(&[0.0, 0.0], &cost), vec![0.0, 0.0]);
        assert_eq!(c_transform(&[0.0, 1.0], &cost), vec![0.0, -1.0]);
    }

    #[test]
    fn double_transform_is_idempotent() {
        let mut rng = SplitMix64::new(4);
        for _ in 0..50 {
            let rows: Vec<Vec<f64>> = (0..4)
                .map(|_| (0..5).map(|_| rng.range(0.0, 10.0)).collect())
                .collect();
            let cost = CostMatrix::from_rows(rows).unwrap();
            let psi0: Vec<f64> = (0..5).map(|_| rng.range(-2.0, 2.0)).collect();
            let phi1 = c_transform(&psi0, &cost);
            let psi1 = c_transform_cols(&phi1, &cost);
            let phi2 = c_transform(&psi1, &cost);
            let psi2 = c_transform_cols(&phi2, &cost);
            for (a, b) in phi1.iter().zip(&phi2) {
                assert!((a - b).abs() <= 1e-12);
            }
            for (a, b) in psi1.iter().zip(&psi2) {
                assert!((a - b).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn evaluate_single_target_is_squared_distance() {
        let d = disc(&[0.0], &[0.0], 2.0);
        for x in [-2.0, -0.5, 0.0, 1.0, 3.0] {
            assert_eq!(d.evaluate(&[x]).unwrap(), x * x);
        }
    }

    #[test]
    fn evaluate_nearest_target() {
        let d = disc(&[-1.0, 1.0], &[0.0, 0.0], 2.0);
        assert_eq!(d.evaluate(&[0.0]).unwrap(), 1.0);
        assert_eq!(d.evaluate(&[2.0]).unwrap(), 1.0);
    }

    #[test]
    fn evaluate_accounts_for_psi() {
        let d = disc(&[-1.0, 1.0], &[0.0, 3.0], 2.0);
        // min(1 - 0, 1 - 3) = -2
        assert_eq!(d.evaluate(&[0.0]).unwrap(), -2.0);
    }

    #[test]
    fn gradient_single_target() {
        let d = disc(&[0.0], &[0.0], 2.0);
        assert_eq!(d.gradient(&[3.0]).unwrap(), vec![6.0]);
    }

    #[test]
    fn gradient_zero_at_coincidence() {
        let d = disc(&[-1.0, 1.0], &[0.0, 0.0], 2.0);
        assert_eq!(d.gradient(&[-1.0]).unwrap(), vec![0.0]);
        let d3 = disc(&[0.5], &[0.0], 3.0);
        assert_eq!(d3.gradient(&[0.5]).unwrap(), vec![0.0]);
    }

    #[test]
    fn gradient_selects_argmin_then_differentiates() {
        let d = disc(&[-1.0, 1.0], &[0.0, 0.0], 2.0);
        let g = d.gradient(&[0.2]).unwrap();
        assert!((g[0] - 2.0 * (0.2 - 1.0)).abs() <= 1e-12, "expected -1.6, got {}", g[0]);
    }

    #[test]
    fn gradient_rejects_p_one_and_interior_singularity() {
        let d1 = disc(&[0.0], &[0.0], 1.0);
        assert!(matches!(d1.gradient(&[1.0]), Err(Error::GradientUndefined(_))));
        let d15 = disc(&[0.0], &[0.0], 1.5);
        assert!(matches!(d15.gradient(&[0.0]), Err(Error::GradientUndefined(_))));
        assert!(d15.gradient(&[0.3]).is_ok());
    }

    #[test]
    fn c_concavity_at_random_probes() {
        let mut rng = SplitMix64::new(11);
        let targets: Vec<f64> = (0..6).map(|_| rng.range(-3.0, 3.0)).collect();
        let psi: Vec<f64> = (0..6).map(|_| rng.range(-1.0, 1.0)).collect();
        let d = disc(&targets, &psi, 2.0);
        for _ in 0..500 {
            let x = [rng.range(-5.0, 5.0)];
            let val = d.evaluate(&x).unwrap();
            for (j, &t) in targets.iter().enumerate() {
                let c = (x[0] - t) * (x[0] - t);
                assert!(val + psi[j] <= c + 1e-12);
            }
        }
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = SplitMix64::new(23);
        for &p in &[1.5, 2.0, 3.0] {
            let targets: Vec<Vec<f64>> = (0..8)
                .map(|_| vec![rng.range(-2.0, 2.0), rng.range(-2.0, 2.0)])
                .collect();
            let psi: Vec<f64> = (0..8).map(|_| rng.range(-0.5, 0.5)).collect();
            let d = Discriminator::new(targets.clone(), psi.clone(), CostSpec::power(p).unwrap())
                .unwrap();
            let h = 1e-5;
            let mut checked = 0;
            while checked < 200 {
                let x = vec![rng.range(-3.0, 3.0), rng.range(-3.0, 3.0)];
                // skip probes near a tie between targets, where the envelope kinks
                let mut vals: Vec<f64> = targets
                    .iter()
                    .zip(&psi)
                    .map(|(t, &s)| power_cost(&x, t, p) - s)
                    .collect();
                vals.sort_by(|a, b| a.total_cmp(b));
                if vals[1] - vals[0] < 1e-3 {
                    continue;
                }
                let grad = d.gradient(&x).unwrap();
                for k in 0..2 {
                    let mut xp = x.clone();
                    let mut xm = x.clone();
                    xp[k] += h;
                    xm[k] -= h;
                    let fd =
                        (d.evaluate(&xp).unwrap() - d.evaluate(&xm).unwrap()) / (2.0 * h);
                    assert!(
                        (fd - grad[k]).abs() <= 1e-5 * (1.0 + grad[k].abs()),
                        "p={p}: fd {fd} vs grad {}",
                        grad[k]
                    );
                }
                checked += 1;
            }
        }
    }

    mod transform_props {
        use super::super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn transform_pairs_are_always_feasible(
                costs in prop::collection::vec(0.0..10.0f64, 12),
                psi in prop::collection::vec(-4.0..4.0f64, 4),
            ) {
                let rows = costs.chunks(4).map(|c| c.to_vec()).collect();
                let cost = CostMatrix::from_rows(rows).unwrap();
                let phi = c_transform(&psi, &cost);
                for i in 0..3 {
                    for j in 0..4 {
                        prop_assert!(phi[i] + psi[j] <= cost.get(i, j) + 1e-12);
                    }
                }
                let psi2 = c_transform_cols(&phi, &cost);
                for (a, b) in psi.iter().zip(&psi2) {
                    prop_assert!(b + 1e-12 >= *a, "adjoint transform may only raise psi");
                }
            }
        }
    }

    #[test]
    fn gauge_invariance_under_constant_shift() {
        let mut rng = SplitMix64::new(91);
        let targets: Vec<f64> = (0..5).map(|_| rng.range(-2.0, 2.0)).collect();
        let psi: Vec<f64> = (0..5).map(|_| rng.range(-1.0, 1.0)).collect();
        let kappa = 0.75;
        let shifted: Vec<f64> = psi.iter().map(|v| v + kappa).collect();
        let d0 = disc(&targets, &psi, 2.0);
        let d1 = disc(&targets, &shifted, 2.0);
        for _ in 0..100 {
            let x = [rng.range(-4.0, 4.0)];
            let e0 = d0.evaluate(&x).unwrap();
            let e1 = d1.evaluate(&x).unwrap();
            assert!((e1 - (e0 - kappa)).abs() <= 1e-12);
            assert_eq!(d0.gradient(&x).unwrap(), d1.gradient(&x).unwrap());
        }
    }
}
