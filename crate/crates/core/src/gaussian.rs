//! Closed-form proximal 2-Wasserstein/KL divergence for Gaussians.
//!
//! For `P = N(m1, s1^2)` and `Q = N(m2, s2^2)` the minimizing intermediate
//! measure is itself Gaussian, `R = N(m_R, s_R^2)`, with
//!
//! ```text
//! r   = eps / (2 s2^2)
//! m_R = (m1 + r m2) / (1 + r)
//! s_R = (s1 + sqrt(s1^2 + 2 eps (1 + r))) / (2 (1 + r))    (positive root)
//! D   = r/(1+r) (m1 - m2)^2 + s1 (s1 - s_R) + eps ln(s2 / s_R)
//! ```
//!
//! where `s_R` solves the stationarity condition
//! `2 (s_R - s1) - eps / s_R + eps s_R / s2^2 = 0`. Diagonal multivariate
//! Gaussians reduce to a per-coordinate sum by additivity of the divergence
//! over product measures; general covariances are out of scope.
//!
//! These closed forms are the analytic oracle for the discrete solver.

use crate::error::{Error, Result};

/// Univariate Gaussian `N(mean, std^2)` with strictly positive `std`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gaussian1D {
    pub mean: f64,
    pub std: f64,
}

impl Gaussian1D {
    pub fn new(mean: f64, std: f64) -> Result<Self> {
        if !mean.is_finite() {
            return Err(Error::NonFinite { what: "mean", index: 0 });
        }
        if !(std > 0.0) || !std.is_finite() {
            return Err(Error::InvalidParameter {
                name: "std",
                value: std,
                requirement: "must be strictly positive",
            });
        }
        Ok(Self { mean, std })
    }
}

/// Multivariate Gaussian with diagonal covariance, stored as per-coordinate
/// means and standard deviations.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianDiag {
    means: Vec<f64>,
    stds: Vec<f64>,
}

impl GaussianDiag {
    pub fn new(means: Vec<f64>, stds: Vec<f64>) -> Result<Self> {
        if means.is_empty() {
            return Err(Error::EmptyMeasure);
        }
        if means.len() != stds.len() {
            return Err(Error::DimensionMismatch { expected: means.len(), got: stds.len() });
        }
        for (i, &m) in means.iter().enumerate() {
            if !m.is_finite() {
                return Err(Error::NonFinite { what: "mean", index: i });
            }
        }
        for &s in &stds {
            if !(s > 0.0) || !s.is_finite() {
                return Err(Error::InvalidParameter {
                    name: "std",
                    value: s,
                    requirement: "must be strictly positive",
                });
            }
        }
        Ok(Self { means, stds })
    }

    pub fn dim(&self) -> usize {
        self.means.len()
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn stds(&self) -> &[f64] {
        &self.stds
    }

    pub fn coordinate(&self, k: usize) -> Gaussian1D {
        Gaussian1D { mean: self.means[k], std: self.stds[k] }
    }
}

fn validate_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::InvalidParameter {
            name: "epsilon",
            value: eps,
            requirement: "must be positive and finite",
        });
    }
    Ok(())
}

/// Closed-form divergence and proximal intermediate Gaussian in one dimension.
pub fn proximal_gaussian_1d(p: Gaussian1D, q: Gaussian1D, eps: f64) -> Result<(f64, Gaussian1D)> {
    validate_eps(eps)?;
    let r = eps / (2.0 * q.std * q.std);
    let mean_r = (p.mean + r * q.mean) / (1.0 + r);
    let std_r = (p.std + (p.std * p.std + 2.0 * eps * (1.0 + r)).sqrt()) / (2.0 * (1.0 + r));
    let dm = p.mean - q.mean;
    let divergence = r / (1.0 + r) * dm * dm + p.std * (p.std - std_r) + eps * (q.std / std_r).ln();
    Ok((divergence, Gaussian1D { mean: mean_r, std: std_r }))
}

/// Coordinatewise closed form for diagonal Gaussians; the divergence is the
/// sum of the per-coordinate divergences.
pub fn proximal_gaussian_diag(
    p: &GaussianDiag,
    q: &GaussianDiag,
    eps: f64,
) -> Result<(f64, GaussianDiag)> {
    if p.dim() != q.dim() {
        return Err(Error::DimensionMismatch { expected: p.dim(), got: q.dim() });
    }
    let mut total = 0.0;
    let mut means = Vec::with_capacity(p.dim());
    let mut stds = Vec::with_capacity(p.dim());
    for k in 0..p.dim() {
        let (d, r) = proximal_gaussian_1d(p.coordinate(k), q.coordinate(k), eps)?;
        total += d;
        means.push(r.mean);
        stds.push(r.std);
    }
    Ok((total, GaussianDiag { means, stds }))
}

/// One row of the interpolation curve: the proximal Gaussian at a given `eps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub eps: f64,
    pub mean_r: f64,
    pub std_r: f64,
    pub divergence: f64,
}

/// Evaluate the intermediate Gaussian along a list of `eps` values; the data
/// behind interpolation plots (`R` drifts from `P`-like to `Q`-like).
pub fn gaussian_interpolant_curve(
    p: Gaussian1D,
    q: Gaussian1D,
    eps_list: &[f64],
) -> Result<Vec<CurvePoint>> {
    eps_list
        .iter()
        .map(|&eps| {
            let (divergence, r) = proximal_gaussian_1d(p, q, eps)?;
            Ok(CurvePoint { eps, mean_r: r.mean, std_r: r.std, divergence })
        })
        .collect()
}

/// `W_2^2` between univariate Gaussians: `(m1-m2)^2 + (s1-s2)^2`.
#[cfg(test)]
fn w2_squared_1d(p: Gaussian1D, q: Gaussian1D) -> f64 {
    (p.mean - q.mean).powi(2) + (p.std - q.std).powi(2)
}

/// `KL(P || Q)` between univariate Gaussians.
#[cfg(test)]
fn kl_1d(p: Gaussian1D, q: Gaussian1D) -> f64 {
    (q.std / p.std).ln()
        + (p.std * p.std + (p.mean - q.mean).powi(2)) / (2.0 * q.std * q.std)
        - 0.5
}
