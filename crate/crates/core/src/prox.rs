//! Proximal OT divergence for discrete measures.
//!
//! For weights `a` on N source points, `b` on M target points, a cost matrix
//! `C`, and `eps > 0`, the divergence is
//!
//! ```text
//! D = min_w { T_C(a, w) + eps * KL(w || b) }      (primal, over simplex w)
//!   = max_{phi_i + psi_j <= C_ij} { <a, phi> - eps * ln sum_j b_j e^{-psi_j / eps} }   (dual)
//! ```
//!
//! with the minimizing intermediate weights given by the Gibbs form
//! `w_j ∝ b_j e^{-psi_j / eps}` at the optimal `psi`.
//!
//! [`solve_proximal`] runs in three phases:
//!
//! 1. Semi-relaxed scaling on the entropically smoothed problem, in the log
//!    domain: `u <- a ⊘ (K v)`, `v <- (b ⊘ (K^T u))^{eps/(eps+eta)}` with
//!    `K = e^{-C/eta}`, while `eta` anneals geometrically from `eta_start`
//!    down to `eta_end`.
//! 2. Certification: tighten the scaled potential by a double c-transform,
//!    recover `w` from the Gibbs form, evaluate the dual objective (a true
//!    lower bound) and the primal objective with an exact inner transport
//!    solve (a true upper bound).
//! 3. Polish, until the gap target is met: one alternation pass (re-certify
//!    from the inner transport duals), closed-form rebalancing of the
//!    potential's per-component constants on the plan support, continued
//!    annealing below `eta_end` while it pays, and a cutting-plane bundle
//!    that mixes all inner duals seen so far. Every intermediate stays a
//!    valid primal/dual bound; the candidate with the smallest gap wins.
//!
//! The reported divergence is the certified primal value; the dual value and
//! gap are exposed so callers can see exactly how much slack remains.

use crate::error::{Error, Result};
use crate::exact_ot::{solve_exact_ot, DualPotentials, TransportPlan};
use crate::measures::CostMatrix;
use rayon::prelude::*;

/// Knobs for the scaling and polish phases.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Initial smoothing. `None` means the median cost entry.
    pub eta_start: Option<f64>,
    /// Final smoothing. `None` means `1e-3` times the median cost entry.
    pub eta_end: Option<f64>,
    /// Geometric annealing ratio in (0, 1).
    pub anneal_factor: f64,
    /// Scaling iterations allowed per annealing stage.
    pub max_iterations: usize,
    /// L1 marginal violation at which a stage stops early.
    pub convergence_tol: f64,
    /// Run the polish phase (phase 3). Without it the certificate comes from
    /// the scaled potential alone.
    pub polish: bool,
    /// Relative primal-dual gap at which polishing stops. `None` means
    /// `1e-9 * (1 + |value|)`.
    pub gap_tol: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            eta_start: None,
            eta_end: None,
            anneal_factor: 0.5,
            max_iterations: 500,
            convergence_tol: 1e-8,
            polish: true,
            gap_tol: None,
        }
    }
}

impl SolverConfig {
    fn validate(&self) -> Result<()> {
        if !(self.anneal_factor > 0.0 && self.anneal_factor < 1.0) {
            return Err(Error::InvalidParameter {
                name: "anneal_factor",
                value: self.anneal_factor,
                requirement: "must lie strictly between 0 and 1",
            });
        }
        if self.convergence_tol <= 0.0 || !self.convergence_tol.is_finite() {
            return Err(Error::InvalidParameter {
                name: "convergence_tol",
                value: self.convergence_tol,
                requirement: "must be positive",
            });
        }
        if let Some(g) = self.gap_tol {
            if !(g > 0.0) || !g.is_finite() {
                return Err(Error::InvalidParameter {
                    name: "gap_tol",
                    value: g,
                    requirement: "must be positive",
                });
            }
        }
        for (name, v) in [("eta_start", self.eta_start), ("eta_end", self.eta_end)] {
            if let Some(v) = v {
                if !(v > 0.0) || !v.is_finite() {
                    return Err(Error::InvalidParameter {
                        name,
                        value: v,
                        requirement: "must be positive",
                    });
                }
            }
        }
        if let (Some(s), Some(e)) = (self.eta_start, self.eta_end) {
            if e > s {
                return Err(Error::InvalidParameter {
                    name: "eta_end",
                    value: e,
                    requirement: "must not exceed eta_start",
                });
            }
        }
        Ok(())
    }
}

/// Certified output of [`solve_proximal`].
///
/// `divergence` always equals `primal_value`, a true upper bound obtained by
/// an exact inner transport solve at `weights_w`; `dual_value` is a feasible
/// lower bound, and `gap = primal_value - dual_value` bounds the error.
/// `weights_w` is exactly `recover_weights(potentials.psi, b, epsilon)`.
#[derive(Debug, Clone)]
pub struct ProximalSolution {
    pub epsilon: f64,
    pub divergence: f64,
    /// Intermediate measure weights on the target support.
    pub weights_w: Vec<f64>,
    /// Optimal plan of the inner transport between `a` and `weights_w`.
    pub plan: TransportPlan,
    pub potentials: DualPotentials,
    pub primal_value: f64,
    pub dual_value: f64,
    pub gap: f64,
    /// Scaling iterations plus polish rounds consumed.
    pub iterations: usize,
    /// Whether the gap met the certificate threshold
    /// `1e-4 * (1 + |divergence|)`.
    pub converged: bool,
}

const CERT_REL_TOL: f64 = 1e-4;


/// Discrete KL divergence `sum_j w_j ln(w_j / b_j)`.
///
/// Terms with `w_j = 0` contribute zero; any `w_j > 0` where `b_j = 0` makes
/// the result `+inf`.
pub fn kl_divergence(w: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(w.len(), b.len());
    let mut total = 0.0;
    for (&wj, &bj) in w.iter().zip(b) {
        if wj > 0.0 {
            if bj <= 0.0 {
                return f64::INFINITY;
            }
            total += wj * (wj / bj).ln();
        }
    }
    total
}

fn validate_weights(name: &'static str, w: &[f64]) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(w.len());
    for (i, &x) in w.iter().enumerate() {
        if !x.is_finite() {
            return Err(Error::NonFinite { what: name, index: i });
        }
        if x < 0.0 {
            if x > -1e-12 {
                out.push(0.0);
                continue;
            }
            return Err(Error::Negative { what: name, index: i, value: x });
        }
        out.push(x);
    }
    let sum: f64 = out.iter().sum();
    if (sum - 1.0).abs() > 1e-6 {
        return Err(Error::WeightSum { sum });
    }
    // keep already-normalized input bit-for-bit so downstream Gibbs recovery
    // reproduces the solver's weights exactly
    if (sum - 1.0).abs() > 1e-12 {
        for x in out.iter_mut() {
            *x /= sum;
        }
    }
    Ok(out)
}

fn validate_epsilon(eps: f64) -> Result<()> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::InvalidParameter {
            name: "epsilon",
            value: eps,
            requirement: "must be positive and finite",
        });
    }
    Ok(())
}

fn check_shape(a: &[f64], b: &[f64], cost: &CostMatrix) -> Result<()> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyMeasure);
    }
    if cost.n_rows() != a.len() {
        return Err(Error::DimensionMismatch { expected: a.len(), got: cost.n_rows() });
    }
    if cost.n_cols() != b.len() {
        return Err(Error::DimensionMismatch { expected: b.len(), got: cost.n_cols() });
    }
    Ok(())
}

/// Primal objective `T_C(a, w) + eps * KL(w || b)` with the inner transport
/// solved exactly.
///
/// Returns `+inf` (not an error) when `w` places mass where `b` has none.
pub fn primal_objective(a: &[f64], b: &[f64], cost: &CostMatrix, eps: f64, w: &[f64]) -> Result<f64> {
    check_shape(a, b, cost)?;
    validate_epsilon(eps)?;
    if w.len() != b.len() {
        return Err(Error::DimensionMismatch { expected: b.len(), got: w.len() });
    }
    let a = validate_weights("weight", a)?;
    let w = validate_weights("weight", w)?;
    for (&wj, &bj) in w.iter().zip(b) {
        if wj > 0.0 && bj <= 0.0 {
            return Ok(f64::INFINITY);
        }
    }
    let (plan, _) = solve_exact_ot(&a, &w, cost)?;
    Ok(plan.value() + eps * kl_divergence(&w, b))
}

/// Dual objective `<a, phi> - eps * ln sum_j b_j e^{-psi_j / eps}`.
///
/// The pair must be feasible (`phi_i + psi_j <= C_ij + 1e-9`); columns with
/// `b_j = 0` are excluded from the log-sum-exp. Any feasible value is a lower
/// bound on the divergence.
pub fn dual_objective(
    a: &[f64],
    b: &[f64],
    cost: &CostMatrix,
    eps: f64,
    phi: &[f64],
    psi: &[f64],
) -> Result<f64> {
    check_shape(a, b, cost)?;
    validate_epsilon(eps)?;
    if phi.len() != a.len() {
        return Err(Error::DimensionMismatch { expected: a.len(), got: phi.len() });
    }
    if psi.len() != b.len() {
        return Err(Error::DimensionMismatch { expected: b.len(), got: psi.len() });
    }
    for (i, &v) in phi.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFinite { what: "phi", index: i });
        }
    }
    for (j, &v) in psi.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFinite { what: "psi", index: j });
        }
    }
    let mut worst = (0usize, 0usize, 0.0f64);
    for i in 0..a.len() {
        let row = cost.row(i);
        for j in 0..b.len() {
            let violation = phi[i] + psi[j] - row[j];
            if violation > worst.2 {
                worst = (i, j, violation);
            }
        }
    }
    if worst.2 > 1e-9 {
        return Err(Error::InfeasiblePotentials { i: worst.0, j: worst.1, violation: worst.2 });
    }
    let a = validate_weights("weight", a)?;
    let b = validate_weights("weight", b)?;

    let linear: f64 = a.iter().zip(phi).map(|(&ai, &pi)| ai * pi).sum();
    // log-sum-exp with max shift over the supported columns
    let mut max_term = f64::NEG_INFINITY;
    for (&bj, &pj) in b.iter().zip(psi) {
        if bj > 0.0 {
            max_term = max_term.max(bj.ln() - pj / eps);
        }
    }
    if max_term == f64::NEG_INFINITY {
        return Err(Error::ZeroMass);
    }
    let mut sum = 0.0;
    for (&bj, &pj) in b.iter().zip(psi) {
        if bj > 0.0 {
            sum += (bj.ln() - pj / eps - max_term).exp();
        }
    }
    Ok(linear - eps * (max_term + sum.ln()))
}

/// Gibbs recovery of the intermediate weights:
/// `w_j = b_j e^{-psi_j/eps} / sum_l b_l e^{-psi_l/eps}`, log-domain
/// stabilized. `w_j = 0` exactly wherever `b_j = 0`.
pub fn recover_weights(psi: &[f64], b: &[f64], eps: f64) -> Result<Vec<f64>> {
    validate_epsilon(eps)?;
    if psi.len() != b.len() {
        return Err(Error::DimensionMismatch { expected: b.len(), got: psi.len() });
    }
    let mut max_term = f64::NEG_INFINITY;
    for (j, (&bj, &pj)) in b.iter().zip(psi).enumerate() {
        if bj > 0.0 {
            if !pj.is_finite() {
                return Err(Error::NonFinite { what: "psi", index: j });
            }
            max_term = max_term.max(bj.ln() - pj / eps);
        }
    }
    if max_term == f64::NEG_INFINITY {
        return Err(Error::ZeroMass);
    }
    let mut w = vec![0.0; b.len()];
    let mut total = 0.0;
    for (j, (&bj, &pj)) in b.iter().zip(psi).enumerate() {
        if bj > 0.0 {
            let v = (bj.ln() - pj / eps - max_term).exp();
            w[j] = v;
            total += v;
        }
    }
    for v in w.iter_mut() {
        *v /= total;
    }
    Ok(w)
}

/// One cut of the outer dual bundle: a feasible potential pair stored as
/// `alpha = <a, phi>` plus `psi`. For any simplex mixture `lambda`, the mixed
/// pair stays feasible and its dual objective is
/// `sum_k lambda_k alpha_k - eps lse(ln b - psi_mix / eps)`, a smooth concave
/// master whose exact maximum over all cuts equals the divergence.
struct Cut {
    alpha: f64,
    psi: Vec<f64>,
}

/// Maximize the restricted master over mixtures of cuts by pairwise
/// Frank-Wolfe: each step transfers mass from the worst active cut to the
/// best cut along an exact ternary line search. Returns the mixed potential
/// and its dual value.
fn solve_master(cuts: &[Cut], b: &[f64], eps: f64) -> (Vec<f64>, f64) {
    let m = b.len();
    let k = cuts.len();

    // G(lambda) evaluated from an explicit mixed potential
    let value_of = |alpha_mix: f64, psi_mix: &[f64]| -> f64 {
        let mut hi = f64::NEG_INFINITY;
        for j in 0..m {
            if b[j] > 0.0 {
                hi = hi.max(b[j].ln() - psi_mix[j] / eps);
            }
        }
        let mut acc = 0.0;
        for j in 0..m {
            if b[j] > 0.0 {
                acc += (b[j].ln() - psi_mix[j] / eps - hi).exp();
            }
        }
        alpha_mix - eps * (hi + acc.ln())
    };

    // start from the single best cut
    let mut best_single = (0usize, f64::NEG_INFINITY);
    for (i, cut) in cuts.iter().enumerate() {
        let v = value_of(cut.alpha, &cut.psi);
        if v > best_single.1 {
            best_single = (i, v);
        }
    }
    let mut lambda = vec![0.0; k];
    lambda[best_single.0] = 1.0;
    let mut psi_mix = cuts[best_single.0].psi.clone();
    let mut alpha_mix = cuts[best_single.0].alpha;
    let mut current = best_single.1;

    let mut dir = vec![0.0; m];
    for _ in 0..400 {
        let w = match recover_weights(&psi_mix, b, eps) {
            Ok(w) => w,
            Err(_) => break,
        };
        // gradient of the master per cut: alpha_k + <w, psi_k>
        let mut best = (0usize, f64::NEG_INFINITY);
        let mut worst_active = (usize::MAX, f64::INFINITY);
        let mut grad_dot_lambda = 0.0;
        for (i, cut) in cuts.iter().enumerate() {
            let g: f64 =
                cut.alpha + w.iter().zip(&cut.psi).map(|(&wj, &pj)| wj * pj).sum::<f64>();
            grad_dot_lambda += lambda[i] * g;
            if g > best.1 {
                best = (i, g);
            }
            if lambda[i] > 1e-16 && g < worst_active.1 {
                worst_active = (i, g);
            }
        }
        if best.1 - grad_dot_lambda <= 1e-13 * (1.0 + current.abs()) {
            break;
        }
        if worst_active.0 == usize::MAX || worst_active.0 == best.0 {
            break;
        }
        // transfer up to lambda[worst] from the worst active cut to the best
        let cap = lambda[worst_active.0];
        let d_alpha = cuts[best.0].alpha - cuts[worst_active.0].alpha;
        for j in 0..m {
            dir[j] = cuts[best.0].psi[j] - cuts[worst_active.0].psi[j];
        }
        let eval_t = |t: f64| -> f64 {
            let mut hi = f64::NEG_INFINITY;
            for j in 0..m {
                if b[j] > 0.0 {
                    hi = hi.max(b[j].ln() - (psi_mix[j] + t * dir[j]) / eps);
                }
            }
            let mut acc = 0.0;
            for j in 0..m {
                if b[j] > 0.0 {
                    acc += (b[j].ln() - (psi_mix[j] + t * dir[j]) / eps - hi).exp();
                }
            }
            alpha_mix + t * d_alpha - eps * (hi + acc.ln())
        };
        let (mut lo, mut hi_t) = (0.0f64, cap);
        for _ in 0..40 {
            let t1 = lo + (hi_t - lo) / 3.0;
            let t2 = hi_t - (hi_t - lo) / 3.0;
            if eval_t(t1) >= eval_t(t2) {
                hi_t = t2;
            } else {
                lo = t1;
            }
        }
        let mut t = 0.5 * (lo + hi_t);
        if eval_t(cap) >= eval_t(t) {
            t = cap; // full transfer drops the worst cut entirely
        }
        if t <= 0.0 {
            break;
        }
        let v = eval_t(t);
        lambda[worst_active.0] -= t;
        if lambda[worst_active.0] < 1e-16 {
            lambda[worst_active.0] = 0.0;
        }
        lambda[best.0] += t;
        alpha_mix += t * d_alpha;
        for j in 0..m {
            psi_mix[j] += t * dir[j];
        }
        if v <= current + 1e-16 * (1.0 + current.abs()) {
            current = current.max(v);
            break;
        }
        current = v;
    }
    (psi_mix, current)
}

/// Re-anchor the per-component constants of a candidate potential.
///
/// Complementary slackness pins `phi_i + psi_j = C_ij` on every positive arc
/// of the inner plan, which determines the potential within each connected
/// component of the plan support up to one additive constant. The outer
/// optimality condition (Gibbs weights must reproduce each component's source
/// mass) fixes those constants in closed form: `kappa_t = eps (ln S_t - ln
/// A_t)` with `A_t` the component's `a`-mass and `S_t` its Gibbs partition
/// sum. With the right support this lands exactly on the optimum.
fn rebalance_components(
    a: &[f64],
    b: &[f64],
    cost: &CostMatrix,
    eps: f64,
    cand: &Candidate,
    rel_thresh: f64,
) -> Option<Vec<f64>> {
    let n = a.len();
    let m = b.len();
    let flows = cand.plan.entries();
    let fmax = flows.iter().cloned().fold(0.0, f64::max);
    if fmax <= 0.0 {
        return None;
    }
    let thresh = fmax * rel_thresh;

    // adjacency over positive arcs; nodes 0..n rows, n..n+m columns
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n + m];
    for i in 0..n {
        for j in 0..m {
            if flows[i * m + j] > thresh {
                adj[i].push(n + j);
                adj[n + j].push(i);
            }
        }
    }

    let mut pot = vec![0.0; n + m]; // phi on rows, psi base on columns
    let mut comp = vec![usize::MAX; n + m];
    let mut comps: Vec<(f64, Vec<usize>)> = Vec::new(); // (a-mass, column list)
    for start in 0..n {
        if comp[start] != usize::MAX || adj[start].is_empty() {
            continue;
        }
        let id = comps.len();
        let mut a_mass = 0.0;
        let mut cols = Vec::new();
        let mut stack = vec![start];
        comp[start] = id;
        pot[start] = 0.0;
        while let Some(node) = stack.pop() {
            if node < n {
                a_mass += a[node];
            } else {
                cols.push(node - n);
            }
            for &other in &adj[node] {
                if comp[other] != usize::MAX {
                    continue;
                }
                comp[other] = id;
                let (i, j) = if node < n { (node, other - n) } else { (other, node - n) };
                pot[other] = cost.get(i, j) - pot[node];
                stack.push(other);
            }
        }
        if a_mass <= 0.0 || cols.is_empty() {
            return None;
        }
        comps.push((a_mass, cols));
    }

    let mut psi = cand.psi.clone(); // untouched columns keep their potential
    for (a_mass, cols) in &comps {
        // ln S_t via a max-shifted log-sum-exp over the component's columns
        let mut hi = f64::NEG_INFINITY;
        for &j in cols {
            if b[j] > 0.0 {
                hi = hi.max(b[j].ln() - pot[n + j] / eps);
            }
        }
        if hi == f64::NEG_INFINITY {
            return None;
        }
        let mut acc = 0.0;
        for &j in cols {
            if b[j] > 0.0 {
                acc += (b[j].ln() - pot[n + j] / eps - hi).exp();
            }
        }
        let ln_s = hi + acc.ln();
        let kappa = eps * (ln_s - a_mass.ln());
        for &j in cols {
            psi[j] = pot[n + j] + kappa;
        }
    }
    Some(psi)
}

/// One certified primal/dual pair.
#[derive(Debug, Clone)]
struct Candidate {
    phi: Vec<f64>,
    psi: Vec<f64>,
    w: Vec<f64>,
    plan: TransportPlan,
    inner_psi: Vec<f64>,
    primal: f64,
    dual: f64,
    gap: f64,
}

/// Build a certificate from `psi_seed`: take the feasible pair
/// `(rowmin(C - psi), psi)`, recover `w`, and evaluate both bounds. With
/// `tighten`, `psi` is first re-tightened by the adjoint transform (never
/// worse for the dual, but it perturbs a potential whose Gibbs weights were
/// chosen deliberately, so rebalanced seeds skip it). `psi_seed` entries of
/// `-inf` (unsupported columns) are allowed only when tightening.
fn certify(
    a: &[f64],
    b: &[f64],
    cost: &CostMatrix,
    eps: f64,
    psi_seed: &[f64],
    tighten: bool,
) -> Result<Candidate> {
    let n = a.len();
    let m = b.len();
    let mut phi = vec![f64::INFINITY; n];
    for i in 0..n {
        let row = cost.row(i);
        let mut best = f64::INFINITY;
        for j in 0..m {
            let v = row[j] - psi_seed[j];
            if v < best {
                best = v;
            }
        }
        phi[i] = best;
    }
    let psi = if tighten {
        let mut psi = vec![f64::INFINITY; m];
        for i in 0..n {
            let row = cost.row(i);
            for j in 0..m {
                let v = row[j] - phi[i];
                if v < psi[j] {
                    psi[j] = v;
                }
            }
        }
        psi
    } else {
        psi_seed.to_vec()
    };
    let w = recover_weights(&psi, b, eps)?;
    let (plan, inner) = solve_exact_ot(a, &w, cost)?;
    let primal = plan.value() + eps * kl_divergence(&w, b);
    let dual = dual_objective(a, b, cost, eps, &phi, &psi)?;
    Ok(Candidate {
        phi,
        psi,
        w,
        plan,
        inner_psi: inner.psi,
        primal,
        dual,
        gap: primal - dual,
    })
}

/// Log-domain scaling state, resumable across smoothing stages. `f` and `g`
/// are the row and column potentials of the eta-smoothed problem; columns
/// without mass sit at `-inf`.
struct ScalingState {
    f: Vec<f64>,
    g: Vec<f64>,
    log_a: Vec<f64>,
    log_b: Vec<f64>,
    ct: Vec<f64>, // column-major cost copy for the g-pass
    iterations: usize,
}

impl ScalingState {
    fn new(a: &[f64], b: &[f64], cost: &CostMatrix, warm_psi: Option<&[f64]>) -> Self {
        let g = (0..b.len())
            .map(|j| {
                if b[j] > 0.0 {
                    warm_psi.map(|p| p[j]).unwrap_or(0.0)
                } else {
                    f64::NEG_INFINITY
                }
            })
            .collect();
        Self {
            f: vec![0.0; a.len()],
            g,
            log_a: a
                .iter()
                .map(|&x| if x > 0.0 { x.ln() } else { f64::NEG_INFINITY })
                .collect(),
            log_b: b
                .iter()
                .map(|&x| if x > 0.0 { x.ln() } else { f64::NEG_INFINITY })
                .collect(),
            ct: cost.transposed_entries(),
            iterations: 0,
        }
    }

    /// Run scaling iterations at fixed smoothing `eta` until the L1 row
    /// marginal violation falls below `tol` or `max_iter` is exhausted.
    ///
    /// Row update: `f_i = eta (ln a_i - LSE_j (g_j - C_ij)/eta)` (exact row
    /// marginals); column update: `g_j = eps/(eps+eta) * eta (ln b_j -
    /// LSE_i (f_i - C_ij)/eta)` (KL-damped column marginals).
    fn run_stage(
        &mut self,
        a: &[f64],
        b: &[f64],
        cost: &CostMatrix,
        eps: f64,
        eta: f64,
        max_iter: usize,
        tol: f64,
    ) {
        let n = a.len();
        let m = b.len();
        let inv_eta = 1.0 / eta;
        let damp = eps / (eps + eta);
        let mut s = vec![0.0; n];
        let mut buf = vec![0.0; n.max(m)];
        // exp(x) below this is lost against a sum whose largest term is 1
        const UNDERFLOW: f64 = -37.0;
        for iter in 0..max_iter.max(1) {
            let mut violation = 0.0;
            for i in 0..n {
                let row = cost.row(i);
                let mut hi = f64::NEG_INFINITY;
                for j in 0..m {
                    let x = (self.g[j] - row[j]) * inv_eta;
                    buf[j] = x;
                    if x > hi {
                        hi = x;
                    }
                }
                let mut acc = 0.0;
                for &x in &buf[..m] {
                    let d = x - hi;
                    if d > UNDERFLOW {
                        acc += d.exp();
                    }
                }
                let lse = hi + acc.ln();
                if iter > 0 {
                    violation += ((self.f[i] * inv_eta + lse).exp() - a[i]).abs();
                }
                s[i] = lse;
            }
            if iter > 0 && violation <= tol {
                break;
            }
            self.iterations += 1;
            for i in 0..n {
                self.f[i] = eta * (self.log_a[i] - s[i]);
            }
            for j in 0..m {
                if b[j] <= 0.0 {
                    continue;
                }
                let col = &self.ct[j * n..(j + 1) * n];
                let mut hi = f64::NEG_INFINITY;
                for i in 0..n {
                    let x = (self.f[i] - col[i]) * inv_eta;
                    buf[i] = x;
                    if x > hi {
                        hi = x;
                    }
                }
                let mut acc = 0.0;
                for &x in &buf[..n] {
                    let d = x - hi;
                    if d > UNDERFLOW {
                        acc += d.exp();
                    }
                }
                self.g[j] = damp * eta * (self.log_b[j] - hi - acc.ln());
            }
        }
    }
}

/// Positive smoothing scale for a cost matrix: the median entry, falling back
/// to half the maximum when the median is zero.
fn smoothing_scale(cost: &CostMatrix) -> f64 {
    let median = cost.median();
    if median > 0.0 {
        median
    } else {
        cost.max_entry() / 2.0
    }
}

/// Solve the proximal divergence. See the module docs for the three phases.
pub fn solve_proximal(
    a: &[f64],
    b: &[f64],
    cost: &CostMatrix,
    eps: f64,
    cfg: &SolverConfig,
) -> Result<ProximalSolution> {
    solve_proximal_impl(a, b, cost, eps, cfg, None)
}

/// [`solve_proximal`] seeded with a previous dual potential; the particle flow
/// uses this to warm-start consecutive steps.
pub fn solve_proximal_warm(
    a: &[f64],
    b: &[f64],
    cost: &CostMatrix,
    eps: f64,
    cfg: &SolverConfig,
    warm_psi: &[f64],
) -> Result<ProximalSolution> {
    if warm_psi.len() != b.len() {
        return Err(Error::DimensionMismatch { expected: b.len(), got: warm_psi.len() });
    }
    solve_proximal_impl(a, b, cost, eps, cfg, Some(warm_psi))
}

fn solve_proximal_impl(
    a: &[f64],
    b: &[f64],
    cost: &CostMatrix,
    eps: f64,
    cfg: &SolverConfig,
    warm_psi: Option<&[f64]>,
) -> Result<ProximalSolution> {
    check_shape(a, b, cost)?;
    validate_epsilon(eps)?;
    cfg.validate()?;
    let a = validate_weights("weight", a)?;
    let b = validate_weights("weight", b)?;
    if b.iter().all(|&x| x <= 0.0) {
        return Err(Error::ZeroMass);
    }

    let scale = smoothing_scale(cost);
    let mut state = ScalingState::new(&a, &b, cost, warm_psi);
    let mut eta = 0.0;
    if scale > 0.0 {
        let eta_end = cfg.eta_end.unwrap_or(1e-3 * scale);
        let eta_start = cfg.eta_start.unwrap_or(scale).max(eta_end);
        if warm_psi.is_some() {
            // a warm potential is already near-optimal: one short seeding
            // stage suffices, the polish phase closes the rest exactly
            eta = eta_end;
            state.run_stage(
                &a,
                &b,
                cost,
                eps,
                eta,
                cfg.max_iterations.min(150),
                cfg.convergence_tol,
            );
        } else {
            eta = eta_start;
            loop {
                // intermediate stages only need accuracy at the scale of their
                // own smoothing bias; the final stage gets the configured
                // tolerance
                let stage_tol = if eta > eta_end {
                    cfg.convergence_tol * (eta / eta_end)
                } else {
                    cfg.convergence_tol
                };
                state.run_stage(&a, &b, cost, eps, eta, cfg.max_iterations, stage_tol);
                if eta <= eta_end {
                    break;
                }
                eta = (eta * cfg.anneal_factor).max(eta_end);
            }
        }
    }

    let debug = std::env::var_os("PROXOT_DEBUG").is_some();
    if debug {
        eprintln!("scaling: {} iterations", state.iterations);
    }

    // Seed certificates: the scaled potential, and the zero potential (which
    // certifies w = b instantly when P = Q on shared support).
    let from_scaling = certify(&a, &b, cost, eps, &state.g, true)?;
    let from_zero = certify(&a, &b, cost, eps, &vec![0.0; b.len()], true)?;
    let mut rounds = 2usize;
    let mut best = if from_zero.gap < from_scaling.gap {
        from_zero
    } else {
        from_scaling
    };

    if cfg.polish {
        let rel_gap_tol = cfg.gap_tol.unwrap_or(1e-9);
        let gap_done = |c: &Candidate| c.gap <= rel_gap_tol * (1.0 + c.primal.abs());

        if debug {
            eprintln!("seed certificates: best gap {:.3e}", best.gap);
        }

        // One alternation pass: exact-transport duals feed the Gibbs form,
        // which lands on the optimum whenever the inner basis is stable.
        if !gap_done(&best) {
            let seed = best.inner_psi.clone();
            let cand = certify(&a, &b, cost, eps, &seed, true)?;
            rounds += 1;
            if cand.gap < best.gap {
                best = cand;
            }
        }

        // Component rebalancing: snap the additive constants of the potential
        // to the closed-form outer optimality values on the current support,
        // then iterate as the support itself updates.
        let mut stalls = 0usize;
        let mut current = best.clone();
        for _ in 0..16 {
            if gap_done(&best) {
                break;
            }
            // noise arcs in a near-optimal plan carry flow far below the real
            // ones, so scan a few support thresholds and keep the best snap
            let mut round_best: Option<Candidate> = None;
            for rel_thresh in [1e-2, 1e-5, 1e-9] {
                let Some(psi) = rebalance_components(&a, &b, cost, eps, &current, rel_thresh)
                else {
                    continue;
                };
                let cand = certify(&a, &b, cost, eps, &psi, false)?;
                rounds += 1;
                if debug {
                    eprintln!(
                        "  rebalance ({rel_thresh:.0e}): primal {:.12e} dual {:.12e} gap {:.3e}",
                        cand.primal, cand.dual, cand.gap
                    );
                }
                if round_best.as_ref().map(|c| cand.gap < c.gap).unwrap_or(true) {
                    round_best = Some(cand);
                }
            }
            let Some(cand) = round_best else {
                break;
            };
            if cand.gap < best.gap * 0.9 {
                stalls = 0;
            } else {
                stalls += 1;
            }
            if cand.gap < best.gap {
                best = cand.clone();
            }
            current = cand;
            // big single-component instances gain nothing from re-anchoring;
            // drop out as soon as it stops paying
            let patience = if a.len() * b.len() <= 20_000 { 2 } else { 1 };
            if stalls >= patience {
                break;
            }
        }

        // Deep annealing: keep shrinking the smoothing below eta_end with the
        // warm scaling state until the certificate is tight. Continuation is
        // what drives the c-transformed potential to the exact dual optimum.
        if debug {
            eprintln!("after alternation/rebalance: gap {:.3e}", best.gap);
        }
        if scale > 0.0 {
            let eta_floor = eta * 2f64.powi(-26);
            let stage_budget = cfg.max_iterations.min(80);
            let mut stalls = 0usize;
            while !gap_done(&best) && eta > eta_floor && stalls < 3 {
                eta *= cfg.anneal_factor;
                state.run_stage(&a, &b, cost, eps, eta, stage_budget, cfg.convergence_tol);
                let cand = certify(&a, &b, cost, eps, &state.g, true)?;
                rounds += 1;
                // require real progress: five percent of the incumbent gap
                if cand.gap < best.gap * 0.95 {
                    stalls = 0;
                } else {
                    stalls += 1;
                }
                if cand.gap < best.gap {
                    best = cand;
                }
            }
        }

        if debug {
            eprintln!("after deep annealing: gap {:.3e}, {} scaling iterations", best.gap, state.iterations);
        }
        // Bundle finisher: every inner-transport dual seen so far is a cut of
        // the outer dual; maximizing over their mixtures (restricted master)
        // and certifying the mixed potential converges to the exact optimum,
        // adding one new cut per round.
        let mut cuts: Vec<Cut> = Vec::new();
        let push_cut = |cuts: &mut Vec<Cut>, phi: &[f64], psi: &[f64]| {
            let alpha = a.iter().zip(phi).map(|(&ai, &pi)| ai * pi).sum::<f64>();
            if cuts.iter().all(|c| c.psi != psi) && cuts.len() < 48 {
                cuts.push(Cut { alpha, psi: psi.to_vec() });
            }
        };
        push_cut(&mut cuts, &best.phi, &best.psi);
        {
            let inner_phi = crate::discriminator::c_transform(&best.inner_psi, cost);
            push_cut(&mut cuts, &inner_phi, &best.inner_psi);
        }
        let polish_rounds = if a.len() * b.len() <= 20_000 { 24 } else { 10 };
        let mut stalls = 0usize;
        for _ in 0..polish_rounds {
            if gap_done(&best) {
                break;
            }
            let (psi_mix, master_value) = solve_master(&cuts, &b, eps);
            let mut cand = certify(&a, &b, cost, eps, &psi_mix, true)?;
            rounds += 1;
            if let Some(psi_rb) = rebalance_components(&a, &b, cost, eps, &cand, 1e-5) {
                let rb = certify(&a, &b, cost, eps, &psi_rb, false)?;
                rounds += 1;
                push_cut(&mut cuts, &rb.phi, &rb.psi);
                if rb.gap < cand.gap {
                    cand = rb;
                }
            }
            if debug {
                eprintln!(
                    "  bundle round: {} cuts, master {:.12e}, cand primal {:.12e} dual {:.12e} gap {:.3e}",
                    cuts.len(), master_value, cand.primal, cand.dual, cand.gap
                );
            }
            push_cut(&mut cuts, &cand.phi, &cand.psi);
            let inner_phi = crate::discriminator::c_transform(&cand.inner_psi, cost);
            push_cut(&mut cuts, &inner_phi, &cand.inner_psi);
            if cand.gap < best.gap * 0.9 {
                stalls = 0;
            } else {
                stalls += 1;
            }
            if cand.gap < best.gap {
                best = cand;
            }
            if stalls >= 4 {
                break;
            }
        }
    }

    if debug {
        eprintln!("final: gap {:.3e}, {} certificate rounds", best.gap, rounds);
    }
    let gap = best.gap;
    let primal = best.primal;
    let converged = gap <= CERT_REL_TOL * (1.0 + primal.abs());
    Ok(ProximalSolution {
        epsilon: eps,
        divergence: primal,
        weights_w: best.w,
        plan: best.plan,
        potentials: DualPotentials { phi: best.phi, psi: best.psi },
        primal_value: primal,
        dual_value: best.dual,
        gap,
        iterations: state.iterations + rounds,
        converged,
    })
}

/// Exhaustive oracle for the primal over the simplex, for `M <= 3`.
///
/// `M = 2` scans the full grid at resolution `1/grid_n` and then runs a
/// ternary refinement (the objective is convex in `w`). `M = 3` scans a
/// coarse full grid and refines by shrinking boxes around the incumbent until
/// the sampling resolution drops below `min(1e-7, 1/grid_n)`. Used as the
/// independent test oracle for [`solve_proximal`].
pub fn brute_force_proximal(
    a: &[f64],
    b: &[f64],
    cost: &CostMatrix,
    eps: f64,
    grid_n: usize,
) -> Result<(f64, Vec<f64>)> {
    check_shape(a, b, cost)?;
    validate_epsilon(eps)?;
    let m = b.len();
    if m > 3 {
        return Err(Error::SupportTooLarge { max: 3, got: m });
    }
    if grid_n < 2 {
        return Err(Error::InvalidParameter {
            name: "grid_n",
            value: grid_n as f64,
            requirement: "must be at least 2",
        });
    }
    let a = validate_weights("weight", a)?;
    let b = validate_weights("weight", b)?;

    let eval = |w: &[f64]| -> Result<f64> { primal_objective(&a, &b, cost, eps, w) };

    match m {
        1 => {
            let w = vec![1.0];
            let v = eval(&w)?;
            Ok((v, w))
        }
        2 => {
            let mut best = (f64::INFINITY, 0.0f64);
            for k in 0..=grid_n {
                let w1 = k as f64 / grid_n as f64;
                let v = eval(&[w1, 1.0 - w1])?;
                if v < best.0 {
                    best = (v, w1);
                }
            }
            // ternary refinement on the bracketing interval
            let h = 1.0 / grid_n as f64;
            let mut lo = (best.1 - h).max(0.0);
            let mut hi = (best.1 + h).min(1.0);
            for _ in 0..200 {
                let m1 = lo + (hi - lo) / 3.0;
                let m2 = hi - (hi - lo) / 3.0;
                let v1 = eval(&[m1, 1.0 - m1])?;
                let v2 = eval(&[m2, 1.0 - m2])?;
                if v1 <= v2 {
                    hi = m2;
                } else {
                    lo = m1;
                }
                if hi - lo < 1e-13 {
                    break;
                }
            }
            let w1 = 0.5 * (lo + hi);
            let v = eval(&[w1, 1.0 - w1])?;
            if v < best.0 {
                best = (v, w1);
            }
            Ok((best.0, vec![best.1, 1.0 - best.1]))
        }
        3 => {
            let clamp_w = |w1: f64, w2: f64| -> [f64; 3] {
                let w1 = w1.max(0.0);
                let w2 = w2.max(0.0);
                [w1, w2, (1.0 - w1 - w2).max(0.0)]
            };
            let coarse = grid_n.min(120);
            let mut best = (f64::INFINITY, 0.0f64, 0.0f64);
            for i in 0..=coarse {
                for j in 0..=(coarse - i) {
                    let w1 = i as f64 / coarse as f64;
                    let w2 = j as f64 / coarse as f64;
                    let v = eval(&clamp_w(w1, w2))?;
                    if v < best.0 {
                        best = (v, w1, w2);
                    }
                }
            }
            let target = (1.0 / grid_n as f64).min(1e-7);
            let mut half = 2.0 / coarse as f64;
            let pts = 24usize;
            while 2.0 * half / pts as f64 > target {
                let (c1, c2) = (best.1, best.2);
                for i in 0..=pts {
                    for j in 0..=pts {
                        let w1 = c1 - half + 2.0 * half * i as f64 / pts as f64;
                        let w2 = c2 - half + 2.0 * half * j as f64 / pts as f64;
                        if w1 < -1e-12 || w2 < -1e-12 || w1 + w2 > 1.0 + 1e-12 {
                            continue;
                        }
                        let v = eval(&clamp_w(w1, w2))?;
                        if v < best.0 {
                            best = (v, w1.max(0.0), w2.max(0.0));
                        }
                    }
                }
                half *= 0.35;
            }
            let w = clamp_w(best.1, best.2);
            Ok((best.0, w.to_vec()))
        }
        _ => unreachable!(),
    }
}

/// Solve the divergence for every `eps` in an ascending positive list.
/// Independent solves, evaluated in parallel.
pub fn divergence_curve(
    a: &[f64],
    b: &[f64],
    cost: &CostMatrix,
    eps_list: &[f64],
    cfg: &SolverConfig,
) -> Result<Vec<(f64, ProximalSolution)>> {
    if eps_list.is_empty() {
        return Err(Error::InvalidParameter {
            name: "eps_list",
            value: 0.0,
            requirement: "must be nonempty",
        });
    }
    for pair in eps_list.windows(2) {
        if pair[1] <= pair[0] {
            return Err(Error::InvalidParameter {
                name: "eps_list",
                value: pair[1],
                requirement: "must be strictly ascending",
            });
        }
    }
    eps_list
        .par_iter()
        .map(|&eps| solve_proximal(a, b, cost, eps, cfg).map(|s| (eps, s)))
        .collect()
}
