//! Deterministic particle flow toward a target sample.
//!
//! Each step treats the current particles as a uniform empirical measure,
//! solves the proximal divergence against the target measure to get the dual
//! potential on the target support, extends it to a [`Discriminator`], and
//! moves every particle one Euler step down its gradient:
//!
//! ```text
//! Y <- Y - dt * grad phi_hat(Y)
//! ```
//!
//! Steps are strictly sequential; the particle updates inside one step are
//! independent and run in parallel. The recorded divergence of each step is
//! the certified primal value from the solver, so the series is an honest
//! upper-bound trace.

use crate::discriminator::Discriminator;
use crate::error::{Error, Result};
use crate::measures::{build_cost, CostSpec, DiscreteMeasure};
use crate::prox::{solve_proximal_warm, ProximalSolution, SolverConfig};
use rayon::prelude::*;

/// Parameters of a flow run.
#[derive(Debug, Clone)]
pub struct FlowConfig {
    pub epsilon: f64,
    pub step_dt: f64,
    pub num_steps: usize,
    /// Power-distance exponent; must exceed 1 for the gradient to exist.
    pub cost_p: f64,
    /// Ensemble snapshots are kept every this many steps.
    pub snapshot_every: usize,
    /// Seed label echoed into outputs; the dynamics themselves are
    /// deterministic.
    pub seed: u64,
    pub solver: SolverConfig,
}

impl FlowConfig {
    pub fn new(epsilon: f64, step_dt: f64, num_steps: usize, cost_p: f64, seed: u64) -> Result<Self> {
        // per-step solves only need their certificates a couple of orders
        // below the recorded-series tolerances, not at rounding level
        let mut solver = SolverConfig::default();
        solver.gap_tol = Some(1e-5);
        let cfg = Self {
            epsilon,
            step_dt,
            num_steps,
            cost_p,
            snapshot_every: 10,
            seed,
            solver,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(Error::InvalidParameter {
                name: "epsilon",
                value: self.epsilon,
                requirement: "must be positive and finite",
            });
        }
        if !(self.step_dt > 0.0 && self.step_dt <= 1.0) {
            return Err(Error::InvalidParameter {
                name: "step_dt",
                value: self.step_dt,
                requirement: "must lie in (0, 1]",
            });
        }
        if !(self.cost_p > 1.0) || !self.cost_p.is_finite() {
            return Err(Error::InvalidParameter {
                name: "cost_p",
                value: self.cost_p,
                requirement: "gradient flow needs p > 1",
            });
        }
        if self.snapshot_every == 0 {
            return Err(Error::InvalidParameter {
                name: "snapshot_every",
                value: 0.0,
                requirement: "must be at least 1",
            });
        }
        Ok(())
    }
}

/// Per-step record: certified divergence and gap of the pre-move ensemble,
/// plus an owned snapshot of that ensemble on snapshot steps.
#[derive(Debug, Clone)]
pub struct FlowRecord {
    pub step: usize,
    pub divergence: f64,
    pub gap: f64,
    pub snapshot: Option<Vec<Vec<f64>>>,
}

/// Evolving ensemble state. `history[k]` describes the ensemble before step
/// `k`; `particles` holds the current (post-step) positions.
#[derive(Debug, Clone)]
pub struct FlowState {
    pub particles: Vec<Vec<f64>>,
    pub step_index: usize,
    pub last_solution: Option<ProximalSolution>,
    pub history: Vec<FlowRecord>,
    /// Steps whose certified divergence rose above the previous step's value.
    pub increase_warnings: Vec<usize>,
}

impl FlowState {
    /// Initial state: the source support becomes the particle ensemble
    /// (weights are ignored; the scheme is uniform by construction).
    pub fn from_source(source: &DiscreteMeasure) -> Self {
        Self {
            particles: source.points().to_vec(),
            step_index: 0,
            last_solution: None,
            history: Vec::new(),
            increase_warnings: Vec::new(),
        }
    }
}

/// Advance one Euler step. On solver non-convergence the step is aborted and
/// the error returned; the caller's state is untouched.
pub fn flow_step(
    state: &FlowState,
    targets: &DiscreteMeasure,
    cfg: &FlowConfig,
) -> Result<FlowState> {
    cfg.validate()?;
    let dim = state
        .particles
        .first()
        .map(|p| p.len())
        .ok_or(Error::EmptyMeasure)?;
    if targets.dim() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: targets.dim() });
    }

    let ensemble = DiscreteMeasure::uniform(state.particles.clone())?;
    let spec = CostSpec::power(cfg.cost_p)?;
    let cost = build_cost(&ensemble, targets, &spec)?;
    let warm: Vec<f64> = state
        .last_solution
        .as_ref()
        .map(|s| s.potentials.psi.clone())
        .unwrap_or_else(|| vec![0.0; targets.len()]);
    let solution = solve_proximal_warm(
        ensemble.weights(),
        targets.weights(),
        &cost,
        cfg.epsilon,
        &cfg.solver,
        &warm,
    )?;
    if !solution.converged {
        return Err(Error::NotConverged { gap: solution.gap, iterations: solution.iterations });
    }

    let discriminator = Discriminator::new(
        targets.points().to_vec(),
        solution.potentials.psi.clone(),
        spec,
    )?;
    let moved: Result<Vec<Vec<f64>>> = state
        .particles
        .par_iter()
        .map(|y| {
            let g = discriminator.gradient(y)?;
            Ok(y.iter().zip(&g).map(|(yi, gi)| yi - cfg.step_dt * gi).collect())
        })
        .collect();
    let moved = moved?;

    let step = state.step_index;
    let snapshot = if step % cfg.snapshot_every == 0 {
        Some(state.particles.clone())
    } else {
        None
    };
    let mut history = state.history.clone();
    history.push(FlowRecord {
        step,
        divergence: solution.divergence,
        gap: solution.gap,
        snapshot,
    });
    let mut increase_warnings = state.increase_warnings.clone();
    if let Some(prev) = state.last_solution.as_ref() {
        if solution.divergence > prev.divergence {
            increase_warnings.push(step);
        }
    }

    Ok(FlowState {
        particles: moved,
        step_index: step + 1,
        last_solution: Some(solution),
        history,
        increase_warnings,
    })
}

/// Run `num_steps` Euler steps from the source ensemble.
pub fn run_flow(
    source: &DiscreteMeasure,
    targets: &DiscreteMeasure,
    cfg: &FlowConfig,
) -> Result<FlowState> {
    cfg.validate()?;
    if source.dim() != targets.dim() {
        return Err(Error::DimensionMismatch { expected: source.dim(), got: targets.dim() });
    }
    let mut state = FlowState::from_source(source);
    for _ in 0..cfg.num_steps {
        state = flow_step(&state, targets, cfg)?;
    }
    Ok(state)
}

/// Energy distance `2 E|a - b| - E|a - a'| - E|b - b'|` under the measure
/// weights. Nonnegative, and zero exactly when the distributions coincide.
pub fn energy_distance(a: &DiscreteMeasure, b: &DiscreteMeasure) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), got: b.dim() });
    }
    let dist = |x: &[f64], y: &[f64]| -> f64 {
        x.iter()
            .zip(y)
            .map(|(u, v)| (u - v) * (u - v))
            .sum::<f64>()
            .sqrt()
    };
    let cross: f64 = a
        .points()
        .iter()
        .zip(a.weights())
        .map(|(x, &wx)| {
            b.points()
                .iter()
                .zip(b.weights())
                .map(|(y, &wy)| wx * wy * dist(x, y))
                .sum::<f64>()
        })
        .sum();
    let within = |m: &DiscreteMeasure| -> f64 {
        m.points()
            .iter()
            .zip(m.weights())
            .map(|(x, &wx)| {
                m.points()
                    .iter()
                    .zip(m.weights())
                    .map(|(y, &wy)| wx * wy * dist(x, y))
                    .sum::<f64>()
            })
            .sum()
    };
    Ok(2.0 * cross - within(a) - within(b))
}
