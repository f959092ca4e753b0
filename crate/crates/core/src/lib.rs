//! # proxot
//!
//! Proximal optimal transport divergences between discrete probability
//! measures.
//!
//! The central quantity is the infimal convolution of an optimal transport
//! cost with a scaled Kullback-Leibler divergence,
//!
//! ```text
//! D_eps(P || Q) = inf_R { T_c(P, R) + eps * KL(R || Q) }
//! ```
//!
//! which interpolates between the transport cost (large `eps`) and `eps` times
//! the KL divergence (small `eps`), and stays finite even when `P` and `Q`
//! have disjoint supports. The minimizing intermediate measure `R*` is
//! absolutely continuous with respect to `Q` and acts as a proximal of `P`.
//!
//! What the crate provides:
//!
//! - [`measures`]: discrete measures, cost matrices, isometries, CSV loading.
//! - [`exact_ot`]: exact transport plans and Kantorovich potentials via a
//!   network simplex (the inner `T_c` solver).
//! - [`prox`]: the divergence solver itself. Primal and dual evaluations, a
//!   semi-relaxed log-domain scaling stage with geometric smoothing annealing,
//!   and a certificate stage that brackets the value between a feasible primal
//!   and a feasible dual bound (the reported gap).
//! - [`gaussian`]: closed forms for univariate and diagonal Gaussians, the
//!   analytic oracle for the discrete solver.
//! - [`discriminator`]: c-transforms and the dual potential extended to all of
//!   space, with the envelope gradient used by the particle flow.
//! - [`flow`]: the deterministic particle algorithm that transports source
//!   samples toward target samples along the discriminator gradient.
//! - [`fixtures`]: seed-frozen instance generators shared by tests and the
//!   benchmark harness.
//!
//! Scalar precision is `f64` throughout; solvers run in the log domain where
//! exponentials would otherwise under- or overflow. All public types are
//! immutable after construction and safe to read from multiple threads.

#![forbid(unsafe_code)]

pub mod discriminator;
pub mod error;
pub mod exact_ot;
pub mod fixtures;
pub mod flow;
pub mod gaussian;
pub mod measures;
pub mod prox;
pub mod rng;

pub use error::{Error, Result};
pub use exact_ot::{solve_exact_ot, wasserstein_p, DualPotentials, TransportPlan};
pub use measures::{
    build_cost, product_measure, pushforward, CostMatrix, CostSpec, DiscreteMeasure, IsometryMap,
};
pub use prox::{
    brute_force_proximal, divergence_curve, dual_objective, kl_divergence, primal_objective,
    recover_weights, solve_proximal, ProximalSolution, SolverConfig,
};
