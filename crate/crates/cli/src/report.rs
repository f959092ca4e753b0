//! Machine-readable run reports and small output helpers.

use proxot::prox::{ProximalSolution, SolverConfig};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

/// Version tag written into every report; bump on breaking field changes.
pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct SolverConfigEcho {
    pub eta_start: Option<f64>,
    pub eta_end: Option<f64>,
    pub anneal_factor: f64,
    pub max_iterations: usize,
    pub convergence_tol: f64,
    pub polish: bool,
    pub gap_tol: Option<f64>,
}

impl From<&SolverConfig> for SolverConfigEcho {
    fn from(cfg: &SolverConfig) -> Self {
        Self {
            eta_start: cfg.eta_start,
            eta_end: cfg.eta_end,
            anneal_factor: cfg.anneal_factor,
            max_iterations: cfg.max_iterations,
            convergence_tol: cfg.convergence_tol,
            polish: cfg.polish,
            gap_tol: cfg.gap_tol,
        }
    }
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct Potentials {
    pub phi: Vec<f64>,
    pub psi: Vec<f64>,
}

/// Full record of one `divergence` run. Serialized as JSON with shortest
/// round-trip float formatting, so values survive a parse-print cycle exactly.
#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct RunReport {
    pub schema_version: u32,
    /// The invoked command line, echoed for provenance.
    pub command: String,
    /// FNV-1a 64-bit digests of every input file, keyed by path.
    pub input_digests: BTreeMap<String, String>,
    pub epsilon: f64,
    pub cost_p: f64,
    pub divergence: f64,
    pub primal_value: f64,
    pub dual_value: f64,
    pub gap: f64,
    pub iterations: usize,
    pub converged: bool,
    pub weights_w: Vec<f64>,
    pub potentials: Potentials,
    pub timing_ms: f64,
    pub solver_config: SolverConfigEcho,
}

impl RunReport {
    pub fn new(
        command: String,
        input_digests: BTreeMap<String, String>,
        epsilon: f64,
        cost_p: f64,
        solution: &ProximalSolution,
        timing_ms: f64,
        solver: &SolverConfig,
    ) -> Self {
        Self {
            schema_version: REPORT_SCHEMA_VERSION,
            command,
            input_digests,
            epsilon,
            cost_p,
            divergence: solution.divergence,
            primal_value: solution.primal_value,
            dual_value: solution.dual_value,
            gap: solution.gap,
            iterations: solution.iterations,
            converged: solution.converged,
            weights_w: solution.weights_w.clone(),
            potentials: Potentials {
                phi: solution.potentials.phi.clone(),
                psi: solution.potentials.psi.clone(),
            },
            timing_ms,
            solver_config: SolverConfigEcho::from(solver),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }
}

/// FNV-1a 64-bit digest, hex encoded. Cheap input fingerprinting for report
/// provenance, not a cryptographic hash.
pub fn fnv1a_digest(bytes: &[u8]) -> String {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{hash:016x}")
}

pub fn digest_file(path: &Path) -> std::io::Result<String> {
    Ok(fnv1a_digest(&std::fs::read(path)?))
}

/// Render one CSV row of floats with shortest round-trip formatting.
pub fn csv_row(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}
