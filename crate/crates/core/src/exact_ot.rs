//! Exact discrete optimal transport on the bipartite transportation graph.
//!
//! [`solve_exact_ot`] runs a network simplex over the spanning-tree bases of
//! the transportation polytope and returns both the optimal plan and a pair of
//! feasible Kantorovich potentials with zero duality gap. Entering arcs are
//! chosen by block search over reduced costs; long runs of degenerate pivots
//! trigger a Bland-style least-index rule so the solver cannot cycle and runs
//! are reproducible. Potentials are gauged so the last column potential is 0.

use crate::error::{Error, Result};
use crate::measures::{build_cost, CostMatrix, CostSpec, DiscreteMeasure};

/// Optimal coupling between two weight vectors: an N x M nonnegative matrix
/// whose row sums are `a` and column sums are `b`, plus its transport cost.
#[derive(Debug, Clone)]
pub struct TransportPlan {
    n_rows: usize,
    n_cols: usize,
    entries: Vec<f64>,
    value: f64,
}

impl TransportPlan {
    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n_cols + j]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// Total transport cost `sum_ij C_ij pi_ij`.
    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n_rows)
            .map(|i| self.entries[i * self.n_cols..(i + 1) * self.n_cols].iter().sum())
            .collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.n_cols];
        for i in 0..self.n_rows {
            for j in 0..self.n_cols {
                sums[j] += self.entries[i * self.n_cols + j];
            }
        }
        sums
    }
}

/// Kantorovich potentials `phi` (rows) and `psi` (columns) feasible for
/// `phi_i + psi_j <= C_ij`, gauged so `psi` ends at zero.
#[derive(Debug, Clone)]
pub struct DualPotentials {
    pub phi: Vec<f64>,
    pub psi: Vec<f64>,
}

impl DualPotentials {
    /// Dual objective `sum_i a_i phi_i + sum_j b_j psi_j`.
    pub fn objective(&self, a: &[f64], b: &[f64]) -> f64 {
        let pa: f64 = self.phi.iter().zip(a).map(|(p, w)| p * w).sum();
        let pb: f64 = self.psi.iter().zip(b).map(|(p, w)| p * w).sum();
        pa + pb
    }
}

const FLOW_EPS: f64 = 1e-15;

/// Solve `min <C, pi>` over couplings of `a` and `b`.
///
/// `a` and `b` must be nonnegative with equal totals (within `1e-9`); zero
/// weights are allowed. Returns the optimal plan and tight dual potentials.
pub fn solve_exact_ot(
    a: &[f64],
    b: &[f64],
    cost: &CostMatrix,
) -> Result<(TransportPlan, DualPotentials)> {
    let n = a.len();
    let m = b.len();
    if n == 0 || m == 0 {
        return Err(Error::EmptyMeasure);
    }
    if cost.n_rows() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: cost.n_rows(),
        });
    }
    if cost.n_cols() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: cost.n_cols(),
        });
    }
    for (i, &w) in a.iter().enumerate() {
        if !w.is_finite() {
            return Err(Error::NonFinite { what: "weight", index: i });
        }
        if w < -1e-12 {
            return Err(Error::Negative { what: "weight", index: i, value: w });
        }
    }
    for (j, &w) in b.iter().enumerate() {
        if !w.is_finite() {
            return Err(Error::NonFinite { what: "weight", index: j });
        }
        if w < -1e-12 {
            return Err(Error::Negative { what: "weight", index: j, value: w });
        }
    }
    let sum_a: f64 = a.iter().sum();
    let sum_b: f64 = b.iter().sum();
    if (sum_a - sum_b).abs() > 1e-9 * sum_a.abs().max(1.0) {
        return Err(Error::UnbalancedMarginals { left: sum_a, right: sum_b });
    }
    if sum_a <= 0.0 {
        return Err(Error::ZeroMass);
    }

    // Rescale b so the totals match exactly; removes systematic drift in the
    // final marginals.
    let scale = sum_a / sum_b;
    let a: Vec<f64> = a.iter().map(|&w| w.max(0.0)).collect();
    let b: Vec<f64> = b.iter().map(|&w| (w * scale).max(0.0)).collect();

    let mut simplex = Simplex::new(&a, &b, cost);
    simplex.run()?;
    Ok(simplex.into_solution(cost))
}

/// `W_p(P, Q)`: optimal cost for `c = |x - y|^p`, raised to `1/p`.
pub fn wasserstein_p(p_measure: &DiscreteMeasure, q_measure: &DiscreteMeasure, p: f64) -> Result<f64> {
    let spec = CostSpec::power(p)?;
    let cost = build_cost(p_measure, q_measure, &spec)?;
    let (plan, _) = solve_exact_ot(p_measure.weights(), q_measure.weights(), &cost)?;
    Ok(plan.value().max(0.0).powf(1.0 / p))
}

/// Transportation simplex over the N + M node bipartite graph.
/// Nodes 0..n are rows, n..n+m are columns; basic arcs are matrix cells.
struct Simplex<'a> {
    n: usize,
    m: usize,
    cost: &'a CostMatrix,
    arc_row: Vec<usize>,
    arc_col: Vec<usize>,
    arc_flow: Vec<f64>,
    adj: Vec<Vec<usize>>,       // node -> incident basic arc ids
    cell_arc: Vec<usize>,       // cell -> arc id, or usize::MAX
    phi: Vec<f64>,
    psi: Vec<f64>,
    cursor: usize,              // rolling start for block search
    opt_tol: f64,
}

impl<'a> Simplex<'a> {
    fn new(a: &'a [f64], b: &'a [f64], cost: &'a CostMatrix) -> Self {
        let n = a.len();
        let m = b.len();
        let mut s = Simplex {
            n,
            m,
            cost,
            arc_row: Vec::with_capacity(n + m),
            arc_col: Vec::with_capacity(n + m),
            arc_flow: Vec::with_capacity(n + m),
            adj: vec![Vec::new(); n + m],
            cell_arc: vec![usize::MAX; n * m],
            phi: vec![0.0; n],
            psi: vec![0.0; m],
            cursor: 0,
            opt_tol: 1e-11 * (1.0 + cost.max_entry()),
        };
        s.northwest_corner(a, b);
        s
    }

    /// Deterministic initial basis: north-west corner rule. Produces exactly
    /// n + m - 1 basic cells, degenerate zeros included.
    fn northwest_corner(&mut self, a: &[f64], b: &[f64]) {
        let mut ra = a.to_vec();
        let mut rb = b.to_vec();
        let (mut i, mut j) = (0, 0);
        loop {
            let t = ra[i].min(rb[j]);
            self.add_arc(i, j, t);
            ra[i] -= t;
            rb[j] -= t;
            if i == self.n - 1 && j == self.m - 1 {
                break;
            }
            if (ra[i] <= rb[j] && i < self.n - 1) || j == self.m - 1 {
                i += 1;
            } else {
                j += 1;
            }
        }
        debug_assert_eq!(self.arc_row.len(), self.n + self.m - 1);
    }

    fn add_arc(&mut self, i: usize, j: usize, flow: f64) -> usize {
        let id = self.arc_row.len();
        self.arc_row.push(i);
        self.arc_col.push(j);
        self.arc_flow.push(flow);
        self.adj[i].push(id);
        self.adj[self.n + j].push(id);
        self.cell_arc[i * self.m + j] = id;
        id
    }

    fn remove_arc(&mut self, id: usize) {
        let (i, j) = (self.arc_row[id], self.arc_col[id]);
        self.cell_arc[i * self.m + j] = usize::MAX;
        self.adj[i].retain(|&e| e != id);
        self.adj[self.n + j].retain(|&e| e != id);
        // Swap-remove; patch references to the moved arc.
        let last = self.arc_row.len() - 1;
        if id != last {
            let (li, lj) = (self.arc_row[last], self.arc_col[last]);
            self.arc_row[id] = li;
            self.arc_col[id] = lj;
            self.arc_flow[id] = self.arc_flow[last];
            self.cell_arc[li * self.m + lj] = id;
            for e in self.adj[li].iter_mut() {
                if *e == last {
                    *e = id;
                }
            }
            for e in self.adj[self.n + lj].iter_mut() {
                if *e == last {
                    *e = id;
                }
            }
        }
        self.arc_row.pop();
        self.arc_col.pop();
        self.arc_flow.pop();
    }

    /// Recompute potentials from the spanning tree: phi_i + psi_j = C_ij on
    /// every basic arc, rooted at row 0 with phi_0 = 0.
    fn compute_duals(&mut self) {
        let total = self.n + self.m;
        let mut visited = vec![false; total];
        let mut stack = Vec::with_capacity(total);
        visited[0] = true;
        self.phi[0] = 0.0;
        stack.push(0usize);
        while let Some(node) = stack.pop() {
            for &arc in &self.adj[node] {
                let (i, j) = (self.arc_row[arc], self.arc_col[arc]);
                let other = if node == i { self.n + j } else { i };
                if visited[other] {
                    continue;
                }
                visited[other] = true;
                if other >= self.n {
                    self.psi[other - self.n] = self.cost.get(i, j) - self.phi[i];
                } else {
                    self.phi[other] = self.cost.get(i, j) - self.psi[j];
                }
                stack.push(other);
            }
        }
        debug_assert!(visited.iter().all(|&v| v));
    }

    /// Block search for the entering cell. In Bland mode, take the first
    /// negative reduced cost in flat scan order instead.
    fn find_entering(&mut self, bland: bool) -> Option<(usize, usize)> {
        let total = self.n * self.m;
        if bland {
            for cell in 0..total {
                let (i, j) = (cell / self.m, cell % self.m);
                if self.cell_arc[cell] != usize::MAX {
                    continue;
                }
                let rc = self.cost.entries()[cell] - self.phi[i] - self.psi[j];
                if rc < -self.opt_tol {
                    return Some((i, j));
                }
            }
            return None;
        }
        let block = ((total as f64).sqrt() as usize).max(16);
        let mut scanned = 0;
        let mut best: Option<(usize, f64)> = None;
        let mut k = self.cursor;
        while scanned < total {
            let end = (scanned + block).min(total);
            while scanned < end {
                let cell = k;
                let (i, j) = (cell / self.m, cell % self.m);
                if self.cell_arc[cell] == usize::MAX {
                    let rc = self.cost.entries()[cell] - self.phi[i] - self.psi[j];
                    if rc < -self.opt_tol && best.map(|(_, b)| rc < b).unwrap_or(true) {
                        best = Some((cell, rc));
                    }
                }
                k += 1;
                if k == total {
                    k = 0;
                }
                scanned += 1;
            }
            if let Some((cell, _)) = best {
                self.cursor = (cell + 1) % total;
                return Some((cell / self.m, cell % self.m));
            }
        }
        None
    }

    /// Tree path from column node `j` back to row node `i`, as arc ids.
    fn cycle_path(&self, i: usize, j: usize) -> Vec<usize> {
        let total = self.n + self.m;
        let start = self.n + j;
        let target = i;
        let mut parent_arc = vec![usize::MAX; total];
        let mut parent_node = vec![usize::MAX; total];
        let mut visited = vec![false; total];
        let mut stack = vec![start];
        visited[start] = true;
        while let Some(node) = stack.pop() {
            if node == target {
                break;
            }
            for &arc in &self.adj[node] {
                let (ar, ac) = (self.arc_row[arc], self.arc_col[arc]);
                let other = if node == ar { self.n + ac } else { ar };
                if visited[other] {
                    continue;
                }
                visited[other] = true;
                parent_arc[other] = arc;
                parent_node[other] = node;
                stack.push(other);
            }
        }
        debug_assert!(visited[target], "basis must span the bipartite graph");
        let mut path = Vec::new();
        let mut node = target;
        while node != start {
            path.push(parent_arc[node]);
            node = parent_node[node];
        }
        path.reverse(); // now ordered from `start` (column j) toward row i
        path
    }

    fn run(&mut self) -> Result<()> {
        let max_pivots = 50_000 + 50 * (self.n + self.m);
        let mut bland = false;
        let mut degenerate_streak = 0usize;
        for _ in 0..max_pivots {
            self.compute_duals();
            let Some((ei, ej)) = self.find_entering(bland) else {
                return Ok(());
            };
            // Alternating signs along the cycle: the entering arc gains flow,
            // the first path arc (sharing column ej) loses, and so on.
            let path = self.cycle_path(ei, ej);
            let mut theta = f64::INFINITY;
            let mut leave_pos = usize::MAX;
            for (t, &arc) in path.iter().enumerate() {
                if t % 2 == 0 {
                    let flow = self.arc_flow[arc];
                    if flow < theta {
                        theta = flow;
                        leave_pos = t;
                    }
                }
            }
            debug_assert!(leave_pos != usize::MAX);
            let leaving = path[leave_pos];
            for (t, &arc) in path.iter().enumerate() {
                if t % 2 == 0 {
                    self.arc_flow[arc] -= theta;
                } else {
                    self.arc_flow[arc] += theta;
                }
            }
            self.remove_arc(leaving);
            self.add_arc(ei, ej, theta);

            if theta <= FLOW_EPS {
                degenerate_streak += 1;
                if degenerate_streak > self.n + self.m + 16 {
                    bland = true;
                }
            } else {
                degenerate_streak = 0;
                bland = false;
            }
        }
        Err(Error::Internal(format!(
            "network simplex exceeded {max_pivots} pivots"
        )))
    }

    fn into_solution(mut self, cost: &CostMatrix) -> (TransportPlan, DualPotentials) {
        self.compute_duals();
        // Gauge: last column potential pinned to zero.
        let shift = self.psi[self.m - 1];
        for p in self.psi.iter_mut() {
            *p -= shift;
        }
        for p in self.phi.iter_mut() {
            *p += shift;
        }
        let mut entries = vec![0.0; self.n * self.m];
        let mut value = 0.0;
        for id in 0..self.arc_row.len() {
            let (i, j) = (self.arc_row[id], self.arc_col[id]);
            let flow = self.arc_flow[id].max(0.0);
            entries[i * self.m + j] = flow;
            value += flow * cost.get(i, j);
        }
        (
            TransportPlan {
                n_rows: self.n,
                n_cols: self.m,
                entries,
                value,
            },
            DualPotentials {
                phi: self.phi,
                psi: self.psi,
            },
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::DiscreteMeasure;
    use crate::rng::SplitMix64;

    /// Independent oracle: enumerate every spanning-tree basis of the
    /// transportation polytope, solve the tree flows, and take the cheapest
    /// feasible vertex. Exponential, so only for tiny instances.
    fn vertex_enumeration_value(a: &[f64], b: &[f64], cost: &CostMatrix) -> f64 {
        let n = a.len();
        let m = b.len();
        let cells = n * m;
        let basis_size = n + m - 1;
        let mut best = f64::INFINITY;
        let mut subset: Vec<usize> = (0..basis_size).collect();
        loop {
            if let Some(value) = try_basis(&subset, a, b, cost) {
                if value < best {
                    best = value;
                }
            }
            // next combination in lexicographic order
            let mut idx = basis_size;
            loop {
                if idx == 0 {
                    return best;
                }
                idx -= 1;
                if subset[idx] != cells - basis_size + idx {
                    subset[idx] += 1;
                    for k in idx + 1..basis_size {
                        subset[k] = subset[k - 1] + 1;
                    }
                    break;
                }
            }
        }
    }

    /// Solve the flows on a candidate basis by leaf elimination. Returns the
    /// cost when the basis is a spanning tree with nonnegative flows.
    fn try_basis(subset: &[usize], a: &[f64], b: &[f64], cost: &CostMatrix) -> Option<f64> {
        let n = a.len();
        let m = b.len();
        let mut supply: Vec<f64> = a.iter().map(|&x| x).collect();
        supply.extend(b.iter().map(|&x| -x));
        let mut deg = vec![0usize; n + m];
        let mut arcs: Vec<(usize, usize)> = Vec::with_capacity(subset.len());
        for &cell in subset {
            let (i, j) = (cell / m, cell % m);
            arcs.push((i, n + j));
            deg[i] += 1;
            deg[n + j] += 1;
        }
        let mut alive = vec![true; arcs.len()];
        let mut flows = vec![0.0; arcs.len()];
        let mut remaining = arcs.len();
        // peel leaves
        loop {
            if remaining == 0 {
                break;
            }
            let mut progressed = false;
            for (k, &(u, v)) in arcs.iter().enumerate() {
                if !alive[k] {
                    continue;
                }
                let (leaf, other) = if deg[u] == 1 {
                    (u, v)
                } else if deg[v] == 1 {
                    (v, u)
                } else {
                    continue;
                };
                // flow on the arc is the leaf's remaining balance, signed by side
                let f = if leaf < n { supply[leaf] } else { -supply[leaf] };
                flows[k] = f;
                supply[leaf] = 0.0;
                if other < n {
                    supply[other] -= f;
                } else {
                    supply[other] += f;
                }
                deg[leaf] -= 1;
                deg[other] -= 1;
                alive[k] = false;
                remaining -= 1;
                progressed = true;
            }
            if !progressed {
                return None; // cycle: not a tree
            }
        }
        if supply.iter().any(|&s| s.abs() > 1e-9) {
            return None; // disconnected
        }
        if flows.iter().any(|&f| f < -1e-12) {
            return None; // infeasible vertex
        }
        let mut value = 0.0;
        for (k, &(u, v)) in arcs.iter().enumerate() {
            value += flows[k].max(0.0) * cost.get(u, v - n);
        }
        Some(value)
    }

    fn check_solution(a: &[f64], b: &[f64], cost: &CostMatrix) -> (TransportPlan, DualPotentials) {
        let (plan, duals) = solve_exact_ot(a, b, cost).unwrap();
        for (rs, &ai) in plan.row_sums().iter().zip(a) {
            assert!((rs - ai).abs() <= 1e-9, "row sum {rs} vs {ai}");
        }
        for (cs, &bj) in plan.col_sums().iter().zip(b) {
            assert!((cs - bj).abs() <= 1e-9, "col sum {cs} vs {bj}");
        }
        let dual_value = duals.objective(a, b);
        let gap = (plan.value() - dual_value).abs();
        assert!(
            gap <= 1e-7 * (1.0 + plan.value().abs()),
            "strong duality violated: primal {} dual {}",
            plan.value(),
            dual_value
        );
        for i in 0..a.len() {
            for j in 0..b.len() {
                let slack = cost.get(i, j) - duals.phi[i] - duals.psi[j];
                assert!(slack >= -1e-9, "infeasible dual at ({i},{j}): {slack}");
                if plan.get(i, j) > 1e-12 {
                    assert!(slack.abs() <= 1e-7, "complementary slackness at ({i},{j})");
                }
            }
        }
        assert_eq!(duals.psi.last().map(|&x| x == 0.0), Some(true));
        (plan, duals)
    }

    fn random_instance(rng: &mut SplitMix64, n: usize, m: usize) -> (Vec<f64>, Vec<f64>, CostMatrix) {
        let simplex = |rng: &mut SplitMix64, k: usize| {
            let raw: Vec<f64> = (0..k).map(|_| -rng.next_f64_open().ln()).collect();
            let s: f64 = raw.iter().sum();
            raw.iter().map(|x| x / s).collect::<Vec<f64>>()
        };
        let a = simplex(rng, n);
        let b = simplex(rng, m);
        let rows = (0..n)
            .map(|_| (0..m).map(|_| rng.range(0.0, 10.0)).collect())
            .collect();
        (a, b, CostMatrix::from_rows(rows).unwrap())
    }

    #[test]
    fn identity_coupling_on_zero_diagonal() {
        let cost = CostMatrix::from_rows(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let a = [0.5, 0.5];
        let (plan, _) = check_solution(&a, &a, &cost);
        assert!(plan.value().abs() <= 1e-15);
        assert!((plan.get(0, 0) - 0.5).abs() <= 1e-12);
        assert!((plan.get(1, 1) - 0.5).abs() <= 1e-12);
    }

    #[test]
    fn single_source_splits() {
        let cost = CostMatrix::from_rows(vec![vec![0.0, 1.0]]).unwrap();
        let (plan, _) = check_solution(&[1.0], &[0.5, 0.5], &cost);
        assert!((plan.value() - 0.5).abs() <= 1e-12);
        assert!((plan.get(0, 0) - 0.5).abs() <= 1e-12);
        assert!((plan.get(0, 1) - 0.5).abs() <= 1e-12);
    }

    #[test]
    fn matches_vertex_enumeration_up_to_5x5() {
        let mut rng = SplitMix64::new(2024);
        for &(n, m) in &[(2, 2), (2, 3), (3, 3), (4, 2), (4, 4), (5, 5)] {
            for _ in 0..3 {
                let (a, b, cost) = random_instance(&mut rng, n, m);
                let (plan, _) = check_solution(&a, &b, &cost);
                let oracle = vertex_enumeration_value(&a, &b, &cost);
                assert!(
                    (plan.value() - oracle).abs() <= 1e-9 * (1.0 + oracle),
                    "{n}x{m}: simplex {} vs enumeration {}",
                    plan.value(),
                    oracle
                );
            }
        }
    }

    #[test]
    fn wasserstein_point_masses() {
        let p = DiscreteMeasure::uniform_1d(&[0.0]).unwrap();
        let q = DiscreteMeasure::uniform_1d(&[3.0]).unwrap();
        assert!((wasserstein_p(&p, &q, 2.0).unwrap() - 3.0).abs() <= 1e-12);
    }

    #[test]
    fn wasserstein_identity_is_zero() {
        let mut rng = SplitMix64::new(5);
        let pts: Vec<Vec<f64>> = (0..6).map(|_| vec![rng.range(-2.0, 2.0), rng.range(-2.0, 2.0)]).collect();
        let p = DiscreteMeasure::uniform(pts).unwrap();
        for pw in [1.0, 2.0, 3.0] {
            assert_eq!(wasserstein_p(&p, &p, pw).unwrap(), 0.0);
        }
    }

    #[test]
    fn wasserstein_shifted_uniform_pair() {
        // uniform{0,1} vs uniform{1,2} under p=1: every coupling costs 1.
        let p = DiscreteMeasure::uniform_1d(&[0.0, 1.0]).unwrap();
        let q = DiscreteMeasure::uniform_1d(&[1.0, 2.0]).unwrap();
        let w = wasserstein_p(&p, &q, 1.0).unwrap();
        assert!((w - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn triangle_inequality_on_random_triples() {
        let mut rng = SplitMix64::new(99);
        for _ in 0..20 {
            let mk = |rng: &mut SplitMix64| {
                let pts: Vec<Vec<f64>> =
                    (0..4).map(|_| vec![rng.range(-3.0, 3.0)]).collect();
                DiscreteMeasure::uniform(pts).unwrap()
            };
            let (p, q, r) = (mk(&mut rng), mk(&mut rng), mk(&mut rng));
            for pw in [1.0, 2.0] {
                let pq = wasserstein_p(&p, &q, pw).unwrap();
                let qr = wasserstein_p(&q, &r, pw).unwrap();
                let pr = wasserstein_p(&p, &r, pw).unwrap();
                assert!(pr <= pq + qr + 1e-7, "p={pw}: {pr} > {pq} + {qr}");
            }
        }
    }

    #[test]
    fn value_invariant_under_support_permutation() {
        let mut rng = SplitMix64::new(17);
        let (a, b, cost) = random_instance(&mut rng, 4, 3);
        let (plan, _) = solve_exact_ot(&a, &b, &cost).unwrap();

        // reverse the rows along with the weights
        let a_rev: Vec<f64> = a.iter().rev().cloned().collect();
        let rows_rev: Vec<Vec<f64>> = (0..4)
            .rev()
            .map(|i| (0..3).map(|j| cost.get(i, j)).collect())
            .collect();
        let cost_rev = CostMatrix::from_rows(rows_rev).unwrap();
        let (plan_rev, _) = solve_exact_ot(&a_rev, &b, &cost_rev).unwrap();
        assert!((plan.value() - plan_rev.value()).abs() <= 1e-9);
    }

    #[test]
    fn degenerate_weights_with_zeros() {
        let cost = CostMatrix::from_rows(vec![
            vec![1.0, 2.0, 3.0],
            vec![0.5, 0.0, 1.0],
            vec![2.0, 1.0, 0.0],
        ])
        .unwrap();
        let a = [0.0, 1.0, 0.0];
        let b = [0.25, 0.5, 0.25];
        let (plan, _) = check_solution(&a, &b, &cost);
        let oracle = vertex_enumeration_value(&a, &b, &cost);
        assert!((plan.value() - oracle).abs() <= 1e-9);
    }

    #[test]
    fn rejects_empty_and_unbalanced() {
        let cost = CostMatrix::from_rows(vec![vec![1.0]]).unwrap();
        assert!(matches!(
            solve_exact_ot(&[], &[1.0], &cost),
            Err(Error::EmptyMeasure) | Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            solve_exact_ot(&[1.0], &[0.5], &cost),
            Err(Error::UnbalancedMarginals { .. })
        ));
    }
}
