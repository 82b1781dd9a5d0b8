//! Transportation simplex on a spanning-tree basis.
//!
//! A [`TransportProblem`] fixes the two marginals and keeps its basis between
//! calls to [`TransportProblem::solve`], so re-solving with a slightly changed
//! cost (as happens between fixed-point sweeps) usually takes a handful of
//! pivots.

use super::TransportError;

/// Switch from Dantzig to Bland pricing after this many pivots per basis cell.
const BLAND_AFTER_PER_CELL: usize = 20;
/// Hard limit on pivots per basis cell.
const PIVOT_LIMIT_PER_CELL: usize = 2000;
/// Relative optimality threshold on reduced costs.
const OPT_EPS: f64 = 1e-12;

/// `(original index, value)` pairs over the supported entries.
pub type Indexed = Vec<(usize, f64)>;

#[derive(Debug, Clone)]
pub struct TransportProblem {
    /// Original indices of the rows and columns with positive mass.
    rows: Vec<usize>,
    cols: Vec<usize>,
    supply: Vec<f64>,
    demand: Vec<f64>,
    /// Basic cells `(i, j)` in pruned coordinates and their flows; always a
    /// spanning tree over the `n + m` row and column nodes.
    basis: Vec<(usize, usize)>,
    flow: Vec<f64>,
    u: Vec<f64>,
    v: Vec<f64>,
    cost: Vec<f64>,
    // Tree traversal scratch.
    adj_start: Vec<usize>,
    adj: Vec<(usize, usize)>,
    parent: Vec<(usize, usize)>,
    depth: Vec<usize>,
    queue: Vec<usize>,
    cycle: Vec<usize>,
    cycle_tail: Vec<usize>,
    tree_valid: bool,
    /// No nonzero cost has been seen yet; the basis is still the north-west corner.
    fresh: bool,
}

impl TransportProblem {
    /// Prepares a problem between two mass vectors with equal totals.
    /// Zero-mass entries are pruned; the initial basis is the north-west corner.
    pub fn new(p: &[f64], q: &[f64]) -> Self {
        let (rows, supply): (Vec<usize>, Vec<f64>) =
            p.iter().enumerate().filter(|(_, x)| **x > 0.0).map(|(i, x)| (i, *x)).unzip();
        let (cols, demand): (Vec<usize>, Vec<f64>) =
            q.iter().enumerate().filter(|(_, x)| **x > 0.0).map(|(j, x)| (j, *x)).unzip();
        assert!(!rows.is_empty() && !cols.is_empty(), "transport marginals carry no mass");
        let (n, m) = (rows.len(), cols.len());

        let mut basis = Vec::with_capacity(n + m - 1);
        let mut flow = Vec::with_capacity(n + m - 1);
        let (mut s, mut d) = (supply.clone(), demand.clone());
        let (mut i, mut j) = (0, 0);
        loop {
            let x = s[i].min(d[j]).max(0.0);
            basis.push((i, j));
            flow.push(x);
            s[i] -= x;
            d[j] -= x;
            if i == n - 1 && j == m - 1 {
                break;
            }
            if i == n - 1 {
                j += 1;
            } else if j == m - 1 || s[i] <= d[j] {
                i += 1;
            } else {
                j += 1;
            }
        }

        TransportProblem {
            rows,
            cols,
            supply,
            demand,
            basis,
            flow,
            u: vec![0.0; n],
            v: vec![0.0; m],
            cost: vec![0.0; n * m],
            adj_start: vec![0; n + m + 1],
            adj: vec![(0, 0); 2 * (n + m - 1)],
            parent: vec![(usize::MAX, usize::MAX); n + m],
            depth: vec![0; n + m],
            queue: Vec::with_capacity(n + m),
            cycle: Vec::with_capacity(n + m),
            cycle_tail: Vec::with_capacity(n + m),
            tree_valid: false,
            fresh: true,
        }
    }

    pub fn num_support_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn num_support_cols(&self) -> usize {
        self.cols.len()
    }

    /// Solves to optimality under `cost(i, j)` (original indices) starting from
    /// the current basis, and returns the optimal cost.
    pub fn solve<F: Fn(usize, usize) -> f64>(&mut self, cost: F) -> Result<f64, TransportError> {
        let (n, m) = (self.rows.len(), self.cols.len());
        for a in 0..n {
            for b in 0..m {
                self.cost[a * m + b] = cost(self.rows[a], self.cols[b]);
            }
        }
        if self.fresh && self.cost.iter().any(|c| *c != 0.0) {
            self.least_cost_basis();
            self.fresh = false;
        }
        let cells = n + m - 1;
        let bland_after = BLAND_AFTER_PER_CELL * cells;
        let limit = PIVOT_LIMIT_PER_CELL * cells;

        if !self.tree_valid {
            self.build_tree();
        }
        self.update_potentials();
        let mut pivots = 0;
        loop {
            let entering = if pivots < bland_after {
                self.entering_dantzig()
            } else {
                self.entering_bland()
            };
            let Some((ie, je)) = entering else { break };
            self.pivot(ie, je, pivots >= bland_after);
            self.build_tree();
            self.update_potentials();
            pivots += 1;
            if pivots > limit {
                return Err(TransportError::PivotLimit(limit));
            }
        }
        Ok(self
            .basis
            .iter()
            .zip(&self.flow)
            .map(|(&(i, j), x)| x * self.cost[i * m + j])
            .sum())
    }

    /// Positive-flow cells `(row, col, mass)` of the current basis, in original indices.
    pub fn plan_entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.basis
            .iter()
            .zip(&self.flow)
            .filter(|(_, x)| **x > 0.0)
            .map(|(&(i, j), &x)| (self.rows[i], self.cols[j], x))
    }

    /// Dual potentials `(index, value)` for supported rows and columns from the
    /// last call to [`solve`](Self::solve).
    pub fn potentials(&self) -> (Indexed, Indexed) {
        (
            self.rows.iter().copied().zip(self.u.iter().copied()).collect(),
            self.cols.iter().copied().zip(self.v.iter().copied()).collect(),
        )
    }

    /// Supply and demand with their original indices.
    pub fn marginals(&self) -> (Indexed, Indexed) {
        (
            self.rows.iter().copied().zip(self.supply.iter().copied()).collect(),
            self.cols.iter().copied().zip(self.demand.iter().copied()).collect(),
        )
    }

    /// Replaces the basis with the least-cost-cell starting solution: repeatedly
    /// ship as much as possible through the cheapest open cell and close its row
    /// or column (one line per step, so the result is a spanning tree).
    fn least_cost_basis(&mut self) {
        let (n, m) = (self.rows.len(), self.cols.len());
        let mut s = self.supply.clone();
        let mut d = self.demand.clone();
        let mut row_open = vec![true; n];
        let mut col_open = vec![true; m];
        let (mut rows_left, mut cols_left) = (n, m);
        self.basis.clear();
        self.flow.clear();
        while rows_left > 0 && cols_left > 0 {
            let mut best = (usize::MAX, usize::MAX);
            let mut best_c = f64::INFINITY;
            for i in (0..n).filter(|&i| row_open[i]) {
                for j in (0..m).filter(|&j| col_open[j]) {
                    let c = self.cost[i * m + j];
                    if c < best_c {
                        best_c = c;
                        best = (i, j);
                    }
                }
            }
            let (i, j) = best;
            let x = s[i].min(d[j]).max(0.0);
            self.basis.push((i, j));
            self.flow.push(x);
            s[i] -= x;
            d[j] -= x;
            if rows_left == 1 && cols_left == 1 {
                break;
            }
            if cols_left == 1 || (rows_left > 1 && s[i] <= d[j]) {
                row_open[i] = false;
                rows_left -= 1;
            } else {
                col_open[j] = false;
                cols_left -= 1;
            }
        }
        debug_assert_eq!(self.basis.len(), n + m - 1);
        self.tree_valid = false;
    }

    /// Rebuilds the adjacency of the basis tree and a BFS parent structure
    /// rooted at row 0.
    fn build_tree(&mut self) {
        let (n, m) = (self.rows.len(), self.cols.len());
        let nodes = n + m;
        self.adj_start.iter_mut().for_each(|x| *x = 0);
        for &(i, j) in &self.basis {
            self.adj_start[i + 1] += 1;
            self.adj_start[n + j + 1] += 1;
        }
        for k in 0..nodes {
            self.adj_start[k + 1] += self.adj_start[k];
        }
        // `depth` doubles as a fill cursor before the traversal.
        self.depth[..nodes].copy_from_slice(&self.adj_start[..nodes]);
        for (e, &(i, j)) in self.basis.iter().enumerate() {
            let ci = self.depth[i];
            self.adj[ci] = (n + j, e);
            self.depth[i] += 1;
            let cj = self.depth[n + j];
            self.adj[cj] = (i, e);
            self.depth[n + j] += 1;
        }

        self.parent.iter_mut().for_each(|p| *p = (usize::MAX, usize::MAX));
        self.queue.clear();
        self.queue.push(0);
        self.parent[0] = (0, usize::MAX);
        self.depth[0] = 0;
        let mut head = 0;
        while head < self.queue.len() {
            let node = self.queue[head];
            head += 1;
            for k in self.adj_start[node]..self.adj_start[node + 1] {
                let (next, e) = self.adj[k];
                if self.parent[next].0 != usize::MAX {
                    continue;
                }
                self.parent[next] = (node, e);
                self.depth[next] = self.depth[node] + 1;
                self.queue.push(next);
            }
        }
        debug_assert_eq!(self.queue.len(), nodes, "basis is not a spanning tree");
        self.tree_valid = true;
    }

    /// Potentials with `u_0 = 0` and `u_i + v_j = c_ij` on every basic cell,
    /// propagated in BFS order.
    fn update_potentials(&mut self) {
        let (n, m) = (self.rows.len(), self.cols.len());
        self.u[0] = 0.0;
        for &node in &self.queue[1..] {
            let (up, e) = self.parent[node];
            let (i, j) = self.basis[e];
            let c = self.cost[i * m + j];
            if node >= n {
                self.v[node - n] = c - self.u[up];
            } else {
                self.u[node] = c - self.v[up - n];
            }
        }
    }

    /// Reduced cost of `(i, j)` if it is negative beyond rounding noise.
    #[inline]
    fn improving(&self, i: usize, j: usize) -> Option<f64> {
        let c = self.cost[i * self.cols.len() + j];
        let rc = c - self.u[i] - self.v[j];
        (rc < -OPT_EPS * (1.0 + c.abs())).then_some(rc)
    }

    fn entering_dantzig(&self) -> Option<(usize, usize)> {
        let mut best = 0.0;
        let mut cell = None;
        for i in 0..self.rows.len() {
            for j in 0..self.cols.len() {
                if let Some(rc) = self.improving(i, j) {
                    if rc < best {
                        best = rc;
                        cell = Some((i, j));
                    }
                }
            }
        }
        cell
    }

    fn entering_bland(&self) -> Option<(usize, usize)> {
        (0..self.rows.len())
            .flat_map(|i| (0..self.cols.len()).map(move |j| (i, j)))
            .find(|&(i, j)| self.improving(i, j).is_some())
    }

    /// Brings `(ie, je)` into the basis along the unique tree cycle it closes.
    fn pivot(&mut self, ie: usize, je: usize, bland: bool) {
        let n = self.rows.len();
        let m = self.cols.len();
        // Tree path from column je to row ie: edges alternate −, +, −, ...
        self.cycle.clear();
        self.cycle_tail.clear();
        let (mut a, mut b) = (ie, n + je);
        while a != b {
            if self.depth[a] >= self.depth[b] {
                let (up, e) = self.parent[a];
                self.cycle_tail.push(e);
                a = up;
            } else {
                let (up, e) = self.parent[b];
                self.cycle.push(e);
                b = up;
            }
        }
        self.cycle.extend(self.cycle_tail.iter().rev());

        let mut leave = usize::MAX;
        let mut theta = f64::INFINITY;
        for &e in self.cycle.iter().step_by(2) {
            let x = self.flow[e];
            let better = x < theta
                || (bland && x == theta && {
                    let (i, j) = self.basis[e];
                    let (li, lj) = self.basis[leave];
                    i * m + j < li * m + lj
                });
            if better {
                theta = x;
                leave = e;
            }
        }
        for (k, &e) in self.cycle.iter().enumerate() {
            if k % 2 == 0 {
                self.flow[e] = (self.flow[e] - theta).max(0.0);
            } else {
                self.flow[e] += theta;
            }
        }
        self.basis[leave] = (ie, je);
        self.flow[leave] = theta;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn north_west_basis_is_spanning() {
        let problem = TransportProblem::new(&[0.1, 0.0, 0.6, 0.3], &[0.5, 0.5, 0.0]);
        assert_eq!(problem.num_support_rows(), 3);
        assert_eq!(problem.num_support_cols(), 2);
        assert_eq!(problem.basis.len(), 4);
        let shipped: f64 = problem.plan_entries().map(|(_, _, x)| x).sum();
        assert!((shipped - 1.0).abs() < 1e-15);
        assert!(problem.plan_entries().all(|(i, j, _)| i != 1 && j != 2));
    }

    #[test]
    fn single_row_is_forced() {
        let mut problem = TransportProblem::new(&[1.0], &[0.25, 0.25, 0.5]);
        let cost = [[1.0, 2.0, 4.0]];
        let v = problem.solve(|i, j| cost[i][j]).unwrap();
        assert!((v - 2.75).abs() < 1e-15);
    }
}
