//! Reference solver for small transport instances.
//!
//! Solves the transport LP in its general equality form with a dense two-phase
//! tableau simplex under Bland's rule, sharing no code with the network solver.

use ndarray::ArrayView2;

use super::{check_cost, Distribution, TransportError};

/// Largest support size per side accepted by [`wasserstein1_oracle`].
pub const ORACLE_MAX_SUPPORT: usize = 6;

const PIVOT_EPS: f64 = 1e-12;
const PRICE_EPS: f64 = 1e-11;

/// W₁(p, q) by a general-purpose LP solve; intended for cross-checking only.
pub fn wasserstein1_oracle(
    p: &Distribution,
    q: &Distribution,
    cost: ArrayView2<f64>,
) -> Result<f64, TransportError> {
    let (n, m) = (p.len(), q.len());
    if n > ORACLE_MAX_SUPPORT || m > ORACLE_MAX_SUPPORT {
        return Err(TransportError::TooLarge {
            rows: n,
            cols: m,
            max: ORACLE_MAX_SUPPORT,
        });
    }
    check_cost(p, q, &cost)?;

    // Variables x_ij at column i*m + j. Row sums for every i, column sums for
    // all but the last j (that constraint is implied).
    let mut a = Vec::new();
    let mut b = Vec::new();
    for i in 0..n {
        let mut row = vec![0.0; n * m];
        row[i * m..(i + 1) * m].iter_mut().for_each(|x| *x = 1.0);
        a.push(row);
        b.push(p.probs()[i]);
    }
    for j in 0..m.saturating_sub(1) {
        let mut row = vec![0.0; n * m];
        for i in 0..n {
            row[i * m + j] = 1.0;
        }
        a.push(row);
        b.push(q.probs()[j]);
    }
    let c: Vec<f64> = cost.iter().copied().collect();
    Ok(minimize_equality_lp(a, b, &c))
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    width: usize,
}

impl Tableau {
    fn rhs(&self, k: usize) -> f64 {
        self.rows[k][self.width]
    }

    fn pivot(&mut self, r: usize, col: usize) {
        let pv = self.rows[r][col];
        self.rows[r].iter_mut().for_each(|x| *x /= pv);
        let pivot_row = self.rows[r].clone();
        for (k, row) in self.rows.iter_mut().enumerate() {
            if k == r {
                continue;
            }
            let f = row[col];
            if f != 0.0 {
                row.iter_mut().zip(&pivot_row).for_each(|(x, y)| *x -= f * y);
            }
        }
        self.basis[r] = col;
    }

    /// Bland-rule primal simplex minimizing `c·x` over columns `< allowed`.
    fn run(&mut self, c: &[f64], allowed: usize) {
        loop {
            let entering = (0..allowed).find(|&j| {
                if self.basis.contains(&j) {
                    return false;
                }
                let z: f64 = self
                    .rows
                    .iter()
                    .zip(&self.basis)
                    .map(|(row, &bv)| c[bv] * row[j])
                    .sum();
                c[j] - z < -PRICE_EPS
            });
            let Some(j) = entering else { return };
            let mut leave: Option<(usize, f64)> = None;
            for k in 0..self.rows.len() {
                let coef = self.rows[k][j];
                if coef <= PIVOT_EPS {
                    continue;
                }
                let ratio = self.rhs(k) / coef;
                leave = match leave {
                    Some((lk, lr))
                        if lr < ratio || (lr == ratio && self.basis[lk] < self.basis[k]) =>
                    {
                        Some((lk, lr))
                    }
                    _ => Some((k, ratio)),
                };
            }
            let (r, _) = leave.expect("transport LP is bounded");
            self.pivot(r, j);
        }
    }
}

/// Minimizes `c·x` subject to `A x = b`, `x ≥ 0`, with `b ≥ 0` and a feasible system.
fn minimize_equality_lp(a: Vec<Vec<f64>>, b: Vec<f64>, c: &[f64]) -> f64 {
    let nv = c.len();
    let r = a.len();
    let width = nv + r;
    let rows = a
        .into_iter()
        .zip(&b)
        .enumerate()
        .map(|(k, (mut row, &rhs))| {
            row.resize(width + 1, 0.0);
            row[nv + k] = 1.0;
            row[width] = rhs.max(0.0);
            row
        })
        .collect();
    let mut t = Tableau {
        rows,
        basis: (nv..nv + r).collect(),
        width,
    };

    let mut phase1 = vec![0.0; width];
    phase1[nv..].iter_mut().for_each(|x| *x = 1.0);
    t.run(&phase1, width);

    // Drive zero-level artificials out of the basis; drop redundant rows.
    let mut k = 0;
    while k < t.rows.len() {
        if t.basis[k] >= nv {
            match (0..nv).find(|&j| t.rows[k][j].abs() > 1e-9) {
                Some(j) => t.pivot(k, j),
                None => {
                    t.rows.remove(k);
                    t.basis.remove(k);
                    continue;
                }
            }
        }
        k += 1;
    }

    let mut phase2 = c.to_vec();
    phase2.resize(width, 0.0);
    t.run(&phase2, nv);
    (0..t.rows.len()).map(|k| c[t.basis[k]] * t.rhs(k)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dist(v: &[f64]) -> Distribution {
        Distribution::new(v.to_vec()).unwrap()
    }

    /// Minimum over all spanning trees of the complete bipartite graph whose
    /// unique flow is nonnegative: the basic feasible solutions of the LP.
    fn tree_enumeration(p: &[f64], q: &[f64], cost: &Array2<f64>) -> f64 {
        let (n, m) = (p.len(), q.len());
        let cells: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..m).map(move |j| (i, j))).collect();
        let mut best = f64::INFINITY;
        let mut chosen = Vec::new();
        enumerate(&cells, 0, n + m - 1, &mut chosen, &mut |tree| {
            if let Some(flow) = tree_flow(p, q, tree) {
                let c: f64 = tree.iter().zip(&flow).map(|(&(i, j), x)| x * cost[[i, j]]).sum();
                best = best.min(c);
            }
        });
        best
    }

    fn enumerate(
        cells: &[(usize, usize)],
        from: usize,
        left: usize,
        chosen: &mut Vec<(usize, usize)>,
        visit: &mut dyn FnMut(&[(usize, usize)]),
    ) {
        if left == 0 {
            visit(chosen);
            return;
        }
        for k in from..cells.len() {
            chosen.push(cells[k]);
            enumerate(cells, k + 1, left - 1, chosen, visit);
            chosen.pop();
        }
    }

    /// Flow on a candidate basis by repeatedly settling leaf rows and columns;
    /// `None` if the cells do not form a spanning tree or a flow is negative.
    fn tree_flow(p: &[f64], q: &[f64], tree: &[(usize, usize)]) -> Option<Vec<f64>> {
        let (n, m) = (p.len(), q.len());
        let mut s = p.to_vec();
        let mut d = q.to_vec();
        let mut flow = vec![f64::NAN; tree.len()];
        let mut open: Vec<bool> = vec![true; tree.len()];
        for _ in 0..tree.len() {
            let mut progressed = false;
            for node in 0..n + m {
                let incident: Vec<usize> = (0..tree.len())
                    .filter(|&e| open[e] && (if node < n { tree[e].0 == node } else { tree[e].1 == node - n }))
                    .collect();
                if incident.len() == 1 {
                    let e = incident[0];
                    let (i, j) = tree[e];
                    let x = if node < n { s[i] } else { d[j] };
                    flow[e] = x;
                    s[i] -= x;
                    d[j] -= x;
                    open[e] = false;
                    progressed = true;
                    break;
                }
            }
            if !progressed {
                return None;
            }
        }
        if flow.iter().any(|x| *x < -1e-12) || s.iter().chain(&d).any(|r| r.abs() > 1e-9) {
            return None;
        }
        Some(flow)
    }

    #[test]
    fn rejects_large_supports() {
        let p = Distribution::dirac(7, 0);
        let q = Distribution::dirac(2, 0);
        let cost = Array2::zeros((7, 2));
        assert!(matches!(
            wasserstein1_oracle(&p, &q, cost.view()),
            Err(TransportError::TooLarge { rows: 7, cols: 2, .. })
        ));
    }

    #[test]
    fn trivial_cases() {
        let p = dist(&[0.2, 0.8]);
        let cost = array![[0.0, 2.0], [2.0, 0.0]];
        assert!(wasserstein1_oracle(&p, &p, cost.view()).unwrap().abs() < 1e-15);
        let cost = array![[0.0, 1.5, 4.0], [1.0, 0.0, 2.5]];
        let v = wasserstein1_oracle(&Distribution::dirac(2, 1), &Distribution::dirac(3, 2), cost.view());
        assert!((v.unwrap() - 2.5).abs() < 1e-15);
    }

    #[test]
    fn agrees_with_basis_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..150 {
            let n = rng.random_range(1..=3);
            let m = rng.random_range(1..=3);
            let mut draw = |k: usize| {
                let w: Vec<f64> = (0..k).map(|_| rng.random::<f64>() + 0.01).collect();
                let s: f64 = w.iter().sum();
                w.iter().map(|x| x / s).collect::<Vec<_>>()
            };
            let p = draw(n);
            let q = draw(m);
            let cost = Array2::from_shape_fn((n, m), |_| rng.random_range(0.0..3.0));
            let lp = wasserstein1_oracle(&dist(&p), &dist(&q), cost.view()).unwrap();
            let brute = tree_enumeration(&p, &q, &cost);
            assert!((lp - brute).abs() < 1e-9, "{lp} vs {brute}");
        }
    }
}
