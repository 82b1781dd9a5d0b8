//! Exact Wasserstein-1 distances between finite distributions, total variation,
//! and a small dense LP oracle used to cross-check the solver.

mod oracle;
mod simplex;

use ndarray::{Array2, ArrayView2};
use thiserror::Error;

pub use oracle::{wasserstein1_oracle, ORACLE_MAX_SUPPORT};
pub use simplex::TransportProblem;

/// Entries in `[-NEG_CLAMP, 0)` are treated as rounding noise and clamped to zero.
pub const NEG_CLAMP: f64 = 1e-12;
/// Allowed deviation of a distribution's total mass from 1.
pub const MASS_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransportError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("not a distribution: {0}")]
    NotADistribution(String),
    #[error("cost entry ({row}, {col}) = {value} is negative or not finite")]
    InvalidCost { row: usize, col: usize, value: f64 },
    #[error("oracle supports at most {max} points per side, got {rows}x{cols}")]
    TooLarge { rows: usize, cols: usize, max: usize },
    #[error("transport simplex did not terminate within {0} pivots")]
    PivotLimit(usize),
}

/// A probability vector over a finite index set.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution(Vec<f64>);

impl Distribution {
    pub fn new(mut probs: Vec<f64>) -> Result<Self, TransportError> {
        if probs.is_empty() {
            return Err(TransportError::NotADistribution("empty support".into()));
        }
        for (i, p) in probs.iter_mut().enumerate() {
            if !p.is_finite() || *p < -NEG_CLAMP {
                return Err(TransportError::NotADistribution(format!(
                    "entry {i} is {p}"
                )));
            }
            if *p < 0.0 {
                *p = 0.0;
            }
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(TransportError::NotADistribution(format!(
                "total mass {total}"
            )));
        }
        Ok(Distribution(probs))
    }

    /// Point mass on `index` within a space of `len` points.
    pub fn dirac(len: usize, index: usize) -> Self {
        let mut probs = vec![0.0; len];
        probs[index] = 1.0;
        Distribution(probs)
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Optimal transport plan and its cost.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportSolution {
    pub cost: f64,
    pub plan: Array2<f64>,
}

fn check_cost(p: &Distribution, q: &Distribution, cost: &ArrayView2<f64>) -> Result<(), TransportError> {
    if cost.dim() != (p.len(), q.len()) {
        return Err(TransportError::DimensionMismatch(format!(
            "cost is {:?}, distributions have lengths {} and {}",
            cost.dim(),
            p.len(),
            q.len()
        )));
    }
    for ((row, col), &value) in cost.indexed_iter() {
        if !value.is_finite() || value < 0.0 {
            return Err(TransportError::InvalidCost { row, col, value });
        }
    }
    Ok(())
}

/// Exact W₁(p, q) under `cost` with an optimal plan.
pub fn wasserstein1(
    p: &Distribution,
    q: &Distribution,
    cost: ArrayView2<f64>,
) -> Result<TransportSolution, TransportError> {
    check_cost(p, q, &cost)?;
    let mut problem = TransportProblem::new(p.probs(), q.probs());
    let value = problem.solve(|i, j| cost[[i, j]])?;
    let mut plan = Array2::zeros((p.len(), q.len()));
    for (i, j, x) in problem.plan_entries() {
        plan[[i, j]] += x;
    }
    Ok(TransportSolution { cost: value, plan })
}

/// `½ Σ |p(i) − q(i)|`.
pub fn total_variation(p: &Distribution, q: &Distribution) -> Result<f64, TransportError> {
    if p.len() != q.len() {
        return Err(TransportError::DimensionMismatch(format!(
            "lengths {} and {}",
            p.len(),
            q.len()
        )));
    }
    Ok(tv_slices(p.probs(), q.probs()))
}

pub(crate) fn tv_slices(p: &[f64], q: &[f64]) -> f64 {
    let half_l1: f64 = 0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>();
    half_l1.min(1.0)
}
