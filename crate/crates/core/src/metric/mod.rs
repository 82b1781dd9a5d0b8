//! Bisimulation metrics within one MDP and between two MDPs, computed as the
//! least fixed point of a Wasserstein-based operator by synchronous sweeps.

mod engine;
mod surrogate;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mdp::MdpError;
use crate::transport::TransportError;

pub use engine::{
    bsm, delta_cost, delta_entry, gbsm, gbsm_conference, gbsm_on_policy, gbsm_on_policy_pair,
    gbsm_traced, gbsm_warm_start, PairCost, StopRule,
};
pub use surrogate::{tv_surrogate, TvSurrogate};

pub const DEFAULT_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("discount factors differ: {0} vs {1}")]
    GammaMismatch(f64, f64),
    #[error("action spaces differ: {0} vs {1} actions")]
    ActionSpaceMismatch(usize, usize),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("Hausdorff distance of an empty set")]
    EmptySet,
    #[error("no convergence after {} sweeps (residual {})", .0.iterations, .0.residual)]
    MaxItersExceeded(Box<MetricMatrix>),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Mdp(#[from] MdpError),
    #[error(transparent)]
    Transport(#[from] TransportError),
}

/// Stopping parameters of the fixed-point iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedPointConfig {
    pub tol: f64,
    /// `None` selects [`FixedPointConfig::default_max_iters`].
    pub max_iters: Option<usize>,
}

impl Default for FixedPointConfig {
    fn default() -> Self {
        FixedPointConfig {
            tol: DEFAULT_TOL,
            max_iters: None,
        }
    }
}

impl FixedPointConfig {
    pub fn with_tol(tol: f64) -> Self {
        FixedPointConfig { tol, max_iters: None }
    }

    /// Ten times the number of sweeps after which `γⁿ·R̄/(1−γ) ≤ tol` holds.
    pub fn default_max_iters(tol: f64, gamma: f64, reward_max: f64) -> usize {
        if gamma <= 0.0 {
            return 10;
        }
        let n = ((tol * (1.0 - gamma) / reward_max).ln() / gamma.ln()).ceil();
        10 * (n.max(1.0) as usize)
    }

    pub fn max_iters_for(&self, gamma: f64, reward_max: f64) -> usize {
        self.max_iters
            .unwrap_or_else(|| Self::default_max_iters(self.tol, gamma, reward_max))
    }

    pub fn validate(&self) -> Result<(), MetricError> {
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(MetricError::InvalidConfig(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iters == Some(0) {
            return Err(MetricError::InvalidConfig("max_iters must be positive".into()));
        }
        Ok(())
    }
}

/// Distances between the states of two MDPs, row-major `|S₁| × |S₂|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "MetricMatrixJson", into = "MetricMatrixJson")]
pub struct MetricMatrix {
    rows: usize,
    cols: usize,
    dist: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

#[derive(Serialize, Deserialize)]
struct MetricMatrixJson {
    rows: usize,
    cols: usize,
    dist: Vec<Vec<f64>>,
    iterations: usize,
    residual: f64,
}

impl From<MetricMatrixJson> for MetricMatrix {
    fn from(j: MetricMatrixJson) -> Self {
        MetricMatrix {
            rows: j.rows,
            cols: j.cols,
            dist: j.dist.concat(),
            iterations: j.iterations,
            residual: j.residual,
            converged: true,
        }
    }
}

impl From<MetricMatrix> for MetricMatrixJson {
    fn from(m: MetricMatrix) -> Self {
        MetricMatrixJson {
            rows: m.rows,
            cols: m.cols,
            dist: m.dist.chunks(m.cols).map(<[f64]>::to_vec).collect(),
            iterations: m.iterations,
            residual: m.residual,
        }
    }
}

impl MetricMatrix {
    pub fn new(rows: usize, cols: usize, dist: Vec<f64>) -> Result<Self, MetricError> {
        if dist.len() != rows * cols {
            return Err(MetricError::ShapeMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                dist.len()
            )));
        }
        Ok(MetricMatrix {
            rows,
            cols,
            dist,
            iterations: 0,
            residual: 0.0,
            converged: true,
        })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        MetricMatrix {
            rows,
            cols,
            dist: vec![0.0; rows * cols],
            iterations: 0,
            residual: 0.0,
            converged: true,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.dist[i * self.cols + j] = value;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.dist[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.dist
    }

    pub fn max(&self) -> f64 {
        self.dist.iter().copied().fold(0.0, f64::max)
    }

    /// `max_s d(s, s)` over the common index range.
    pub fn diagonal_max(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|s| self.get(s, s)).fold(0.0, f64::max)
    }

    pub fn transpose(&self) -> MetricMatrix {
        let mut dist = vec![0.0; self.dist.len()];
        for i in 0..self.rows {
            for j in 0..self.cols {
                dist[j * self.rows + i] = self.get(i, j);
            }
        }
        MetricMatrix {
            rows: self.cols,
            cols: self.rows,
            dist,
            ..*self
        }
    }

    /// `max |self − other|` over all entries.
    pub fn sup_distance(&self, other: &MetricMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "shape");
        self.dist
            .iter()
            .zip(&other.dist)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> Result<String, serde_json::Error> {
        serde_json::to_string_pretty(self)
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// Symmetric Hausdorff distance between the row set and the column set of a
/// cost block: `max{ max_x min_y δ(x,y), max_y min_x δ(x,y) }`.
pub fn hausdorff(block: ArrayView2<f64>) -> Result<f64, MetricError> {
    let (k, l) = block.dim();
    if k == 0 || l == 0 {
        return Err(MetricError::EmptySet);
    }
    let standard = block.as_standard_layout();
    Ok(hausdorff_flat(standard.as_slice().expect("standard layout"), k, l))
}

#[inline]
pub(crate) fn hausdorff_flat(block: &[f64], k: usize, l: usize) -> f64 {
    let mut rows_max = 0.0_f64;
    for x in 0..k {
        let row_min = block[x * l..(x + 1) * l].iter().copied().fold(f64::INFINITY, f64::min);
        rows_max = rows_max.max(row_min);
    }
    let mut cols_max = 0.0_f64;
    for y in 0..l {
        let col_min = (0..k).map(|x| block[x * l + y]).fold(f64::INFINITY, f64::min);
        cols_max = cols_max.max(col_min);
    }
    rows_max.max(cols_max)
}
