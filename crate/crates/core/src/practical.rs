//! Metric between a fully known source MDP and a target MDP observed only
//! through transition samples: estimate the target on well-sampled states,
//! close the source state set under reachability, then iterate the metric
//! on the two restricted models.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::approximation::{ApproxError, Dataset};
use crate::mdp::{Mdp, MdpError};
use crate::metric::{gbsm_warm_start, FixedPointConfig, MetricError, MetricMatrix, StopRule};

#[derive(Debug, Error)]
pub enum PracticalError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("no state has enough samples for every action")]
    EmptyRepresentativeSet,
    #[error("state-action pair ({state}, {action}) has no samples left after filtering")]
    UncoveredStateAction { state: usize, action: usize },
    #[error("seed state {0} is outside the source state space")]
    SeedOutOfRange(usize),
    #[error(transparent)]
    Approx(#[from] ApproxError),
    #[error(transparent)]
    Mdp(#[from] MdpError),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PracticalConfig {
    /// Minimum samples per state-action pair for a state to be kept.
    pub eta1: usize,
    /// Stop once successive iterates differ by at most this much.
    pub eta2: f64,
    pub max_iters: Option<usize>,
}

impl Default for PracticalConfig {
    fn default() -> Self {
        PracticalConfig {
            eta1: 10,
            eta2: 1e-6,
            max_iters: None,
        }
    }
}

impl PracticalConfig {
    pub fn validate(&self) -> Result<(), PracticalError> {
        if self.eta1 < 1 {
            return Err(PracticalError::InvalidConfig("eta1 must be at least 1".into()));
        }
        if !(self.eta2 > 0.0 && self.eta2.is_finite()) {
            return Err(PracticalError::InvalidConfig(format!("eta2 must be positive, got {}", self.eta2)));
        }
        Ok(())
    }
}

/// A sub-MDP on an ordered subset of states. Local state `i` of `mdp` is
/// original state `states[i]`; every row's support lies inside `states`.
#[derive(Debug, Clone, PartialEq)]
pub struct RestrictedMdp {
    pub states: Vec<usize>,
    pub mdp: Mdp,
}

impl RestrictedMdp {
    /// Local index of an original state.
    pub fn local(&self, state: usize) -> Option<usize> {
        self.states.binary_search(&state).ok()
    }
}

fn sample_counts(data: &Dataset, num_states: usize, num_actions: usize) -> Vec<usize> {
    let mut counts = vec![0; num_states * num_actions];
    for t in &data.tuples {
        counts[t.s * num_actions + t.a] += 1;
    }
    counts
}

fn check_indices(data: &Dataset, num_states: usize, num_actions: usize) -> Result<(), PracticalError> {
    data.validate(num_states, num_actions, f64::INFINITY)?;
    Ok(())
}

/// States with at least `eta1` samples for every action, and the tuples whose
/// start and successor are both such states.
pub fn build_representative_set(
    data: &Dataset,
    num_states: usize,
    num_actions: usize,
    cfg: &PracticalConfig,
) -> Result<(Vec<usize>, Dataset), PracticalError> {
    cfg.validate()?;
    check_indices(data, num_states, num_actions)?;
    let counts = sample_counts(data, num_states, num_actions);
    let mut member = vec![false; num_states];
    let u_t: Vec<usize> = (0..num_states)
        .filter(|&s| counts[s * num_actions..(s + 1) * num_actions].iter().all(|&c| c >= cfg.eta1))
        .collect();
    if u_t.is_empty() {
        return Err(PracticalError::EmptyRepresentativeSet);
    }
    for &s in &u_t {
        member[s] = true;
    }
    let filtered = data
        .tuples
        .iter()
        .filter(|t| member[t.s] && member[t.s_next])
        .copied()
        .collect();
    Ok((u_t, Dataset::new(filtered)))
}

/// Empirical successor frequencies and mean rewards on `u_t` (sorted, deduplicated).
pub fn estimate_target_model(
    filtered: &Dataset,
    u_t: &[usize],
    num_actions: usize,
    gamma: f64,
    reward_max: f64,
) -> Result<RestrictedMdp, PracticalError> {
    let mut states = u_t.to_vec();
    states.sort_unstable();
    states.dedup();
    let n = states.len();
    let local = |s: usize| states.binary_search(&s).ok();
    let mut rewards = vec![0.0; n * num_actions];
    let mut counts = vec![0usize; n * num_actions];
    let mut transitions = vec![0.0; n * num_actions * n];
    for t in &filtered.tuples {
        let (Some(i), Some(j)) = (local(t.s), local(t.s_next)) else {
            continue;
        };
        if t.a >= num_actions {
            return Err(ApproxError::InvalidDataset(format!("action {} out of range", t.a)).into());
        }
        let row = i * num_actions + t.a;
        counts[row] += 1;
        rewards[row] += t.r;
        transitions[row * n + j] += 1.0;
    }
    for (row, &c) in counts.iter().enumerate() {
        if c == 0 {
            return Err(PracticalError::UncoveredStateAction {
                state: states[row / num_actions],
                action: row % num_actions,
            });
        }
        rewards[row] /= c as f64;
        for p in &mut transitions[row * n..(row + 1) * n] {
            *p /= c as f64;
        }
    }
    let mdp = Mdp::from_flat(n, num_actions, gamma, reward_max, rewards, transitions)?;
    Ok(RestrictedMdp { states, mdp })
}

/// Smallest superset of `seed_set` closed under positive-probability
/// transitions, with `m` restricted to it.
pub fn close_source_space(m: &Mdp, seed_set: &[usize]) -> Result<RestrictedMdp, PracticalError> {
    let (ns, na) = (m.num_states(), m.num_actions());
    let mut member = vec![false; ns];
    let mut queue = VecDeque::new();
    for &s in seed_set {
        if s >= ns {
            return Err(PracticalError::SeedOutOfRange(s));
        }
        if !member[s] {
            member[s] = true;
            queue.push_back(s);
        }
    }
    while let Some(u) = queue.pop_front() {
        for a in 0..na {
            for (t, &p) in m.row(u, a).iter().enumerate() {
                if p > 0.0 && !member[t] {
                    member[t] = true;
                    queue.push_back(t);
                }
            }
        }
    }
    let states: Vec<usize> = (0..ns).filter(|&s| member[s]).collect();
    let n = states.len();
    let mut rewards = Vec::with_capacity(n * na);
    let mut transitions = Vec::with_capacity(n * na * n);
    for &s in &states {
        for a in 0..na {
            rewards.push(m.reward(s, a));
            let row = m.row(s, a);
            transitions.extend(states.iter().map(|&t| row[t]));
        }
    }
    let mdp = Mdp::from_flat(n, na, m.gamma(), m.reward_max(), rewards, transitions)?;
    Ok(RestrictedMdp { states, mdp })
}

/// `d₀(s,s') = max_a |R_t(s,a) − R_s(s',a)|` over local indices.
pub fn reward_gap_init(target: &Mdp, source: &Mdp) -> MetricMatrix {
    let na = target.num_actions().min(source.num_actions());
    let (rows, cols) = (target.num_states(), source.num_states());
    let mut d0 = MetricMatrix::zeros(rows, cols);
    for s in 0..rows {
        for t in 0..cols {
            let gap = (0..na)
                .map(|a| (target.reward(s, a) - source.reward(t, a)).abs())
                .fold(0.0, f64::max);
            d0.set(s, t, gap);
        }
    }
    d0
}

/// Mass of a target row discarded because its successor left the representative set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DroppedMass {
    pub state: usize,
    pub action: usize,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub target_states: Vec<usize>,
    pub source_states: Vec<usize>,
    pub num_tuples: usize,
    pub dropped_tuples: usize,
    pub dropped_mass: Vec<DroppedMass>,
    pub iterations: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PracticalResult {
    /// Rows indexed like `report.target_states`, columns like `report.source_states`.
    pub metric: MetricMatrix,
    pub target: RestrictedMdp,
    pub source: RestrictedMdp,
    pub report: StageReport,
}

/// Metric between the target observed through `data` and the source `m_s`,
/// which share state and action labels.
pub fn compute_gbsm_practical(
    data: &Dataset,
    m_s: &Mdp,
    cfg: &PracticalConfig,
) -> Result<PracticalResult, PracticalError> {
    cfg.validate()?;
    let (ns, na) = (m_s.num_states(), m_s.num_actions());
    check_indices(data, ns, na)?;

    let (u_t, filtered) = build_representative_set(data, ns, na, cfg)?;
    let reward_max = data.tuples.iter().map(|t| t.r).fold(m_s.reward_max(), f64::max);
    let target = estimate_target_model(&filtered, &u_t, na, m_s.gamma(), reward_max)?;

    let mut member = vec![false; ns];
    for &s in &u_t {
        member[s] = true;
    }
    let mut kept = vec![0usize; ns * na];
    let mut total = vec![0usize; ns * na];
    for t in data.tuples.iter().filter(|t| member[t.s]) {
        total[t.s * na + t.a] += 1;
        if member[t.s_next] {
            kept[t.s * na + t.a] += 1;
        }
    }
    let dropped_mass = u_t
        .iter()
        .flat_map(|&s| (0..na).map(move |a| (s, a)))
        .map(|(s, a)| DroppedMass {
            state: s,
            action: a,
            fraction: 1.0 - kept[s * na + a] as f64 / total[s * na + a] as f64,
        })
        .collect();

    let source = close_source_space(m_s, &u_t)?;
    let init = reward_gap_init(&target.mdp, &source.mdp);
    let fp = FixedPointConfig {
        tol: cfg.eta2,
        max_iters: cfg.max_iters,
    };
    let metric = gbsm_warm_start(&target.mdp, &source.mdp, &init, &fp, StopRule::Residual)?;
    let report = StageReport {
        target_states: target.states.clone(),
        source_states: source.states.clone(),
        num_tuples: data.len(),
        dropped_tuples: data.len() - filtered.len(),
        dropped_mass,
        iterations: metric.iterations,
        residual: metric.residual,
    };
    Ok(PracticalResult {
        metric,
        target,
        source,
        report,
    })
}
