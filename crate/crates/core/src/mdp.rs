//! Finite MDP data model, Garnet generation and exact dynamic programming.
//!
//! Rewards are stored row-major as `rewards[s * |A| + a]` and transitions as
//! `transitions[(s * |A| + a) * |S| + s']`, so `row(s, a)` is a contiguous
//! slice over successor states.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Allowed deviation of a transition row sum from 1.
pub const ROW_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum MdpError {
    #[error("an MDP needs at least one state and one action")]
    Empty,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("transition row ({state}, {action}) sums to {sum}")]
    NonStochasticRow { state: usize, action: usize, sum: f64 },
    #[error("transition row ({state}, {action}) has a negative or non-finite entry")]
    InvalidProbability { state: usize, action: usize },
    #[error("reward {value} at ({state}, {action}) is outside [0, {reward_max}]")]
    RewardOutOfRange {
        state: usize,
        action: usize,
        value: f64,
        reward_max: f64,
    },
    #[error("discount factor {0} is not in [0, 1)")]
    InvalidGamma(f64),
    #[error("reward scale must be positive and finite, got {0}")]
    InvalidRewardMax(f64),
    #[error("invalid Garnet configuration: {0}")]
    InvalidGarnet(String),
    #[error("invalid policy: {0}")]
    InvalidPolicy(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// A finite discounted MDP with bounded rewards `R(s, a) ∈ [0, R̄]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MdpJson", into = "MdpJson")]
pub struct Mdp {
    num_states: usize,
    num_actions: usize,
    gamma: f64,
    reward_max: f64,
    rewards: Vec<f64>,
    transitions: Vec<f64>,
}

/// On-disk layout of an [`Mdp`].
#[derive(Serialize, Deserialize)]
struct MdpJson {
    num_states: usize,
    num_actions: usize,
    gamma: f64,
    reward_max: f64,
    rewards: Vec<Vec<f64>>,
    transitions: Vec<Vec<Vec<f64>>>,
}

impl TryFrom<MdpJson> for Mdp {
    type Error = MdpError;

    fn try_from(raw: MdpJson) -> Result<Self, Self::Error> {
        let mdp = Mdp::new(raw.gamma, raw.reward_max, raw.rewards, raw.transitions)?;
        if mdp.num_states != raw.num_states || mdp.num_actions != raw.num_actions {
            return Err(MdpError::ShapeMismatch(format!(
                "declared {}x{} but arrays are {}x{}",
                raw.num_states, raw.num_actions, mdp.num_states, mdp.num_actions
            )));
        }
        Ok(mdp)
    }
}

impl From<Mdp> for MdpJson {
    fn from(m: Mdp) -> Self {
        let (ns, na) = (m.num_states, m.num_actions);
        MdpJson {
            num_states: ns,
            num_actions: na,
            gamma: m.gamma,
            reward_max: m.reward_max,
            rewards: m.rewards.chunks(na).map(<[f64]>::to_vec).collect(),
            transitions: m
                .transitions
                .chunks(na * ns)
                .map(|block| block.chunks(ns).map(<[f64]>::to_vec).collect())
                .collect(),
        }
    }
}

impl Mdp {
    /// Builds an MDP from nested `rewards[s][a]` and `transitions[s][a][s']`.
    pub fn new(
        gamma: f64,
        reward_max: f64,
        rewards: Vec<Vec<f64>>,
        transitions: Vec<Vec<Vec<f64>>>,
    ) -> Result<Self, MdpError> {
        let num_states = rewards.len();
        let num_actions = rewards.first().map_or(0, Vec::len);
        if num_states == 0 || num_actions == 0 {
            return Err(MdpError::Empty);
        }
        if transitions.len() != num_states {
            return Err(MdpError::ShapeMismatch(format!(
                "{} reward rows but {} transition blocks",
                num_states,
                transitions.len()
            )));
        }
        let mut flat_r = Vec::with_capacity(num_states * num_actions);
        let mut flat_p = Vec::with_capacity(num_states * num_actions * num_states);
        for (s, (r_row, p_block)) in rewards.into_iter().zip(transitions).enumerate() {
            if r_row.len() != num_actions || p_block.len() != num_actions {
                return Err(MdpError::ShapeMismatch(format!(
                    "state {s} does not have {num_actions} actions"
                )));
            }
            flat_r.extend(r_row);
            for (a, row) in p_block.into_iter().enumerate() {
                if row.len() != num_states {
                    return Err(MdpError::ShapeMismatch(format!(
                        "row ({s}, {a}) has length {} instead of {num_states}",
                        row.len()
                    )));
                }
                flat_p.extend(row);
            }
        }
        Self::from_flat(num_states, num_actions, gamma, reward_max, flat_r, flat_p)
    }

    /// Builds an MDP from flat row-major storage (see module docs for layout).
    pub fn from_flat(
        num_states: usize,
        num_actions: usize,
        gamma: f64,
        reward_max: f64,
        rewards: Vec<f64>,
        transitions: Vec<f64>,
    ) -> Result<Self, MdpError> {
        if num_states == 0 || num_actions == 0 {
            return Err(MdpError::Empty);
        }
        if rewards.len() != num_states * num_actions
            || transitions.len() != num_states * num_actions * num_states
        {
            return Err(MdpError::ShapeMismatch(format!(
                "flat arrays have lengths {} and {} for |S|={num_states}, |A|={num_actions}",
                rewards.len(),
                transitions.len()
            )));
        }
        let mdp = Mdp {
            num_states,
            num_actions,
            gamma,
            reward_max,
            rewards,
            transitions,
        };
        mdp.validate()?;
        Ok(mdp)
    }

    /// Checks every structural invariant; the first violation found is reported.
    pub fn validate(&self) -> Result<(), MdpError> {
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(MdpError::InvalidGamma(self.gamma));
        }
        if !(self.reward_max.is_finite() && self.reward_max > 0.0) {
            return Err(MdpError::InvalidRewardMax(self.reward_max));
        }
        for s in 0..self.num_states {
            for a in 0..self.num_actions {
                let r = self.reward(s, a);
                if !(0.0..=self.reward_max).contains(&r) {
                    return Err(MdpError::RewardOutOfRange {
                        state: s,
                        action: a,
                        value: r,
                        reward_max: self.reward_max,
                    });
                }
                let row = self.row(s, a);
                if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
                    return Err(MdpError::InvalidProbability { state: s, action: a });
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > ROW_SUM_TOL {
                    return Err(MdpError::NonStochasticRow {
                        state: s,
                        action: a,
                        sum,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn reward_max(&self) -> f64 {
        self.reward_max
    }

    #[inline]
    pub fn reward(&self, s: usize, a: usize) -> f64 {
        self.rewards[s * self.num_actions + a]
    }

    /// Successor distribution `P(· | s, a)`.
    #[inline]
    pub fn row(&self, s: usize, a: usize) -> &[f64] {
        let start = (s * self.num_actions + a) * self.num_states;
        &self.transitions[start..start + self.num_states]
    }

    pub fn rewards_flat(&self) -> &[f64] {
        &self.rewards
    }

    pub fn transitions_flat(&self) -> &[f64] {
        &self.transitions
    }

    /// Upper bound `R̄ / (1 - γ)` on values and on every bisimulation distance.
    pub fn value_cap(&self) -> f64 {
        self.reward_max / (1.0 - self.gamma)
    }

    /// `R(s, a) + γ Σ_{s'} P(s'|s,a) v(s')`.
    #[inline]
    pub fn q_value(&self, s: usize, a: usize, v: &[f64]) -> f64 {
        let ev: f64 = self.row(s, a).iter().zip(v).map(|(p, x)| p * x).sum();
        self.reward(s, a) + self.gamma * ev
    }

    pub fn to_json(&self) -> Result<String, MdpError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self, MdpError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn read_json<R: Read>(reader: R) -> Result<Self, MdpError> {
        Ok(serde_json::from_reader(reader)?)
    }

    pub fn write_json<W: Write>(&self, writer: W) -> Result<(), MdpError> {
        serde_json::to_writer_pretty(writer, self)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, MdpError> {
        Self::read_json(BufReader::new(File::open(path)?))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), MdpError> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_json(&mut w)?;
        w.flush()?;
        Ok(())
    }
}

/// Free-function form of [`Mdp::validate`].
pub fn validate_mdp(m: &Mdp) -> Result<(), MdpError> {
    m.validate()
}

#[derive(Debug, Clone, PartialEq)]
pub enum Policy {
    /// One action index per state.
    Deterministic(Vec<usize>),
    /// Row-major `π(a|s)`, `probs[s * num_actions + a]`.
    Stochastic { num_actions: usize, probs: Vec<f64> },
}

impl Policy {
    pub fn deterministic(actions: Vec<usize>) -> Self {
        Policy::Deterministic(actions)
    }

    pub fn stochastic(rows: Vec<Vec<f64>>) -> Result<Self, MdpError> {
        let num_actions = rows.first().map_or(0, Vec::len);
        if num_actions == 0 || rows.iter().any(|r| r.len() != num_actions) {
            return Err(MdpError::InvalidPolicy("ragged or empty rows".into()));
        }
        for (s, row) in rows.iter().enumerate() {
            if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return Err(MdpError::InvalidPolicy(format!("negative probability in state {s}")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(MdpError::InvalidPolicy(format!("state {s} sums to {sum}")));
            }
        }
        Ok(Policy::Stochastic {
            num_actions,
            probs: rows.concat(),
        })
    }

    pub fn uniform(num_states: usize, num_actions: usize) -> Self {
        Policy::Stochastic {
            num_actions,
            probs: vec![1.0 / num_actions as f64; num_states * num_actions],
        }
    }

    pub fn num_states(&self) -> usize {
        match self {
            Policy::Deterministic(a) => a.len(),
            Policy::Stochastic { num_actions, probs } => probs.len() / num_actions,
        }
    }

    pub fn prob(&self, s: usize, a: usize) -> f64 {
        match self {
            Policy::Deterministic(acts) => f64::from(u8::from(acts[s] == a)),
            Policy::Stochastic { num_actions, probs } => probs[s * num_actions + a],
        }
    }

    /// One-hot stochastic representation of a deterministic policy.
    pub fn to_stochastic(&self, num_actions: usize) -> Policy {
        match self {
            Policy::Stochastic { .. } => self.clone(),
            Policy::Deterministic(acts) => {
                let mut probs = vec![0.0; acts.len() * num_actions];
                for (s, &a) in acts.iter().enumerate() {
                    probs[s * num_actions + a] = 1.0;
                }
                Policy::Stochastic { num_actions, probs }
            }
        }
    }

    pub fn check_against(&self, m: &Mdp) -> Result<(), MdpError> {
        if self.num_states() != m.num_states() {
            return Err(MdpError::ShapeMismatch(format!(
                "policy covers {} states, MDP has {}",
                self.num_states(),
                m.num_states()
            )));
        }
        match self {
            Policy::Deterministic(acts) => {
                if let Some(s) = acts.iter().position(|&a| a >= m.num_actions()) {
                    return Err(MdpError::ShapeMismatch(format!(
                        "action {} at state {s} is out of range",
                        acts[s]
                    )));
                }
            }
            Policy::Stochastic { num_actions, .. } => {
                if *num_actions != m.num_actions() {
                    return Err(MdpError::ShapeMismatch(format!(
                        "policy has {num_actions} actions, MDP has {}",
                        m.num_actions()
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValueFunction(Vec<f64>);

impl ValueFunction {
    pub fn new(values: Vec<f64>) -> Self {
        ValueFunction(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `‖self - other‖∞`.
    pub fn sup_distance(&self, other: &ValueFunction) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl std::ops::Index<usize> for ValueFunction {
    type Output = f64;

    fn index(&self, s: usize) -> &f64 {
        &self.0[s]
    }
}

/// Stopping test shared by the Bellman iterations: the posterior residual bound
/// `γ/(1-γ)·‖vₙ - vₙ₋₁‖` or the prior bound `γⁿ·R̄/(1-γ)` falls below `tol`.
fn bellman_converged(gamma: f64, reward_max: f64, n: i32, residual: f64, tol: f64) -> bool {
    if gamma == 0.0 {
        return true;
    }
    residual <= tol * (1.0 - gamma) / gamma || gamma.powi(n) * reward_max / (1.0 - gamma) <= tol
}

/// Bellman-optimality iteration from `V⁰ = 0`; the result is within `tol` of `V*`.
pub fn value_iteration(m: &Mdp, tol: f64) -> ValueFunction {
    assert!(tol > 0.0, "tolerance must be positive");
    let mut v = vec![0.0; m.num_states()];
    let mut next = vec![0.0; m.num_states()];
    for n in 1.. {
        let mut residual = 0.0_f64;
        for (s, out) in next.iter_mut().enumerate() {
            let best = (0..m.num_actions())
                .map(|a| m.q_value(s, a, &v))
                .fold(f64::NEG_INFINITY, f64::max);
            residual = residual.max((best - v[s]).abs());
            *out = best;
        }
        std::mem::swap(&mut v, &mut next);
        if bellman_converged(m.gamma(), m.reward_max(), n, residual, tol) {
            break;
        }
    }
    ValueFunction(v)
}

/// Fixed-point iteration of the on-policy Bellman operator; within `tol` of `V^π`.
pub fn policy_evaluation(m: &Mdp, pi: &Policy, tol: f64) -> Result<ValueFunction, MdpError> {
    assert!(tol > 0.0, "tolerance must be positive");
    let chain = on_policy_collapse(m, pi)?;
    let mut v = vec![0.0; m.num_states()];
    let mut next = vec![0.0; m.num_states()];
    for n in 1.. {
        let mut residual = 0.0_f64;
        for (s, out) in next.iter_mut().enumerate() {
            let x = chain.q_value(s, 0, &v);
            residual = residual.max((x - v[s]).abs());
            *out = x;
        }
        std::mem::swap(&mut v, &mut next);
        if bellman_converged(m.gamma(), m.reward_max(), n, residual, tol) {
            break;
        }
    }
    Ok(ValueFunction(v))
}

/// One-step greedy policy with respect to `v`; ties go to the lowest action index.
pub fn greedy_policy(m: &Mdp, v: &ValueFunction) -> Policy {
    assert_eq!(v.len(), m.num_states(), "value function length");
    let actions = (0..m.num_states())
        .map(|s| {
            let mut best_a = 0;
            let mut best_q = m.q_value(s, 0, v.values());
            for a in 1..m.num_actions() {
                let q = m.q_value(s, a, v.values());
                if q > best_q {
                    best_q = q;
                    best_a = a;
                }
            }
            best_a
        })
        .collect();
    Policy::Deterministic(actions)
}

/// Collapses `m` under `pi` into a single-action MDP holding `R^π` and `P^π`.
pub fn on_policy_collapse(m: &Mdp, pi: &Policy) -> Result<Mdp, MdpError> {
    pi.check_against(m)?;
    let ns = m.num_states();
    let mut rewards = Vec::with_capacity(ns);
    let mut transitions = Vec::with_capacity(ns * ns);
    for s in 0..ns {
        match pi {
            Policy::Deterministic(acts) => {
                rewards.push(m.reward(s, acts[s]));
                transitions.extend_from_slice(m.row(s, acts[s]));
            }
            Policy::Stochastic { .. } => {
                let mut r = 0.0;
                let mut row = vec![0.0; ns];
                for a in 0..m.num_actions() {
                    let w = pi.prob(s, a);
                    r += w * m.reward(s, a);
                    for (acc, p) in row.iter_mut().zip(m.row(s, a)) {
                        *acc += w * p;
                    }
                }
                // Convex combinations can overshoot R̄ by an ulp.
                rewards.push(r.clamp(0.0, m.reward_max()));
                transitions.extend(row);
            }
        }
    }
    Mdp::from_flat(ns, 1, m.gamma(), m.reward_max(), rewards, transitions)
}

/// Parameters of a random Garnet MDP.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GarnetConfig {
    pub num_states: usize,
    pub num_actions: usize,
    pub branching_fraction: f64,
    pub gamma: f64,
    pub reward_max: f64,
    pub seed: u64,
}

impl Default for GarnetConfig {
    fn default() -> Self {
        GarnetConfig {
            num_states: 20,
            num_actions: 5,
            branching_fraction: 0.5,
            gamma: 0.9,
            reward_max: 1.0,
            seed: 0,
        }
    }
}

impl GarnetConfig {
    /// Number of successors per state-action pair, `⌈fraction·|S|⌉`.
    pub fn branch_count(&self) -> usize {
        // Guard against 1/n·n landing one ulp above an integer.
        let raw = (self.branching_fraction * self.num_states as f64 - 1e-9).ceil();
        (raw.max(1.0) as usize).min(self.num_states)
    }

    pub fn validate(&self) -> Result<(), MdpError> {
        if self.num_states == 0 || self.num_actions == 0 {
            return Err(MdpError::InvalidGarnet("empty state or action space".into()));
        }
        if !(self.branching_fraction > 0.0 && self.branching_fraction <= 1.0) {
            return Err(MdpError::InvalidGarnet(format!(
                "branching fraction {} not in (0, 1]",
                self.branching_fraction
            )));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(MdpError::InvalidGamma(self.gamma));
        }
        if !(self.reward_max.is_finite() && self.reward_max > 0.0) {
            return Err(MdpError::InvalidRewardMax(self.reward_max));
        }
        Ok(())
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        GarnetConfig { seed, ..self.clone() }
    }

    pub fn with_gamma(&self, gamma: f64) -> Self {
        GarnetConfig { gamma, ..self.clone() }
    }
}

/// Samples a Garnet MDP. Each row puts normalized uniform weights on a random
/// subset of `branch_count()` successors; rewards are uniform on `[0, R̄)`.
pub fn garnet_generate(cfg: &GarnetConfig) -> Result<Mdp, MdpError> {
    cfg.validate()?;
    let (ns, na) = (cfg.num_states, cfg.num_actions);
    let b = cfg.branch_count();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut rewards = Vec::with_capacity(ns * na);
    let mut transitions = vec![0.0; ns * na * ns];
    for sa in 0..ns * na {
        let successors = sample(&mut rng, ns, b);
        let weights: Vec<f64> = (0..b).map(|_| rng.random::<f64>()).collect();
        let total: f64 = weights.iter().sum();
        let row = &mut transitions[sa * ns..(sa + 1) * ns];
        for (succ, w) in successors.iter().zip(&weights) {
            row[succ] = w / total;
        }
        rewards.push(rng.random_range(0.0..cfg.reward_max));
    }
    Mdp::from_flat(ns, na, cfg.gamma, cfg.reward_max, rewards, transitions)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn single_state(rewards: Vec<f64>, gamma: f64) -> Mdp {
        let na = rewards.len();
        Mdp::new(gamma, 1.0, vec![rewards], vec![vec![vec![1.0]; na]]).unwrap()
    }

    #[test]
    fn garnet_has_exact_branching() {
        let cfg = GarnetConfig {
            seed: 7,
            ..GarnetConfig::default()
        };
        let m = garnet_generate(&cfg).unwrap();
        for s in 0..20 {
            for a in 0..5 {
                assert_eq!(m.row(s, a).iter().filter(|p| **p > 0.0).count(), 10);
            }
        }
        validate_mdp(&m).unwrap();
    }

    #[test]
    fn garnet_point_mass_rows() {
        let cfg = GarnetConfig {
            num_states: 7,
            num_actions: 3,
            branching_fraction: 1.0 / 7.0,
            ..GarnetConfig::default()
        };
        assert_eq!(cfg.branch_count(), 1);
        let m = garnet_generate(&cfg).unwrap();
        for s in 0..7 {
            for a in 0..3 {
                let row = m.row(s, a);
                assert_eq!(row.iter().filter(|p| **p > 0.0).count(), 1);
                assert!(row.contains(&1.0));
            }
        }
    }

    #[test]
    fn garnet_is_deterministic() {
        let cfg = GarnetConfig::default().with_seed(99);
        assert_eq!(garnet_generate(&cfg).unwrap(), garnet_generate(&cfg).unwrap());
        assert_ne!(
            garnet_generate(&cfg).unwrap(),
            garnet_generate(&cfg.with_seed(100)).unwrap()
        );
    }

    #[test]
    fn rejects_bad_rows_rewards_and_gamma() {
        let bad_row = Mdp::new(0.5, 1.0, vec![vec![0.0], vec![0.0]], vec![
            vec![vec![0.5, 0.4]],
            vec![vec![0.0, 1.0]],
        ]);
        assert!(matches!(
            bad_row,
            Err(MdpError::NonStochasticRow { state: 0, action: 0, .. })
        ));
        let bad_reward = Mdp::new(0.5, 1.0, vec![vec![0.0, 1.5]], vec![vec![vec![1.0]; 2]]);
        assert!(matches!(
            bad_reward,
            Err(MdpError::RewardOutOfRange { state: 0, action: 1, .. })
        ));
        let bad_gamma = Mdp::new(1.0, 1.0, vec![vec![0.0]], vec![vec![vec![1.0]]]);
        assert!(matches!(bad_gamma, Err(MdpError::InvalidGamma(_))));
    }

    #[test]
    fn value_iteration_geometric_series() {
        let m = single_state(vec![1.0], 0.5);
        let v = value_iteration(&m, 1e-10);
        assert_abs_diff_eq!(v[0], 2.0, epsilon = 1e-10);
    }

    #[test]
    fn zero_rewards_give_zero_values() {
        let cfg = GarnetConfig {
            num_states: 6,
            num_actions: 2,
            ..GarnetConfig::default()
        };
        let g = garnet_generate(&cfg).unwrap();
        let m = Mdp::from_flat(
            6,
            2,
            0.9,
            1.0,
            vec![0.0; 12],
            g.transitions_flat().to_vec(),
        )
        .unwrap();
        assert!(value_iteration(&m, 1e-8).values().iter().all(|v| *v == 0.0));
        let pi = Policy::uniform(6, 2);
        assert!(policy_evaluation(&m, &pi, 1e-8)
            .unwrap()
            .values()
            .iter()
            .all(|v| *v == 0.0));
    }

    #[test]
    fn uniform_policy_on_single_state() {
        let m = single_state(vec![0.0, 1.0], 0.5);
        let v = policy_evaluation(&m, &Policy::uniform(1, 2), 1e-12).unwrap();
        assert_abs_diff_eq!(v[0], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn greedy_prefers_reward_and_breaks_ties_low() {
        let m = Mdp::new(
            0.9,
            1.0,
            vec![vec![0.1, 0.2, 0.9], vec![0.0, 0.3, 0.8]],
            vec![vec![vec![0.5, 0.5]; 3], vec![vec![0.5, 0.5]; 3]],
        )
        .unwrap();
        let pi = greedy_policy(&m, &ValueFunction::new(vec![0.0, 0.0]));
        assert_eq!(pi, Policy::Deterministic(vec![2, 2]));

        let tie = single_state(vec![0.4, 0.7, 0.7], 0.3);
        assert_eq!(
            greedy_policy(&tie, &ValueFunction::new(vec![0.0])),
            Policy::Deterministic(vec![1])
        );
    }

    #[test]
    fn policy_shape_mismatch() {
        let m = single_state(vec![0.0, 1.0], 0.5);
        let err = policy_evaluation(&m, &Policy::uniform(2, 2), 1e-6).unwrap_err();
        assert!(matches!(err, MdpError::ShapeMismatch(_)));
        assert!(on_policy_collapse(&m, &Policy::Deterministic(vec![4])).is_err());
    }

    #[test]
    fn collapse_copies_and_averages() {
        let m = Mdp::new(
            0.5,
            1.0,
            vec![vec![0.0, 1.0], vec![0.3, 0.3]],
            vec![
                vec![vec![1.0, 0.0], vec![0.25, 0.75]],
                vec![vec![0.5, 0.5], vec![0.5, 0.5]],
            ],
        )
        .unwrap();
        let det = on_policy_collapse(&m, &Policy::Deterministic(vec![1, 0])).unwrap();
        assert_eq!(det.row(0, 0), m.row(0, 1));
        assert_eq!(det.reward(1, 0), 0.3);

        let uni = on_policy_collapse(&m, &Policy::uniform(2, 2)).unwrap();
        assert_abs_diff_eq!(uni.reward(0, 0), 0.5);
        assert_eq!(uni.row(1, 0), &[0.5, 0.5]);
        assert_abs_diff_eq!(uni.row(0, 0)[1], 0.375);
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let m = garnet_generate(&GarnetConfig::default().with_seed(3)).unwrap();
        let back = Mdp::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(m, back);
        assert!(Mdp::from_json(r#"{"num_states":1,"num_actions":1,"gamma":0.5,"reward_max":1.0,"rewards":[[0.2]],"transitions":[[[0.9]]]}"#).is_err());
    }
}
