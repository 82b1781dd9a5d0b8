//! Approximate models of an MDP: state aggregation, sampled (empirical)
//! transition models, Gaussian perturbations, and sample-size formulas.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution as _;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mdp::{Mdp, MdpError};
use crate::metric::{bsm, gbsm, FixedPointConfig, MetricError};

/// Attempts per row before a Gaussian perturbation gives up on an all-zero row.
pub const PERTURB_RETRIES: usize = 100;

#[derive(Debug, Error)]
pub enum ApproxError {
    #[error("invalid aggregation: {0}")]
    InvalidAggregation(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("row ({state}, {action}) vanished after clamping in {attempts} attempts")]
    DegenerateRow {
        state: usize,
        action: usize,
        attempts: usize,
    },
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Mdp(#[from] MdpError),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

/// Maps every state to a representative state `[s]`; representatives map to themselves.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AggregationMap {
    representatives: Vec<usize>,
    assign: Vec<usize>,
}

impl AggregationMap {
    /// Builds a map from the assignment vector; representatives are the
    /// distinct targets in increasing order.
    pub fn new(assign: Vec<usize>) -> Result<Self, ApproxError> {
        let n = assign.len();
        if n == 0 {
            return Err(ApproxError::InvalidAggregation("no states".into()));
        }
        let mut reps: Vec<usize> = assign.clone();
        reps.sort_unstable();
        reps.dedup();
        for &u in &reps {
            if u >= n {
                return Err(ApproxError::InvalidAggregation(format!(
                    "target {u} out of range for {n} states"
                )));
            }
            if assign[u] != u {
                return Err(ApproxError::InvalidAggregation(format!(
                    "representative {u} maps to {}",
                    assign[u]
                )));
            }
        }
        Ok(AggregationMap {
            representatives: reps,
            assign,
        })
    }

    pub fn identity(num_states: usize) -> Self {
        AggregationMap {
            representatives: (0..num_states).collect(),
            assign: (0..num_states).collect(),
        }
    }

    /// Random aggregation replacing `round(fraction·|S|)` states (at most
    /// `|S| − 1`). States are shuffled by `seed`; when at most half are
    /// replaced, consecutive shuffled pairs are merged with the first as the
    /// representative. Larger fractions keep the first `|S| − k` shuffled
    /// states as representatives and assign the rest to them round-robin.
    pub fn random(num_states: usize, fraction: f64, seed: u64) -> Result<Self, ApproxError> {
        if num_states == 0 {
            return Err(ApproxError::InvalidAggregation("no states".into()));
        }
        if !(0.0..=1.0).contains(&fraction) {
            return Err(ApproxError::InvalidParameter(format!(
                "aggregation fraction {fraction} not in [0, 1]"
            )));
        }
        let k = ((fraction * num_states as f64).round() as usize).min(num_states - 1);
        let mut order: Vec<usize> = (0..num_states).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let mut assign: Vec<usize> = (0..num_states).collect();
        if 2 * k <= num_states {
            for pair in order.chunks(2).take(k) {
                assign[pair[1]] = pair[0];
            }
        } else {
            let (reps, rest) = order.split_at(num_states - k);
            for (i, &s) in rest.iter().enumerate() {
                assign[s] = reps[i % reps.len()];
            }
        }
        Self::new(assign)
    }

    pub fn num_states(&self) -> usize {
        self.assign.len()
    }

    pub fn representatives(&self) -> &[usize] {
        &self.representatives
    }

    pub fn assign(&self) -> &[usize] {
        &self.assign
    }

    /// `[s]`.
    pub fn rep(&self, s: usize) -> usize {
        self.assign[s]
    }

    pub fn is_identity(&self) -> bool {
        self.assign.iter().enumerate().all(|(s, &u)| s == u)
    }
}

/// The aggregated MDP on the original index set: state `s` takes the rewards
/// of `[s]`, and successor mass is moved onto representatives.
pub fn build_aggregated_mdp(m: &Mdp, agg: &AggregationMap) -> Result<Mdp, ApproxError> {
    let (ns, na) = (m.num_states(), m.num_actions());
    if agg.num_states() != ns {
        return Err(ApproxError::InvalidAggregation(format!(
            "map covers {} states, MDP has {ns}",
            agg.num_states()
        )));
    }
    let mut rewards = Vec::with_capacity(ns * na);
    let mut transitions = vec![0.0; ns * na * ns];
    for s in 0..ns {
        let u = agg.rep(s);
        for a in 0..na {
            rewards.push(m.reward(u, a));
            let out = &mut transitions[(s * na + a) * ns..(s * na + a + 1) * ns];
            for (s2, &p) in m.row(u, a).iter().enumerate() {
                out[agg.rep(s2)] += p;
            }
        }
    }
    Ok(Mdp::from_flat(ns, na, m.gamma(), m.reward_max(), rewards, transitions)?)
}

/// Metric distortion caused by an aggregation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggregationSigmas {
    /// `max_s d(s, [s])` between the MDP and its aggregated version.
    pub sigma: f64,
    /// `max_s d~(s, [s])` under the within-MDP metric.
    pub sigma_tilde: f64,
}

pub fn aggregation_sigmas(
    m: &Mdp,
    agg: &AggregationMap,
    cfg: &FixedPointConfig,
) -> Result<AggregationSigmas, ApproxError> {
    let aggregated = build_aggregated_mdp(m, agg)?;
    let d = gbsm(m, &aggregated, cfg)?;
    let within = bsm(m, cfg)?;
    let sigma = (0..m.num_states()).map(|s| d.get(s, agg.rep(s))).fold(0.0, f64::max);
    let sigma_tilde = (0..m.num_states())
        .map(|s| within.get(s, agg.rep(s)))
        .fold(0.0, f64::max);
    Ok(AggregationSigmas { sigma, sigma_tilde })
}

/// Replaces every transition row by the empirical distribution of `k` i.i.d.
/// successor draws. Rewards are kept.
pub fn build_empirical_mdp(m: &Mdp, k: usize, seed: u64) -> Result<Mdp, ApproxError> {
    if k == 0 {
        return Err(ApproxError::InvalidParameter("sample count must be positive".into()));
    }
    let (ns, na) = (m.num_states(), m.num_actions());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut transitions = vec![0.0; ns * na * ns];
    let mut counts = vec![0usize; ns];
    for s in 0..ns {
        for a in 0..na {
            let sampler = WeightedIndex::new(m.row(s, a)).expect("validated transition row");
            counts.iter_mut().for_each(|c| *c = 0);
            for _ in 0..k {
                counts[sampler.sample(&mut rng)] += 1;
            }
            let out = &mut transitions[(s * na + a) * ns..(s * na + a + 1) * ns];
            for (slot, &c) in out.iter_mut().zip(&counts) {
                *slot = c as f64 / k as f64;
            }
        }
    }
    Ok(Mdp::from_flat(
        ns,
        na,
        m.gamma(),
        m.reward_max(),
        m.rewards_flat().to_vec(),
        transitions,
    )?)
}

/// Adds `N(0, std²)` noise to every positive transition probability, clamps at
/// zero and renormalizes each row. Zero entries stay zero. Rewards are kept.
pub fn perturb_mdp_gaussian(m: &Mdp, std: f64, seed: u64) -> Result<Mdp, ApproxError> {
    if !(std.is_finite() && std >= 0.0) {
        return Err(ApproxError::InvalidParameter(format!("noise std {std}")));
    }
    if std == 0.0 {
        return Ok(m.clone());
    }
    let (ns, na) = (m.num_states(), m.num_actions());
    let noise = Normal::new(0.0, std).expect("positive std");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut transitions = vec![0.0; ns * na * ns];
    let mut row = vec![0.0; ns];
    for s in 0..ns {
        for a in 0..na {
            let original = m.row(s, a);
            let mut total = 0.0;
            for _ in 0..PERTURB_RETRIES {
                for (x, &p) in row.iter_mut().zip(original) {
                    *x = if p > 0.0 { (p + noise.sample(&mut rng)).max(0.0) } else { 0.0 };
                }
                total = row.iter().sum();
                if total > 0.0 {
                    break;
                }
            }
            if total <= 0.0 {
                return Err(ApproxError::DegenerateRow {
                    state: s,
                    action: a,
                    attempts: PERTURB_RETRIES,
                });
            }
            let out = &mut transitions[(s * na + a) * ns..(s * na + a + 1) * ns];
            for (slot, x) in out.iter_mut().zip(&row) {
                *slot = x / total;
            }
        }
    }
    Ok(Mdp::from_flat(
        ns,
        na,
        m.gamma(),
        m.reward_max(),
        m.rewards_flat().to_vec(),
        transitions,
    )?)
}

fn check_sample_params(epsilon: f64, alpha: f64, gamma: f64, reward_max: f64) -> Result<(), ApproxError> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(ApproxError::InvalidParameter(format!("epsilon {epsilon}")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(ApproxError::InvalidParameter(format!("alpha {alpha}")));
    }
    if !(0.0..1.0).contains(&gamma) {
        return Err(ApproxError::InvalidParameter(format!("gamma {gamma}")));
    }
    if !(reward_max > 0.0 && reward_max.is_finite()) {
        return Err(ApproxError::InvalidParameter(format!("reward_max {reward_max}")));
    }
    Ok(())
}

/// Samples per state-action pair so that the metric estimation error is at
/// most `epsilon` with probability at least `1 − alpha`:
/// `K = −ln(α/2)·γ²R̄²|S|² / (2ε²(1−γ)⁴)`.
pub fn sample_complexity_ssa(
    epsilon: f64,
    alpha: f64,
    gamma: f64,
    reward_max: f64,
    num_states: usize,
) -> Result<f64, ApproxError> {
    check_sample_params(epsilon, alpha, gamma, reward_max)?;
    let s = num_states as f64;
    let num = -(alpha / 2.0).ln() * gamma.powi(2) * reward_max.powi(2) * s * s;
    Ok(num / (2.0 * epsilon.powi(2) * (1.0 - gamma).powi(4)))
}

/// Samples per state-action pair for an `epsilon`-accurate value estimate:
/// the metric sample size at accuracy `ε(1−γ)`.
pub fn sample_complexity_model_based_rl(
    epsilon: f64,
    alpha: f64,
    gamma: f64,
    reward_max: f64,
    num_states: usize,
) -> Result<f64, ApproxError> {
    check_sample_params(epsilon, alpha, gamma, reward_max)?;
    sample_complexity_ssa(epsilon * (1.0 - gamma), alpha, gamma, reward_max, num_states)
}

/// One observed transition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub s: usize,
    pub a: usize,
    pub s_next: usize,
    pub r: f64,
}

/// A batch of observed transitions, stored as CSV with header `s,a,s_next,r`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub tuples: Vec<Transition>,
}

impl Dataset {
    pub fn new(tuples: Vec<Transition>) -> Self {
        Dataset { tuples }
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    /// `per_pair` transitions from every state-action pair of `m`, with the
    /// pair's reward.
    pub fn sample_from(m: &Mdp, per_pair: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut tuples = Vec::with_capacity(m.num_states() * m.num_actions() * per_pair);
        for s in 0..m.num_states() {
            for a in 0..m.num_actions() {
                let sampler = WeightedIndex::new(m.row(s, a)).expect("validated transition row");
                for _ in 0..per_pair {
                    tuples.push(Transition {
                        s,
                        a,
                        s_next: sampler.sample(&mut rng),
                        r: m.reward(s, a),
                    });
                }
            }
        }
        Dataset { tuples }
    }

    /// Checks index ranges and `r ∈ [0, reward_max]`.
    pub fn validate(&self, num_states: usize, num_actions: usize, reward_max: f64) -> Result<(), ApproxError> {
        for (k, t) in self.tuples.iter().enumerate() {
            if t.s >= num_states || t.s_next >= num_states || t.a >= num_actions {
                return Err(ApproxError::InvalidDataset(format!(
                    "tuple {k} ({}, {}, {}) is out of range",
                    t.s, t.a, t.s_next
                )));
            }
            if !(0.0..=reward_max).contains(&t.r) {
                return Err(ApproxError::InvalidDataset(format!(
                    "tuple {k} has reward {} outside [0, {reward_max}]",
                    t.r
                )));
            }
        }
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self, ApproxError> {
        let mut rdr = csv::Reader::from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["s", "a", "s_next", "r"] {
            return Err(ApproxError::InvalidDataset(format!(
                "expected header s,a,s_next,r, got {}",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let tuples = rdr.deserialize().collect::<Result<Vec<Transition>, _>>()?;
        Ok(Dataset { tuples })
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), ApproxError> {
        let mut w = csv::Writer::from_writer(writer);
        for t in &self.tuples {
            w.serialize(t)?;
        }
        if self.tuples.is_empty() {
            w.write_record(["s", "a", "s_next", "r"])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ApproxError> {
        Self::read_csv(File::open(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ApproxError> {
        self.write_csv(File::create(path)?)
    }
}
