use rayon::prelude::*;

use super::{hausdorff_flat, FixedPointConfig, MetricError, MetricMatrix};
use crate::mdp::{on_policy_collapse, Mdp, Policy};
use crate::transport::TransportProblem;

/// How the action sets of two states are compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Coupling {
    /// Hausdorff distance between the two state-action cost sets.
    Hausdorff,
    /// Maximum over a shared action index.
    SharedAction,
}

/// When the fixed-point iteration stops.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopRule {
    /// Residual `‖dₙ − dₙ₋₁‖∞ ≤ tol` and a bound on `‖dₙ − d*‖∞` at most
    /// `tol`: either the posterior bound `γ/(1−γ)·‖dₙ − dₙ₋₁‖∞` or the prior
    /// bound `γⁿ·R̄/(1−γ)` (from zero).
    ErrorBound,
    /// Residual `‖dₙ − dₙ₋₁‖∞ ≤ tol`.
    Residual,
}

/// State-action cost `δ(d)` for every pair, row-major
/// `(|S₁|·|A₁|) × (|S₂|·|A₂|)` with row index `s·|A₁| + a`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairCost {
    actions1: usize,
    actions2: usize,
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl PairCost {
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    /// `δ((s, a), (s2, a2))`.
    pub fn get(&self, s: usize, a: usize, s2: usize, a2: usize) -> f64 {
        self.values[(s * self.actions1 + a) * self.cols + s2 * self.actions2 + a2]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }
}

fn check_pair(m1: &Mdp, m2: &Mdp) -> Result<(), MetricError> {
    if m1.gamma() != m2.gamma() {
        return Err(MetricError::GammaMismatch(m1.gamma(), m2.gamma()));
    }
    Ok(())
}

fn check_metric_shape(m1: &Mdp, m2: &Mdp, d: &MetricMatrix) -> Result<(), MetricError> {
    if (d.rows(), d.cols()) != (m1.num_states(), m2.num_states()) {
        return Err(MetricError::ShapeMismatch(format!(
            "metric is {}x{}, MDPs have {} and {} states",
            d.rows(),
            d.cols(),
            m1.num_states(),
            m2.num_states()
        )));
    }
    Ok(())
}

/// `δ(d)((s,a),(s2,a2)) = |R₁(s,a) − R₂(s2,a2)| + γ·W₁(P₁(·|s,a), P₂(·|s2,a2); d)`.
pub fn delta_entry(
    m1: &Mdp,
    m2: &Mdp,
    d: &MetricMatrix,
    (s, a): (usize, usize),
    (s2, a2): (usize, usize),
) -> Result<f64, MetricError> {
    check_pair(m1, m2)?;
    check_metric_shape(m1, m2, d)?;
    let mut problem = TransportProblem::new(m1.row(s, a), m2.row(s2, a2));
    let w = problem.solve(|i, j| d.get(i, j))?;
    Ok((m1.reward(s, a) - m2.reward(s2, a2)).abs() + m1.gamma() * w)
}

/// The full state-action cost table `δ(d)`.
pub fn delta_cost(m1: &Mdp, m2: &Mdp, d: &MetricMatrix) -> Result<PairCost, MetricError> {
    check_pair(m1, m2)?;
    check_metric_shape(m1, m2, d)?;
    let (na1, na2) = (m1.num_actions(), m2.num_actions());
    let rows = m1.num_states() * na1;
    let cols = m2.num_states() * na2;
    let mut values = vec![0.0; rows * cols];
    values
        .par_chunks_mut(cols)
        .enumerate()
        .try_for_each(|(r, out)| -> Result<(), MetricError> {
            let (s, a) = (r / na1, r % na1);
            for (c, slot) in out.iter_mut().enumerate() {
                let (s2, a2) = (c / na2, c % na2);
                let mut problem = TransportProblem::new(m1.row(s, a), m2.row(s2, a2));
                let w = problem.solve(|i, j| d.get(i, j))?;
                *slot = (m1.reward(s, a) - m2.reward(s2, a2)).abs() + m1.gamma() * w;
            }
            Ok(())
        })?;
    Ok(PairCost {
        actions1: na1,
        actions2: na2,
        rows,
        cols,
        values,
    })
}

/// Fixed-point solver over all state pairs. Transport problems persist across
/// sweeps so each one warm-starts from its previous optimal basis.
struct Engine<'a> {
    m1: &'a Mdp,
    m2: &'a Mdp,
    coupling: Coupling,
    /// `m1 == m2`: only `s ≤ s2` is computed and mirrored.
    symmetric: bool,
    /// Action pairs per state pair.
    k: usize,
    problems: Vec<Option<TransportProblem>>,
}

impl<'a> Engine<'a> {
    fn new(m1: &'a Mdp, m2: &'a Mdp, coupling: Coupling) -> Self {
        let k = match coupling {
            Coupling::Hausdorff => m1.num_actions() * m2.num_actions(),
            Coupling::SharedAction => m1.num_actions(),
        };
        let mut problems = Vec::new();
        problems.resize_with(m1.num_states() * m2.num_states() * k, || None);
        Engine {
            m1,
            m2,
            coupling,
            symmetric: m1 == m2,
            k,
            problems,
        }
    }

    fn action_pair(&self, idx: usize) -> (usize, usize) {
        match self.coupling {
            Coupling::Hausdorff => (idx / self.m2.num_actions(), idx % self.m2.num_actions()),
            Coupling::SharedAction => (idx, idx),
        }
    }

    /// One synchronous application of the metric operator to `prev`.
    fn sweep(&mut self, prev: &[f64], next: &mut [f64]) -> Result<(), MetricError> {
        let (m1, m2) = (self.m1, self.m2);
        let n2 = m2.num_states();
        let gamma = m1.gamma();
        let (k, coupling, symmetric) = (self.k, self.coupling, self.symmetric);
        let na2 = m2.num_actions();
        let this = &*self;
        let pairs: Vec<(usize, usize)> = (0..k).map(|idx| this.action_pair(idx)).collect();

        next.par_chunks_mut(n2)
            .zip(self.problems.par_chunks_mut(n2 * k))
            .enumerate()
            .try_for_each(|(s, (out, problems))| -> Result<(), MetricError> {
                let mut block = vec![0.0; k];
                let start = if symmetric { s } else { 0 };
                for s2 in start..n2 {
                    for (idx, &(a, a2)) in pairs.iter().enumerate() {
                        let gap = (m1.reward(s, a) - m2.reward(s2, a2)).abs();
                        let w = if gamma == 0.0 {
                            0.0
                        } else {
                            let slot = &mut problems[s2 * k + idx];
                            let problem = slot.get_or_insert_with(|| {
                                TransportProblem::new(m1.row(s, a), m2.row(s2, a2))
                            });
                            problem.solve(|i, j| prev[i * n2 + j])?
                        };
                        block[idx] = gap + gamma * w;
                    }
                    out[s2] = match coupling {
                        Coupling::Hausdorff => hausdorff_flat(&block, m1.num_actions(), na2),
                        Coupling::SharedAction => block.iter().copied().fold(0.0, f64::max),
                    };
                }
                Ok(())
            })?;

        if symmetric {
            for s in 0..n2 {
                for s2 in 0..s {
                    next[s * n2 + s2] = next[s2 * n2 + s];
                }
            }
        }
        Ok(())
    }

    fn run(
        mut self,
        init: Option<Vec<f64>>,
        cfg: &FixedPointConfig,
        rule: StopRule,
        observer: &mut dyn FnMut(usize, &[f64], f64),
    ) -> Result<MetricMatrix, MetricError> {
        cfg.validate()?;
        let (n1, n2) = (self.m1.num_states(), self.m2.num_states());
        let gamma = self.m1.gamma();
        let reward_max = self.m1.reward_max().max(self.m2.reward_max());
        let max_iters = cfg.max_iters_for(gamma, reward_max);
        let warm = init.is_some();
        let mut d = init.unwrap_or_else(|| vec![0.0; n1 * n2]);
        let mut next = vec![0.0; n1 * n2];
        let mut residual = f64::INFINITY;
        for n in 1..=max_iters {
            self.sweep(&d, &mut next)?;
            residual = d
                .iter()
                .zip(&next)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            std::mem::swap(&mut d, &mut next);
            observer(n, &d, residual);
            let done = match rule {
                StopRule::Residual => residual <= cfg.tol,
                StopRule::ErrorBound => {
                    let posterior = gamma / (1.0 - gamma) * residual;
                    let prior = gamma.powi(n as i32) * reward_max / (1.0 - gamma);
                    residual <= cfg.tol && (posterior <= cfg.tol || (!warm && prior <= cfg.tol))
                }
            };
            if done {
                let mut out = MetricMatrix::new(n1, n2, d)?;
                out.iterations = n;
                out.residual = residual;
                return Ok(out);
            }
        }
        let mut out = MetricMatrix::new(n1, n2, d)?;
        out.iterations = max_iters;
        out.residual = residual;
        out.converged = false;
        Err(MetricError::MaxItersExceeded(Box::new(out)))
    }
}

/// Generalized bisimulation metric between the states of `m1` and `m2`, with
/// action sets compared by the Hausdorff distance.
pub fn gbsm(m1: &Mdp, m2: &Mdp, cfg: &FixedPointConfig) -> Result<MetricMatrix, MetricError> {
    gbsm_traced(m1, m2, cfg, |_, _, _| {})
}

/// [`gbsm`] reporting each iterate `(sweep, dₙ, ‖dₙ − dₙ₋₁‖∞)` to `observer`.
pub fn gbsm_traced<F: FnMut(usize, &[f64], f64)>(
    m1: &Mdp,
    m2: &Mdp,
    cfg: &FixedPointConfig,
    mut observer: F,
) -> Result<MetricMatrix, MetricError> {
    check_pair(m1, m2)?;
    Engine::new(m1, m2, Coupling::Hausdorff).run(None, cfg, StopRule::ErrorBound, &mut observer)
}

/// [`gbsm`] started from `init` instead of zero.
pub fn gbsm_warm_start(
    m1: &Mdp,
    m2: &Mdp,
    init: &MetricMatrix,
    cfg: &FixedPointConfig,
    rule: StopRule,
) -> Result<MetricMatrix, MetricError> {
    check_pair(m1, m2)?;
    check_metric_shape(m1, m2, init)?;
    Engine::new(m1, m2, Coupling::Hausdorff).run(
        Some(init.as_slice().to_vec()),
        cfg,
        rule,
        &mut |_, _, _| {},
    )
}

/// Bisimulation metric within one MDP (maximum over shared actions).
pub fn bsm(m: &Mdp, cfg: &FixedPointConfig) -> Result<MetricMatrix, MetricError> {
    Engine::new(m, m, Coupling::SharedAction).run(None, cfg, StopRule::ErrorBound, &mut |_, _, _| {})
}

/// Metric between two MDPs that compares states action by action:
/// `d(s,s2) = max_a δ(d)((s,a),(s2,a))`.
pub fn gbsm_conference(m1: &Mdp, m2: &Mdp, cfg: &FixedPointConfig) -> Result<MetricMatrix, MetricError> {
    check_pair(m1, m2)?;
    if m1.num_actions() != m2.num_actions() {
        return Err(MetricError::ActionSpaceMismatch(m1.num_actions(), m2.num_actions()));
    }
    Engine::new(m1, m2, Coupling::SharedAction).run(None, cfg, StopRule::ErrorBound, &mut |_, _, _| {})
}

/// On-policy metric: both MDPs follow `pi` and are compared through their
/// induced Markov reward processes.
pub fn gbsm_on_policy(
    m1: &Mdp,
    m2: &Mdp,
    pi: &Policy,
    cfg: &FixedPointConfig,
) -> Result<MetricMatrix, MetricError> {
    gbsm_on_policy_pair(m1, pi, m2, pi, cfg)
}

/// On-policy metric with a separate policy for each MDP.
pub fn gbsm_on_policy_pair(
    m1: &Mdp,
    pi1: &Policy,
    m2: &Mdp,
    pi2: &Policy,
    cfg: &FixedPointConfig,
) -> Result<MetricMatrix, MetricError> {
    check_pair(m1, m2)?;
    let c1 = on_policy_collapse(m1, pi1)?;
    let c2 = on_policy_collapse(m2, pi2)?;
    gbsm(&c1, &c2, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::{garnet_generate, policy_evaluation, value_iteration, GarnetConfig};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    const TOL: f64 = 1e-8;

    fn cfg() -> FixedPointConfig {
        FixedPointConfig::with_tol(TOL)
    }

    fn one_state(rewards: Vec<f64>, gamma: f64) -> Mdp {
        let na = rewards.len();
        Mdp::new(gamma, 1.0, vec![rewards], vec![vec![vec![1.0]; na]]).unwrap()
    }

    fn garnet(states: usize, actions: usize, gamma: f64, seed: u64) -> Mdp {
        garnet_generate(&GarnetConfig {
            num_states: states,
            num_actions: actions,
            branching_fraction: 0.5,
            gamma,
            reward_max: 1.0,
            seed,
        })
        .unwrap()
    }

    fn with_rewards(m: &Mdp, rewards: Vec<f64>) -> Mdp {
        Mdp::from_flat(
            m.num_states(),
            m.num_actions(),
            m.gamma(),
            m.reward_max(),
            rewards,
            m.transitions_flat().to_vec(),
        )
        .unwrap()
    }

    #[test]
    fn single_state_fixed_point() {
        let m1 = one_state(vec![1.0], 0.5);
        let m2 = one_state(vec![0.0], 0.5);
        let d = gbsm(&m1, &m2, &cfg()).unwrap();
        assert_abs_diff_eq!(d.get(0, 0), 2.0, epsilon = TOL / 0.5);
        let dc = gbsm_conference(&m1, &m2, &cfg()).unwrap();
        assert_abs_diff_eq!(dc.get(0, 0), 2.0, epsilon = TOL / 0.5);
    }

    #[test]
    fn on_policy_single_state() {
        // Uniform policy: collapsed rewards 0.7 and 0.2.
        let m1 = one_state(vec![0.9, 0.5], 0.5);
        let m2 = one_state(vec![0.4, 0.0], 0.5);
        let d = gbsm_on_policy(&m1, &m2, &Policy::uniform(1, 2), &cfg()).unwrap();
        assert_abs_diff_eq!(d.get(0, 0), 1.0, epsilon = TOL / 0.5);
    }

    #[test]
    fn delta_on_point_masses() {
        let m1 = one_state(vec![1.0], 0.7);
        let m2 = one_state(vec![0.0], 0.7);
        let d = MetricMatrix::new(1, 1, vec![0.4]).unwrap();
        let delta = delta_cost(&m1, &m2, &d).unwrap();
        assert_abs_diff_eq!(delta.get(0, 0, 0, 0), 1.0 + 0.7 * 0.4, epsilon = 1e-15);
    }

    #[test]
    fn delta_vanishes_for_equal_rewards_and_zero_metric() {
        let m = garnet(6, 3, 0.9, 1);
        let delta = delta_cost(&m, &m, &MetricMatrix::zeros(6, 6)).unwrap();
        for s in 0..6 {
            for a in 0..3 {
                assert_eq!(delta.get(s, a, s, a), 0.0);
            }
        }
        let flat = with_rewards(&m, vec![0.5; 18]);
        let delta = delta_cost(&flat, &flat, &MetricMatrix::zeros(6, 6)).unwrap();
        assert!(delta.as_slice().iter().all(|x| *x == 0.0));
        assert_eq!(delta.shape(), (18, 18));
    }

    #[test]
    fn zero_rewards_give_zero_metric() {
        let m1 = with_rewards(&garnet(5, 2, 0.9, 2), vec![0.0; 10]);
        let m2 = with_rewards(&garnet(3, 4, 0.9, 3), vec![0.0; 12]);
        let d = gbsm(&m1, &m2, &cfg()).unwrap();
        assert!(d.as_slice().iter().all(|x| *x == 0.0));
        assert_eq!((d.rows(), d.cols()), (5, 3));
    }

    #[test]
    fn identical_mdps_have_zero_diagonal() {
        let m = garnet(8, 3, 0.9, 4);
        let d = gbsm(&m, &m, &cfg()).unwrap();
        assert!(d.diagonal_max() <= TOL / 0.1);
        let b = bsm(&m, &cfg()).unwrap();
        assert_eq!(b.diagonal_max(), 0.0);
        for s in 0..8 {
            for t in 0..8 {
                assert_eq!(b.get(s, t), b.get(t, s));
            }
        }
    }

    #[test]
    fn bisimilar_states_are_at_distance_zero() {
        // States 0 and 1 share rewards and successor distributions.
        let m = Mdp::new(
            0.8,
            1.0,
            vec![vec![0.3, 0.6], vec![0.3, 0.6], vec![1.0, 0.0]],
            vec![
                vec![vec![0.0, 0.5, 0.5], vec![0.2, 0.2, 0.6]],
                vec![vec![0.0, 0.5, 0.5], vec![0.2, 0.2, 0.6]],
                vec![vec![0.0, 0.0, 1.0], vec![1.0, 0.0, 0.0]],
            ],
        )
        .unwrap();
        let b = bsm(&m, &cfg()).unwrap();
        assert_eq!(b.get(0, 1), 0.0);
        assert!(b.get(0, 2) > 0.1);
    }

    #[test]
    fn conference_metric_on_identical_mdps_is_bsm() {
        let m = garnet(7, 3, 0.5, 5);
        let c = gbsm_conference(&m, &m, &cfg()).unwrap();
        let b = bsm(&m, &cfg()).unwrap();
        assert!(c.sup_distance(&b) <= 2.0 * TOL);
    }

    #[test]
    fn conference_rejects_different_action_counts() {
        let m1 = garnet(4, 2, 0.5, 6);
        let m2 = garnet(4, 3, 0.5, 7);
        assert!(matches!(
            gbsm_conference(&m1, &m2, &cfg()),
            Err(MetricError::ActionSpaceMismatch(2, 3))
        ));
        assert!(gbsm(&m1, &m2, &cfg()).is_ok());
    }

    #[test]
    fn gamma_mismatch_is_rejected() {
        let m1 = garnet(4, 2, 0.5, 6);
        let m2 = garnet(4, 2, 0.9, 6);
        assert!(matches!(gbsm(&m1, &m2, &cfg()), Err(MetricError::GammaMismatch(..))));
    }

    #[test]
    fn max_iters_exceeded_returns_partial_iterate() {
        let m1 = garnet(4, 2, 0.9, 8);
        let m2 = garnet(4, 2, 0.9, 9);
        let capped = FixedPointConfig {
            tol: 1e-12,
            max_iters: Some(3),
        };
        match gbsm(&m1, &m2, &capped) {
            Err(MetricError::MaxItersExceeded(partial)) => {
                assert!(!partial.converged);
                assert_eq!(partial.iterations, 3);
                assert!(partial.max() > 0.0);
            }
            other => panic!("expected MaxItersExceeded, got {other:?}"),
        }
    }

    #[test]
    fn warm_start_reaches_same_fixed_point() {
        let m1 = garnet(6, 2, 0.8, 10);
        let m2 = garnet(5, 3, 0.8, 11);
        let cold = gbsm(&m1, &m2, &cfg()).unwrap();
        let init = MetricMatrix::new(6, 5, vec![0.5; 30]).unwrap();
        let warm = gbsm_warm_start(&m1, &m2, &init, &cfg(), StopRule::Residual).unwrap();
        assert!(warm.residual <= TOL);
        assert!(cold.sup_distance(&warm) <= 2.0 * TOL / 0.2);
    }

    #[test]
    fn gamma_zero_is_reward_hausdorff() {
        let m1 = one_state(vec![0.2, 0.9], 0.0);
        let m2 = one_state(vec![0.5], 0.0);
        let d = gbsm(&m1, &m2, &cfg()).unwrap();
        assert_abs_diff_eq!(d.get(0, 0), 0.4, epsilon = 1e-15);
        assert!(d.iterations <= 2);
    }

    fn pair_strategy() -> impl Strategy<Value = (usize, usize, usize, f64, u64)> {
        (2usize..6, 2usize..6, 1usize..4, prop::sample::select(vec![0.1, 0.5, 0.9]), any::<u64>())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn symmetric_under_swapping((n1, n2, na, gamma, seed) in pair_strategy()) {
            let m1 = garnet(n1, na, gamma, seed);
            let m2 = garnet(n2, na + 1, gamma, seed ^ 1);
            let d12 = gbsm(&m1, &m2, &cfg()).unwrap();
            let d21 = gbsm(&m2, &m1, &cfg()).unwrap();
            prop_assert!(d12.sup_distance(&d21.transpose()) <= 2.0 * TOL);
        }

        #[test]
        fn triangle_inequality_across_three_mdps((n1, n2, na, gamma, seed) in pair_strategy()) {
            let m1 = garnet(n1, na, gamma, seed);
            let m2 = garnet(n2, na, gamma, seed ^ 1);
            let m3 = garnet(3, na, gamma, seed ^ 2);
            let d12 = gbsm(&m1, &m2, &cfg()).unwrap();
            let d13 = gbsm(&m1, &m3, &cfg()).unwrap();
            let d32 = gbsm(&m3, &m2, &cfg()).unwrap();
            for s in 0..n1 {
                for t in 0..n2 {
                    for u in 0..3 {
                        prop_assert!(d12.get(s, t) <= d13.get(s, u) + d32.get(u, t) + 3.0 * TOL);
                    }
                }
            }
        }

        #[test]
        fn iterates_increase_and_stay_capped((n1, n2, na, gamma, seed) in pair_strategy()) {
            let m1 = garnet(n1, na, gamma, seed);
            let m2 = garnet(n2, na, gamma, seed ^ 1);
            let mut prev = vec![0.0; n1 * n2];
            let mut monotone = true;
            let d = gbsm_traced(&m1, &m2, &cfg(), |_, dn, _| {
                monotone &= dn.iter().zip(&prev).all(|(a, b)| *a >= b - 1e-12);
                prev.copy_from_slice(dn);
            }).unwrap();
            prop_assert!(monotone);
            prop_assert!(d.max() <= m1.value_cap() + TOL);
        }

        #[test]
        fn dominated_by_conference_metric((n1, n2, na, gamma, seed) in pair_strategy()) {
            let m1 = garnet(n1, na, gamma, seed);
            let m2 = garnet(n2, na, gamma, seed ^ 1);
            let d = gbsm(&m1, &m2, &cfg()).unwrap();
            let dc = gbsm_conference(&m1, &m2, &cfg()).unwrap();
            for (a, b) in d.as_slice().iter().zip(dc.as_slice()) {
                prop_assert!(*a <= b + 2.0 * TOL);
            }
        }

        #[test]
        fn bounds_optimal_value_gaps((n1, n2, na, gamma, seed) in pair_strategy()) {
            let m1 = garnet(n1, na, gamma, seed);
            let m2 = garnet(n2, na + 1, gamma, seed ^ 1);
            let d = gbsm(&m1, &m2, &cfg()).unwrap();
            let v1 = value_iteration(&m1, TOL * 0.01);
            let v2 = value_iteration(&m2, TOL * 0.01);
            let slack = TOL * (1.0 + 1.0 / (1.0 - gamma));
            for s in 0..n1 {
                for t in 0..n2 {
                    prop_assert!((v1[s] - v2[t]).abs() <= d.get(s, t) + slack);
                }
            }
        }

        #[test]
        fn on_policy_metric_bounds_policy_values((n1, n2, na, gamma, seed) in pair_strategy()) {
            let m1 = garnet(n1, na, gamma, seed);
            let m2 = garnet(n1, na, gamma, seed ^ 1);
            let pi = Policy::deterministic((0..n1).map(|s| (s + n2) % na).collect());
            let d = gbsm_on_policy(&m1, &m2, &pi, &cfg()).unwrap();
            let v1 = policy_evaluation(&m1, &pi, TOL * 0.01).unwrap();
            let v2 = policy_evaluation(&m2, &pi, TOL * 0.01).unwrap();
            let slack = TOL * (1.0 + 1.0 / (1.0 - gamma));
            for s in 0..n1 {
                for t in 0..n1 {
                    prop_assert!((v1[s] - v2[t]).abs() <= d.get(s, t) + slack);
                }
            }
            let stochastic = pi.to_stochastic(na);
            let ds = gbsm_on_policy(&m1, &m2, &stochastic, &cfg()).unwrap();
            prop_assert!(d.sup_distance(&ds) <= 1e-12);
        }
    }
}
