use super::{hausdorff_flat, MetricError};
use crate::mdp::Mdp;
use crate::transport::tv_slices;

/// Closed-form upper bound on `max_s d(s, s)` between two MDPs on the same
/// state and action spaces, using total variation in place of transport.
#[derive(Debug, Clone, PartialEq)]
pub struct TvSurrogate {
    /// `H(X_s, X_s; δ_TV)` for each state.
    pub per_state: Vec<f64>,
    /// `max_s per_state[s] / (1 − γ)`.
    pub bound: f64,
}

pub fn tv_surrogate(m1: &Mdp, m2: &Mdp) -> Result<TvSurrogate, MetricError> {
    if m1.gamma() != m2.gamma() {
        return Err(MetricError::GammaMismatch(m1.gamma(), m2.gamma()));
    }
    if m1.num_states() != m2.num_states() || m1.num_actions() != m2.num_actions() {
        return Err(MetricError::ShapeMismatch(format!(
            "{}x{} vs {}x{} state-action spaces",
            m1.num_states(),
            m1.num_actions(),
            m2.num_states(),
            m2.num_actions()
        )));
    }
    let gamma = m1.gamma();
    let na = m1.num_actions();
    let scale = gamma * m1.reward_max().max(m2.reward_max()) / (1.0 - gamma);
    let mut block = vec![0.0; na * na];
    let per_state: Vec<f64> = (0..m1.num_states())
        .map(|s| {
            for a in 0..na {
                for b in 0..na {
                    let gap = (m1.reward(s, a) - m2.reward(s, b)).abs();
                    block[a * na + b] = gap + scale * tv_slices(m1.row(s, a), m2.row(s, b));
                }
            }
            hausdorff_flat(&block, na, na)
        })
        .collect();
    let bound = per_state.iter().copied().fold(0.0, f64::max) / (1.0 - gamma);
    Ok(TvSurrogate { per_state, bound })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::{garnet_generate, GarnetConfig};
    use crate::metric::{gbsm, FixedPointConfig};
    use approx::assert_abs_diff_eq;

    #[test]
    fn identical_mdps_give_zero() {
        let m = garnet_generate(&GarnetConfig::default().with_seed(1)).unwrap();
        let tv = tv_surrogate(&m, &m).unwrap();
        assert_eq!(tv.bound, 0.0);
    }

    #[test]
    fn reward_shift_only() {
        let base = garnet_generate(&GarnetConfig {
            num_states: 5,
            num_actions: 1,
            gamma: 0.75,
            ..GarnetConfig::default()
        })
        .unwrap();
        let eps = 0.05;
        let low: Vec<f64> = base.rewards_flat().iter().map(|r| r.min(1.0 - eps)).collect();
        let high: Vec<f64> = low.iter().map(|r| r + eps).collect();
        let m1 = Mdp::from_flat(5, 1, 0.75, 1.0, low, base.transitions_flat().to_vec()).unwrap();
        let m2 = Mdp::from_flat(5, 1, 0.75, 1.0, high, base.transitions_flat().to_vec()).unwrap();
        let tv = tv_surrogate(&m1, &m2).unwrap();
        assert_abs_diff_eq!(tv.bound, eps / 0.25, epsilon = 1e-12);
    }

    #[test]
    fn contains_diagonal_of_exact_metric() {
        let cfg = FixedPointConfig::with_tol(1e-8);
        for seed in 0..6 {
            let g = GarnetConfig {
                num_states: 6,
                num_actions: 3,
                gamma: 0.5,
                seed,
                ..GarnetConfig::default()
            };
            let m1 = garnet_generate(&g).unwrap();
            let m2 = garnet_generate(&g.with_seed(seed + 100)).unwrap();
            let d = gbsm(&m1, &m2, &cfg).unwrap();
            let tv = tv_surrogate(&m1, &m2).unwrap();
            assert!(d.diagonal_max() <= tv.bound + cfg.tol);
        }
    }

    #[test]
    fn rejects_mismatched_spaces() {
        let g = GarnetConfig::default();
        let m1 = garnet_generate(&g).unwrap();
        let m2 = garnet_generate(&GarnetConfig { num_states: 4, ..g }).unwrap();
        assert!(matches!(tv_surrogate(&m1, &m2), Err(MetricError::ShapeMismatch(_))));
    }
}
