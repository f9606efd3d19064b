//! Finite MDPs, policies and the environments built on them.

mod builders;
mod gridworld;
pub(crate) mod policy;
pub(crate) mod sim;

pub use builders::{build_random_mdp, build_two_action_bandit};
pub use gridworld::{build_gridworld, Cell, GridAction, GridworldSpec};
pub use policy::{DeterministicPolicy, Policy, StochasticPolicy};
pub use sim::{is_absorbing, rollout, sample_index, sample_transition, Step, Trajectory};

use alloc::format;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub(crate) const PROB_TOL: f64 = 1e-12;

/// A finite discounted MDP `(S, A, P, r, gamma, mu)`.
///
/// Transition and reward tables are stored flat, row-major in `(s, a, s')`
/// and `(s, a)`. The JSON form uses nested arrays (see [`MdpWire`]).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MdpWire", into = "MdpWire")]
pub struct TabularMdp {
    n_states: usize,
    n_actions: usize,
    transition: Vec<f64>,
    reward: Vec<f64>,
    gamma: f64,
    initial_dist: Vec<f64>,
    reward_bounds: (f64, f64),
}

impl TabularMdp {
    /// Validates every invariant; reward bounds are the observed min/max.
    pub fn new(
        n_states: usize,
        n_actions: usize,
        transition: Vec<f64>,
        reward: Vec<f64>,
        gamma: f64,
        initial_dist: Vec<f64>,
    ) -> Result<Self> {
        let lo = reward.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = reward.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Self::with_reward_bounds(
            n_states,
            n_actions,
            transition,
            reward,
            gamma,
            initial_dist,
            (lo, hi),
        )
    }

    /// Like [`TabularMdp::new`] but records declared bounds, which must
    /// contain every reward entry.
    pub fn with_reward_bounds(
        n_states: usize,
        n_actions: usize,
        transition: Vec<f64>,
        reward: Vec<f64>,
        gamma: f64,
        initial_dist: Vec<f64>,
        reward_bounds: (f64, f64),
    ) -> Result<Self> {
        if n_states == 0 || n_actions == 0 {
            return Err(Error::InvalidMdp(format!(
                "need at least one state and action, got {n_states}x{n_actions}"
            )));
        }
        if !(0.0..1.0).contains(&gamma) {
            return Err(Error::InvalidMdp(format!("gamma {gamma} outside [0, 1)")));
        }
        let sa = n_states * n_actions;
        if transition.len() != sa * n_states {
            return Err(Error::InvalidMdp(format!(
                "transition table has {} entries, expected {}",
                transition.len(),
                sa * n_states
            )));
        }
        if reward.len() != sa {
            return Err(Error::InvalidMdp(format!(
                "reward table has {} entries, expected {sa}",
                reward.len()
            )));
        }
        if initial_dist.len() != n_states {
            return Err(Error::InvalidMdp(format!(
                "initial distribution has {} entries, expected {n_states}",
                initial_dist.len()
            )));
        }
        for (row, probs) in transition.chunks(n_states).enumerate() {
            check_distribution(probs).map_err(|why| {
                Error::InvalidMdp(format!(
                    "transition row (s={}, a={}) {why}",
                    row / n_actions,
                    row % n_actions
                ))
            })?;
        }
        check_distribution(&initial_dist)
            .map_err(|why| Error::InvalidMdp(format!("initial distribution {why}")))?;
        let (lo, hi) = reward_bounds;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::InvalidMdp(format!(
                "reward bounds ({lo}, {hi}) are not a finite interval"
            )));
        }
        if let Some(r) = reward.iter().find(|r| !(r.is_finite() && **r >= lo && **r <= hi)) {
            return Err(Error::InvalidMdp(format!(
                "reward {r} outside bounds [{lo}, {hi}]"
            )));
        }
        Ok(Self {
            n_states,
            n_actions,
            transition,
            reward,
            gamma,
            initial_dist,
            reward_bounds,
        })
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn initial_dist(&self) -> &[f64] {
        &self.initial_dist
    }

    pub fn reward_bounds(&self) -> (f64, f64) {
        self.reward_bounds
    }

    /// `P(. | s, a)`.
    pub fn next_dist(&self, s: usize, a: usize) -> &[f64] {
        let start = (s * self.n_actions + a) * self.n_states;
        &self.transition[start..start + self.n_states]
    }

    pub fn reward(&self, s: usize, a: usize) -> f64 {
        self.reward[s * self.n_actions + a]
    }

    /// Flat `(s, a)` reward table.
    pub fn reward_table(&self) -> &[f64] {
        &self.reward
    }

    /// Flat `(s, a, s')` transition tensor.
    pub fn transition_table(&self) -> &[f64] {
        &self.transition
    }

    /// Same dynamics and initial distribution, different reward table.
    /// Bounds are recomputed from the new table.
    pub fn with_rewards(&self, reward: Vec<f64>) -> Result<Self> {
        Self::new(
            self.n_states,
            self.n_actions,
            self.transition.clone(),
            reward,
            self.gamma,
            self.initial_dist.clone(),
        )
    }

    /// `sum_s' P(s'|s,a) v(s')`.
    pub fn expected_next(&self, s: usize, a: usize, v: &[f64]) -> f64 {
        self.next_dist(s, a)
            .iter()
            .zip(v)
            .map(|(p, x)| p * x)
            .sum()
    }

    /// Fails unless rewards are bounded inside `[0, 1]`, the range the gap
    /// and concentrability results are stated for.
    pub fn require_unit_rewards(&self) -> Result<()> {
        let (lo, hi) = self.reward_bounds;
        if lo < 0.0 || hi > 1.0 {
            return Err(Error::InvalidMdp(format!(
                "rewards must lie in [0, 1], bounds are [{lo}, {hi}]"
            )));
        }
        Ok(())
    }
}

fn check_distribution(probs: &[f64]) -> core::result::Result<(), alloc::string::String> {
    if let Some(p) = probs.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
        return Err(format!("has invalid entry {p}"));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > PROB_TOL {
        return Err(format!("sums to {total}"));
    }
    Ok(())
}

/// JSON layout of [`TabularMdp`]: `transition[s][a][s']`, `reward[s][a]`,
/// `reward_bounds = [r_min, r_max]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MdpWire {
    pub n_states: usize,
    pub n_actions: usize,
    pub transition: Vec<Vec<Vec<f64>>>,
    pub reward: Vec<Vec<f64>>,
    pub gamma: f64,
    pub initial_dist: Vec<f64>,
    pub reward_bounds: [f64; 2],
}

impl From<TabularMdp> for MdpWire {
    fn from(m: TabularMdp) -> Self {
        let transition = (0..m.n_states)
            .map(|s| {
                (0..m.n_actions)
                    .map(|a| m.next_dist(s, a).to_vec())
                    .collect()
            })
            .collect();
        let reward = m.reward.chunks(m.n_actions).map(<[f64]>::to_vec).collect();
        MdpWire {
            n_states: m.n_states,
            n_actions: m.n_actions,
            transition,
            reward,
            gamma: m.gamma,
            initial_dist: m.initial_dist,
            reward_bounds: [m.reward_bounds.0, m.reward_bounds.1],
        }
    }
}

impl TryFrom<MdpWire> for TabularMdp {
    type Error = Error;

    fn try_from(w: MdpWire) -> Result<Self> {
        if w.transition.len() != w.n_states
            || w.transition.iter().any(|row| row.len() != w.n_actions)
            || w.reward.len() != w.n_states
            || w.reward.iter().any(|row| row.len() != w.n_actions)
        {
            return Err(Error::InvalidMdp(format!(
                "nested table shapes do not match n_states={} n_actions={}",
                w.n_states, w.n_actions
            )));
        }
        let transition = w.transition.into_iter().flatten().flatten().collect();
        let reward = w.reward.into_iter().flatten().collect();
        TabularMdp::with_reward_bounds(
            w.n_states,
            w.n_actions,
            transition,
            reward,
            w.gamma,
            w.initial_dist,
            (w.reward_bounds[0], w.reward_bounds[1]),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn two_state() -> TabularMdp {
        TabularMdp::new(
            2,
            1,
            vec![0.0, 1.0, 1.0, 0.0],
            vec![1.0, 0.0],
            0.5,
            vec![1.0, 0.0],
        )
        .unwrap()
    }

    #[test]
    fn rejects_bad_rows() {
        let err = TabularMdp::new(1, 1, vec![0.9], vec![0.0], 0.5, vec![1.0]).unwrap_err();
        assert!(matches!(err, Error::InvalidMdp(_)));
        let err = TabularMdp::new(1, 1, vec![1.0], vec![0.0], 1.0, vec![1.0]).unwrap_err();
        assert!(matches!(err, Error::InvalidMdp(_)));
        let err = TabularMdp::new(1, 1, vec![1.0], vec![f64::NAN], 0.5, vec![1.0]).unwrap_err();
        assert!(matches!(err, Error::InvalidMdp(_)));
    }

    #[test]
    fn declared_bounds_must_contain_rewards() {
        let err = TabularMdp::with_reward_bounds(
            1,
            1,
            vec![1.0],
            vec![2.0],
            0.5,
            vec![1.0],
            (0.0, 1.0),
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidMdp(_)));
    }

    #[test]
    fn json_uses_nested_tables() {
        let m = two_state();
        let json = serde_json::to_value(&m).unwrap();
        assert_eq!(json["transition"][0][0], serde_json::json!([0.0, 1.0]));
        assert_eq!(json["reward"][1], serde_json::json!([0.0]));
        let back: TabularMdp = serde_json::from_value(json).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn json_rejects_invalid_rows() {
        let mut json = serde_json::to_value(two_state()).unwrap();
        json["transition"][0][0] = serde_json::json!([0.5, 0.4]);
        assert!(serde_json::from_value::<TabularMdp>(json).is_err());
    }
}
