use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use super::value_iteration;
use crate::error::{Error, Result};
use crate::mdp::{DeterministicPolicy, TabularMdp};

const PLAN_TOL: f64 = 1e-10;
const PLAN_MAX_ITER: usize = 1_000_000;

/// Transition counts `n(s, a, s')` and reward totals per `(s, a)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisitCounts {
    pub n_states: usize,
    pub n_actions: usize,
    pub counts: Vec<u64>,
    pub reward_sums: Vec<f64>,
}

impl VisitCounts {
    pub fn new(n_states: usize, n_actions: usize) -> Self {
        Self {
            n_states,
            n_actions,
            counts: vec![0; n_states * n_actions * n_states],
            reward_sums: vec![0.0; n_states * n_actions],
        }
    }

    pub fn record(&mut self, s: usize, a: usize, next: usize, reward: f64) {
        self.counts[(s * self.n_actions + a) * self.n_states + next] += 1;
        self.reward_sums[s * self.n_actions + a] += reward;
    }

    pub fn visits(&self, s: usize, a: usize) -> u64 {
        let start = (s * self.n_actions + a) * self.n_states;
        self.counts[start..start + self.n_states].iter().sum()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn mean_reward(&self, s: usize, a: usize) -> Option<f64> {
        match self.visits(s, a) {
            0 => None,
            n => Some(self.reward_sums[s * self.n_actions + a] / n as f64),
        }
    }

    fn validate(&self) -> Result<()> {
        let sa = self.n_states * self.n_actions;
        if sa == 0 || self.counts.len() != sa * self.n_states || self.reward_sums.len() != sa {
            return Err(Error::param("counts", "table shapes do not match n_states/n_actions"));
        }
        Ok(())
    }

    /// Empirical MDP: visited pairs use frequency rows and `mean - bonus(n)`,
    /// unvisited pairs self-loop with `unvisited_reward`.
    pub fn empirical_mdp(
        &self,
        gamma: f64,
        initial_dist: Vec<f64>,
        unvisited_reward: f64,
        bonus: impl Fn(u64) -> f64,
    ) -> Result<TabularMdp> {
        self.validate()?;
        let (n, m) = (self.n_states, self.n_actions);
        let mut transition = vec![0.0; n * m * n];
        let mut reward = vec![0.0; n * m];
        for s in 0..n {
            for a in 0..m {
                let row = (s * m + a) * n;
                let visits = self.visits(s, a);
                if visits == 0 {
                    transition[row + s] = 1.0;
                    reward[s * m + a] = unvisited_reward;
                } else {
                    for next in 0..n {
                        transition[row + next] = self.counts[row + next] as f64 / visits as f64;
                    }
                    reward[s * m + a] = self.reward_sums[s * m + a] / visits as f64 - bonus(visits);
                }
            }
        }
        TabularMdp::new(n, m, transition, reward, gamma, initial_dist)
    }
}

/// Pessimistic value iteration on the empirical model. Visited pairs pay a
/// bonus `confidence_scale / sqrt(max(1, n))`; unvisited pairs self-loop with
/// reward `r_min - confidence_scale`, where `r_min` is the smallest empirical
/// mean (0 without data).
pub fn lcb_value_iteration(
    counts: &VisitCounts,
    gamma: f64,
    confidence_scale: f64,
) -> Result<DeterministicPolicy> {
    counts.validate()?;
    if confidence_scale.is_nan() || confidence_scale < 0.0 {
        return Err(Error::param("confidence_scale", "must be non-negative"));
    }
    let r_min = (0..counts.n_states)
        .flat_map(|s| (0..counts.n_actions).map(move |a| (s, a)))
        .filter_map(|(s, a)| counts.mean_reward(s, a))
        .fold(None, |acc: Option<f64>, r| Some(acc.map_or(r, |x| x.min(r))))
        .unwrap_or(0.0);
    let mu = vec![1.0 / counts.n_states as f64; counts.n_states];
    let mdp = counts.empirical_mdp(gamma, mu, r_min - confidence_scale, |n| {
        confidence_scale / libm::sqrt(n.max(1) as f64)
    })?;
    let (_, policy) = value_iteration(&mdp, PLAN_TOL, PLAN_MAX_ITER)?;
    Ok(policy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::{build_two_action_bandit, sample_transition};
    use crate::rng::seeded;
    use rand::Rng;

    #[test]
    fn no_data_gives_lowest_index() {
        let counts = VisitCounts::new(3, 4);
        let pi = lcb_value_iteration(&counts, 0.9, 1.0).unwrap();
        assert_eq!(pi.actions(), &[0, 0, 0]);
    }

    #[test]
    fn zero_bonus_matches_plain_planning_on_empirical_model() {
        let mut rng = seeded(4);
        let mdp = crate::mdp::build_random_mdp(3, 2, 0.9, 4).unwrap();
        let mut counts = VisitCounts::new(3, 2);
        for s in 0..3 {
            for a in 0..2 {
                for _ in 0..2000 {
                    let next = sample_transition(&mdp, s, a, &mut rng);
                    counts.record(s, a, next, mdp.reward(s, a));
                }
            }
        }
        let pi = lcb_value_iteration(&counts, 0.9, 0.0).unwrap();
        let emp = counts
            .empirical_mdp(0.9, alloc::vec![1.0 / 3.0; 3], 0.0, |_| 0.0)
            .unwrap();
        let (_, direct) = value_iteration(&emp, 1e-10, 1_000_000).unwrap();
        assert_eq!(pi, direct);
    }

    #[test]
    fn bandit_with_hundred_pulls_each() {
        let mdp = build_two_action_bandit(0.9).unwrap();
        let mut rng = seeded(7);
        let mut counts = VisitCounts::new(1, 2);
        for a in 0..2 {
            for _ in 0..100 {
                // Bernoulli arms with means (1, 0) are deterministic
                let r = if rng.gen::<f64>() < mdp.reward(0, a) { 1.0 } else { 0.0 };
                counts.record(0, a, 0, r);
            }
        }
        let pi = lcb_value_iteration(&counts, 0.9, 1.0).unwrap();
        assert_eq!(pi.act(0), 0);
    }

    #[test]
    fn pessimism_prefers_well_sampled_arm() {
        // arm 0: mean 0.5 over 1000 pulls; arm 1: mean 0.6 over 2 pulls
        let mut counts = VisitCounts::new(1, 2);
        for i in 0..1000 {
            counts.record(0, 0, 0, if i % 2 == 0 { 1.0 } else { 0.0 });
        }
        counts.record(0, 1, 0, 0.6);
        counts.record(0, 1, 0, 0.6);
        assert_eq!(lcb_value_iteration(&counts, 0.5, 0.0).unwrap().act(0), 1);
        assert_eq!(lcb_value_iteration(&counts, 0.5, 0.5).unwrap().act(0), 0);
    }
}
