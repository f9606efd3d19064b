use alloc::vec::Vec;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Policy, TabularMdp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Step {
    pub state: usize,
    pub action: usize,
    pub next_state: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trajectory {
    pub steps: Vec<Step>,
    /// Hit the horizon before reaching an absorbing state.
    pub truncated: bool,
    pub horizon: usize,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn chains(&self) -> bool {
        self.steps
            .windows(2)
            .all(|w| w[0].next_state == w[1].state)
    }

    pub fn last_state(&self) -> Option<usize> {
        self.steps.last().map(|s| s.next_state)
    }
}

/// Inverse-CDF draw from a probability row.
pub fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

pub fn sample_transition<R: Rng + ?Sized>(mdp: &TabularMdp, s: usize, a: usize, rng: &mut R) -> usize {
    sample_index(mdp.next_dist(s, a), rng)
}

/// Every action keeps the state in place with probability 1.
pub fn is_absorbing(mdp: &TabularMdp, s: usize) -> bool {
    (0..mdp.n_actions()).all(|a| mdp.next_dist(s, a)[s] >= 1.0)
}

/// Roll out `policy` from `s0 ~ mu` for at most `horizon` steps. With
/// `stop_at_absorbing` the episode ends on entering an absorbing state.
pub fn rollout<P: Policy, R: Rng + ?Sized>(
    mdp: &TabularMdp,
    policy: &P,
    horizon: usize,
    rng: &mut R,
    stop_at_absorbing: bool,
) -> Trajectory {
    let mut s = sample_index(mdp.initial_dist(), rng);
    let mut steps = Vec::with_capacity(horizon);
    let mut truncated = true;
    for _ in 0..horizon {
        if stop_at_absorbing && is_absorbing(mdp, s) {
            truncated = false;
            break;
        }
        let a = policy.sample(s, rng);
        let next = sample_transition(mdp, s, a, rng);
        steps.push(Step {
            state: s,
            action: a,
            next_state: next,
        });
        s = next;
    }
    if stop_at_absorbing && truncated && is_absorbing(mdp, s) {
        truncated = false;
    }
    Trajectory {
        steps,
        truncated,
        horizon,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::{DeterministicPolicy, TabularMdp};
    use crate::rng::seeded;
    use alloc::vec;

    fn coin() -> TabularMdp {
        // state 0 branches uniformly to 1 or 2; both loop back to 0
        TabularMdp::new(
            3,
            1,
            vec![0.0, 0.5, 0.5, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0],
            vec![0.0; 3],
            0.9,
            vec![1.0, 0.0, 0.0],
        )
        .unwrap()
    }

    #[test]
    fn deterministic_row_always_hits() {
        let m = coin();
        let mut rng = seeded(0);
        assert!((0..100).all(|_| sample_transition(&m, 1, 0, &mut rng) == 0));
    }

    #[test]
    fn uniform_branch_within_three_sigma() {
        let m = coin();
        let mut rng = seeded(1);
        let n = 100_000;
        let hits = (0..n)
            .filter(|_| sample_transition(&m, 0, 0, &mut rng) == 1)
            .count() as f64;
        let sigma = (n as f64 * 0.25f64).sqrt();
        assert!((hits - n as f64 * 0.5).abs() <= 3.0 * sigma, "{hits}");
    }

    #[test]
    fn horizon_one_is_one_step() {
        let m = coin();
        let pi = DeterministicPolicy::lowest_index(3, 1);
        let t = rollout(&m, &pi, 1, &mut seeded(2), false);
        assert_eq!(t.len(), 1);
        assert!(t.truncated);
    }

    #[test]
    fn rollouts_chain_and_repeat() {
        let m = coin();
        let pi = DeterministicPolicy::lowest_index(3, 1);
        let a = rollout(&m, &pi, 50, &mut seeded(3), true);
        let b = rollout(&m, &pi, 50, &mut seeded(3), true);
        assert_eq!(a, b);
        assert!(a.chains());
        assert_eq!(a.len(), 50);
    }
}
