use alloc::format;
use alloc::vec::Vec;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{check_distribution, TabularMdp};
use crate::error::{Error, Result};

/// Anything that assigns action probabilities per state.
pub trait Policy {
    fn n_states(&self) -> usize;
    fn n_actions(&self) -> usize;
    fn prob(&self, s: usize, a: usize) -> f64;

    fn sample<R: Rng + ?Sized>(&self, s: usize, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let n = self.n_actions();
        for a in 0..n {
            acc += self.prob(s, a);
            if u < acc {
                return a;
            }
        }
        // rounding left u above the running sum; take the last supported action
        (0..n).rev().find(|&a| self.prob(s, a) > 0.0).unwrap_or(0)
    }

    fn check_against(&self, mdp: &TabularMdp) -> Result<()> {
        if self.n_states() != mdp.n_states() || self.n_actions() != mdp.n_actions() {
            return Err(Error::InvalidPolicy(format!(
                "policy shape {}x{} does not match MDP {}x{}",
                self.n_states(),
                self.n_actions(),
                mdp.n_states(),
                mdp.n_actions()
            )));
        }
        Ok(())
    }
}

/// One action per state. JSON: `{"action": [...], "n_actions": n}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "DeterministicWire", into = "DeterministicWire")]
pub struct DeterministicPolicy {
    action: Vec<usize>,
    n_actions: usize,
}

#[derive(Serialize, Deserialize)]
struct DeterministicWire {
    action: Vec<usize>,
    n_actions: usize,
}

impl From<DeterministicPolicy> for DeterministicWire {
    fn from(p: DeterministicPolicy) -> Self {
        DeterministicWire {
            action: p.action,
            n_actions: p.n_actions,
        }
    }
}

impl TryFrom<DeterministicWire> for DeterministicPolicy {
    type Error = Error;

    fn try_from(w: DeterministicWire) -> Result<Self> {
        DeterministicPolicy::new(w.action, w.n_actions)
    }
}

impl DeterministicPolicy {
    pub fn new(action: Vec<usize>, n_actions: usize) -> Result<Self> {
        if let Some((s, a)) = action.iter().enumerate().find(|(_, a)| **a >= n_actions) {
            return Err(Error::InvalidPolicy(format!(
                "state {s} picks action {a}, only {n_actions} actions"
            )));
        }
        Ok(Self { action, n_actions })
    }

    /// Every state takes action 0.
    pub fn lowest_index(n_states: usize, n_actions: usize) -> Self {
        Self {
            action: alloc::vec![0; n_states],
            n_actions,
        }
    }

    pub fn act(&self, s: usize) -> usize {
        self.action[s]
    }

    pub fn actions(&self) -> &[usize] {
        &self.action
    }

    /// Copy with the action at `s` replaced.
    pub fn with_action(&self, s: usize, a: usize) -> Self {
        assert!(a < self.n_actions, "action {a} out of range");
        let mut action = self.action.clone();
        action[s] = a;
        Self {
            action,
            n_actions: self.n_actions,
        }
    }

    pub fn to_stochastic(&self) -> StochasticPolicy {
        let mut probs = alloc::vec![0.0; self.action.len() * self.n_actions];
        for (s, &a) in self.action.iter().enumerate() {
            probs[s * self.n_actions + a] = 1.0;
        }
        StochasticPolicy {
            n_actions: self.n_actions,
            probs,
        }
    }

    /// Deterministic corruption of a policy: each state independently keeps
    /// its action with probability `1 - epsilon`, otherwise takes a uniformly
    /// drawn action (which may coincide with the original).
    pub fn epsilon_corrupted<R: Rng + ?Sized>(&self, epsilon: f64, rng: &mut R) -> Self {
        let action = self
            .action
            .iter()
            .map(|&a| {
                if rng.gen::<f64>() < epsilon {
                    rng.gen_range(0..self.n_actions)
                } else {
                    a
                }
            })
            .collect();
        Self {
            action,
            n_actions: self.n_actions,
        }
    }

    /// Greedy w.r.t. a flat `(s, a)` table; ties go to the lowest index.
    pub fn greedy(q: &[f64], n_actions: usize) -> Self {
        let action = q.chunks(n_actions).map(argmax_lowest).collect();
        Self { action, n_actions }
    }
}

pub(crate) fn argmax_lowest(row: &[f64]) -> usize {
    let mut best = 0;
    for (a, &x) in row.iter().enumerate().skip(1) {
        if x > row[best] {
            best = a;
        }
    }
    best
}

impl Policy for DeterministicPolicy {
    fn n_states(&self) -> usize {
        self.action.len()
    }

    fn n_actions(&self) -> usize {
        self.n_actions
    }

    fn prob(&self, s: usize, a: usize) -> f64 {
        if self.action[s] == a {
            1.0
        } else {
            0.0
        }
    }

    fn sample<R: Rng + ?Sized>(&self, s: usize, _rng: &mut R) -> usize {
        self.action[s]
    }
}

/// `pi(a | s)` stored flat in `(s, a)` order; JSON is `probs[s][a]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StochasticWire", into = "StochasticWire")]
pub struct StochasticPolicy {
    n_actions: usize,
    probs: Vec<f64>,
}

impl StochasticPolicy {
    pub fn new(probs: Vec<f64>, n_actions: usize) -> Result<Self> {
        if n_actions == 0 || probs.is_empty() || !probs.len().is_multiple_of(n_actions) {
            return Err(Error::InvalidPolicy(format!(
                "{} entries cannot form rows of {n_actions} actions",
                probs.len()
            )));
        }
        for (s, row) in probs.chunks(n_actions).enumerate() {
            check_distribution(row)
                .map_err(|why| Error::InvalidPolicy(format!("state {s} row {why}")))?;
        }
        Ok(Self { n_actions, probs })
    }

    pub fn uniform(n_states: usize, n_actions: usize) -> Self {
        Self {
            n_actions,
            probs: alloc::vec![1.0 / n_actions as f64; n_states * n_actions],
        }
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.probs[s * self.n_actions..(s + 1) * self.n_actions]
    }
}

impl Policy for StochasticPolicy {
    fn n_states(&self) -> usize {
        self.probs.len() / self.n_actions
    }

    fn n_actions(&self) -> usize {
        self.n_actions
    }

    fn prob(&self, s: usize, a: usize) -> f64 {
        self.probs[s * self.n_actions + a]
    }
}

#[derive(Serialize, Deserialize)]
struct StochasticWire {
    probs: Vec<Vec<f64>>,
}

impl From<StochasticPolicy> for StochasticWire {
    fn from(p: StochasticPolicy) -> Self {
        StochasticWire {
            probs: p.probs.chunks(p.n_actions).map(<[f64]>::to_vec).collect(),
        }
    }
}

impl TryFrom<StochasticWire> for StochasticPolicy {
    type Error = Error;

    fn try_from(w: StochasticWire) -> Result<Self> {
        let n_actions = w.probs.first().map_or(0, Vec::len);
        if w.probs.iter().any(|r| r.len() != n_actions) {
            return Err(Error::InvalidPolicy("ragged probability rows".into()));
        }
        StochasticPolicy::new(w.probs.into_iter().flatten().collect(), n_actions)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use alloc::vec;

    #[test]
    fn deterministic_rejects_out_of_range() {
        assert!(DeterministicPolicy::new(vec![0, 2], 2).is_err());
        assert!(DeterministicPolicy::new(vec![0, 1], 2).is_ok());
    }

    #[test]
    fn greedy_breaks_ties_low() {
        let p = DeterministicPolicy::greedy(&[1.0, 1.0, 0.0, 0.5, 2.0, 2.0], 3);
        assert_eq!(p.actions(), &[0, 1]);
    }

    #[test]
    fn stochastic_rows_must_sum_to_one() {
        assert!(StochasticPolicy::new(vec![0.5, 0.4], 2).is_err());
        assert!(StochasticPolicy::new(vec![0.5, 0.5, 1.0, 0.0], 2).is_ok());
    }

    #[test]
    fn sampling_follows_probabilities() {
        let p = StochasticPolicy::new(vec![0.25, 0.75], 2).unwrap();
        let mut rng = seeded(3);
        let ones = (0..40_000).filter(|_| p.sample(0, &mut rng) == 1).count();
        let freq = ones as f64 / 40_000.0;
        assert!((freq - 0.75).abs() < 0.01, "{freq}");
    }

    #[test]
    fn stochastic_json_round_trip() {
        let p = DeterministicPolicy::new(vec![1, 0], 2).unwrap().to_stochastic();
        let json = serde_json::to_string(&p).unwrap();
        assert_eq!(json, r#"{"probs":[[0.0,1.0],[1.0,0.0]]}"#);
        assert_eq!(serde_json::from_str::<StochasticPolicy>(&json).unwrap(), p);
    }
}
