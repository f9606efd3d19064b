//! Tabular learners plugged into the training loops: model-based planning
//! and Q-learning on intervention labels, and majority-vote imitation.

use alloc::vec;
use alloc::vec::Vec;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::intervention::{Controller, LabeledTransition};
use crate::mdp::policy::argmax_lowest;
use crate::mdp::DeterministicPolicy;
use crate::rng::seeded;
use crate::solvers::{value_iteration, Table, ValueFunctions, VisitCounts};

const PLAN_TOL: f64 = 1e-10;
const PLAN_MAX_ITER: usize = 1_000_000;

/// Append-only replay set; each transition remembers the round it came from
/// (0 for warm-start data).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    transitions: Vec<LabeledTransition>,
    origin_round: Vec<usize>,
}

impl Dataset {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, t: LabeledTransition, round: usize) {
        self.transitions.push(t);
        self.origin_round.push(round);
    }

    pub fn extend(&mut self, ts: impl IntoIterator<Item = LabeledTransition>, round: usize) {
        for t in ts {
            self.push(t, round);
        }
    }

    pub fn append(&mut self, other: &Dataset) {
        self.transitions.extend_from_slice(&other.transitions);
        self.origin_round.extend_from_slice(&other.origin_round);
    }

    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    pub fn transitions(&self) -> &[LabeledTransition] {
        &self.transitions
    }

    pub fn origin_round(&self) -> &[usize] {
        &self.origin_round
    }

    pub fn iter(&self) -> impl Iterator<Item = (&LabeledTransition, usize)> {
        self.transitions.iter().zip(self.origin_round.iter().copied())
    }

    fn check_indices(&self, n_states: usize, n_actions: usize) -> Result<()> {
        match self
            .transitions
            .iter()
            .find(|t| t.s >= n_states || t.s_next >= n_states || t.a >= n_actions)
        {
            Some(t) => Err(Error::param(
                "dataset",
                alloc::format!("transition ({}, {}, {}) out of range", t.s, t.a, t.s_next),
            )),
            None => Ok(()),
        }
    }
}

impl FromIterator<(LabeledTransition, usize)> for Dataset {
    fn from_iter<I: IntoIterator<Item = (LabeledTransition, usize)>>(iter: I) -> Self {
        let mut d = Dataset::new();
        for (t, r) in iter {
            d.push(t, r);
        }
        d
    }
}

/// Visit counts and mean labels of a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalModel {
    pub counts: VisitCounts,
}

impl EmpiricalModel {
    pub fn from_dataset(dataset: &Dataset, n_states: usize, n_actions: usize) -> Result<Self> {
        dataset.check_indices(n_states, n_actions)?;
        let mut counts = VisitCounts::new(n_states, n_actions);
        for t in dataset.transitions() {
            counts.record(t.s, t.a, t.s_next, t.reward);
        }
        Ok(Self { counts })
    }

    pub fn visited(&self, s: usize, a: usize) -> bool {
        self.counts.visits(s, a) > 0
    }

    pub fn reward_mean(&self, s: usize, a: usize) -> Option<f64> {
        self.counts.mean_reward(s, a)
    }
}

/// Plans on the empirical labeled MDP. Unvisited pairs self-loop with reward
/// `label_min - pessimism`; states reached by a terminal transition are
/// absorbing with reward 0. Returns the planner's value functions alongside
/// the greedy policy.
pub fn model_based_solution(
    dataset: &Dataset,
    n_states: usize,
    n_actions: usize,
    gamma: f64,
    pessimism: f64,
) -> Result<(ValueFunctions, DeterministicPolicy)> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if !(pessimism >= 0.0 && pessimism.is_finite()) {
        return Err(Error::param("pessimism", "must be finite and >= 0"));
    }
    let model = EmpiricalModel::from_dataset(dataset, n_states, n_actions)?;
    let label_min = dataset
        .transitions()
        .iter()
        .map(|t| t.reward)
        .fold(f64::INFINITY, f64::min);
    let mu = vec![1.0 / n_states as f64; n_states];
    let mdp = model
        .counts
        .empirical_mdp(gamma, mu.clone(), label_min - pessimism, |_| 0.0)?;
    let terminal = terminal_states(dataset, n_states);
    let mdp = if terminal.iter().any(|&t| t) {
        let mut transition = mdp.transition_table().to_vec();
        let mut reward = mdp.reward_table().to_vec();
        for s in (0..n_states).filter(|&s| terminal[s]) {
            for a in 0..n_actions {
                let row = &mut transition[(s * n_actions + a) * n_states..][..n_states];
                row.fill(0.0);
                row[s] = 1.0;
                reward[s * n_actions + a] = 0.0;
            }
        }
        crate::mdp::TabularMdp::new(n_states, n_actions, transition, reward, gamma, mu)?
    } else {
        mdp
    };
    value_iteration(&mdp, PLAN_TOL, PLAN_MAX_ITER)
}

fn terminal_states(dataset: &Dataset, n_states: usize) -> Vec<bool> {
    let mut terminal = vec![false; n_states];
    for t in dataset.transitions().iter().filter(|t| t.terminal) {
        terminal[t.s_next] = true;
    }
    terminal
}

pub fn fit_rl_model_based(
    dataset: &Dataset,
    n_states: usize,
    n_actions: usize,
    gamma: f64,
    pessimism: f64,
) -> Result<DeterministicPolicy> {
    model_based_solution(dataset, n_states, n_actions, gamma, pessimism).map(|(_, pi)| pi)
}

/// Tabular Q-learning over `sweeps` shuffled passes of the replay set;
/// returns the final `Q` table.
pub fn q_learning_table(
    dataset: &Dataset,
    n_states: usize,
    n_actions: usize,
    gamma: f64,
    learning_rate: f64,
    sweeps: usize,
    seed: u64,
) -> Result<Table> {
    if sweeps == 0 {
        return Err(Error::param("sweeps", "must be at least 1"));
    }
    if !(learning_rate > 0.0 && learning_rate <= 1.0) {
        return Err(Error::param("learning_rate", "must lie in (0, 1]"));
    }
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::param("gamma", "must lie in [0, 1)"));
    }
    dataset.check_indices(n_states, n_actions)?;
    let terminal = terminal_states(dataset, n_states);
    let mut q = vec![0.0; n_states * n_actions];
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut rng = seeded(seed);
    for _ in 0..sweeps {
        order.shuffle(&mut rng);
        for &i in &order {
            let t = &dataset.transitions()[i];
            let best = if terminal[t.s_next] {
                0.0
            } else {
                let next = &q[t.s_next * n_actions..(t.s_next + 1) * n_actions];
                next.iter().copied().fold(f64::NEG_INFINITY, f64::max)
            };
            let target = t.reward + gamma * best;
            let cell = &mut q[t.s * n_actions + t.a];
            *cell += learning_rate * (target - *cell);
        }
    }
    Ok(Table {
        cols: n_actions,
        data: q,
    })
}

pub fn fit_rl_q_learning(
    dataset: &Dataset,
    n_states: usize,
    n_actions: usize,
    gamma: f64,
    learning_rate: f64,
    sweeps: usize,
    seed: u64,
) -> Result<DeterministicPolicy> {
    let q = q_learning_table(dataset, n_states, n_actions, gamma, learning_rate, sweeps, seed)?;
    Ok(DeterministicPolicy::greedy(&q.data, n_actions))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SupervisedFilter {
    ExpertControlledOnly,
    #[default]
    All,
}

/// Per-state vote counts of the filtered actions.
pub fn action_votes(
    dataset: &Dataset,
    filter: SupervisedFilter,
    n_states: usize,
    n_actions: usize,
) -> Result<Vec<u64>> {
    dataset.check_indices(n_states, n_actions)?;
    let mut votes = vec![0u64; n_states * n_actions];
    for t in dataset.transitions() {
        if filter == SupervisedFilter::ExpertControlledOnly && t.controller != Controller::Expert {
            continue;
        }
        votes[t.s * n_actions + t.a] += 1;
    }
    Ok(votes)
}

/// Majority vote per state, ties to the lowest index; states without data
/// take action 0.
pub fn fit_supervised(
    dataset: &Dataset,
    filter: SupervisedFilter,
    n_states: usize,
    n_actions: usize,
) -> Result<DeterministicPolicy> {
    let votes = action_votes(dataset, filter, n_states, n_actions)?;
    let action = votes
        .chunks(n_actions)
        .map(|row| {
            let row: Vec<f64> = row.iter().map(|&v| v as f64).collect();
            argmax_lowest(&row)
        })
        .collect();
    DeterministicPolicy::new(action, n_actions)
}
