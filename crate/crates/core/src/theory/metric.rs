use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use super::gap::expected_reward_table;
use crate::error::{Error, Result};
use crate::mdp::{DeterministicPolicy, StochasticPolicy, TabularMdp};
use crate::solvers::policy_evaluation;

/// Largest deterministic policy space enumerated exhaustively.
pub const ENUMERATION_LIMIT: u128 = 100_000;

const ARGMAX_TOL: f64 = 1e-9;

/// `max_s |pi_a(.|s) - pi_b(.|s)|_1`.
pub fn policy_metric_d(pi_a: &StochasticPolicy, pi_b: &StochasticPolicy) -> Result<f64> {
    use crate::mdp::Policy;
    if pi_a.n_states() != pi_b.n_states() || pi_a.n_actions() != pi_b.n_actions() {
        return Err(Error::InvalidPolicy("policies have different shapes".into()));
    }
    Ok((0..pi_a.n_states())
        .map(|s| {
            pi_a.row(s)
                .iter()
                .zip(pi_b.row(s))
                .map(|(x, y)| (x - y).abs())
                .sum::<f64>()
        })
        .fold(0.0, f64::max))
}

/// Every deterministic policy, in lexicographic order of the action vector.
/// Fails when `n_actions^n_states` exceeds [`ENUMERATION_LIMIT`].
pub fn deterministic_policies(
    n_states: usize,
    n_actions: usize,
) -> Result<impl Iterator<Item = DeterministicPolicy>> {
    if n_states == 0 || n_actions == 0 {
        return Err(Error::param("n_states/n_actions", "must be positive"));
    }
    let count = (n_actions as u128)
        .checked_pow(n_states as u32)
        .unwrap_or(u128::MAX);
    if count > ENUMERATION_LIMIT {
        return Err(Error::EnumerationTooLarge {
            count,
            limit: ENUMERATION_LIMIT,
        });
    }
    Ok((0..count).map(move |mut code| {
        let mut action = vec![0; n_states];
        for slot in action.iter_mut().rev() {
            *slot = (code % n_actions as u128) as usize;
            code /= n_actions as u128;
        }
        DeterministicPolicy::new(action, n_actions).expect("actions are in range")
    }))
}

/// Sizes of both maximizer sets and whether the smaller-delta set is
/// contained in the larger-delta one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetProbe {
    pub small_count: usize,
    pub large_count: usize,
    pub holds: bool,
}

/// Indices (in enumeration order) of deterministic policies maximizing the
/// expected-intervention-reward return at `mu`.
fn maximizers(
    mdp: &TabularMdp,
    policies: &[DeterministicPolicy],
    pi_exp: &DeterministicPolicy,
    pi_ref: &DeterministicPolicy,
    delta: f64,
    beta: f64,
) -> Result<Vec<usize>> {
    let table = expected_reward_table(mdp, pi_exp, pi_ref, delta, beta)?;
    let surrogate = mdp.with_rewards(table.data)?;
    let mu = mdp.initial_dist();
    let values = policies
        .iter()
        .map(|p| Ok(policy_evaluation(&surrogate, p)?.value_at(mu)))
        .collect::<Result<Vec<f64>>>()?;
    let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(values
        .iter()
        .enumerate()
        .filter(|(_, v)| **v >= best - ARGMAX_TOL)
        .map(|(i, _)| i)
        .collect())
}

/// Enumerates the return-maximizing deterministic policies at both deltas and
/// checks the subset relation.
pub fn pi_opt_delta_monotonicity_probe(
    mdp: &TabularMdp,
    pi_exp: &DeterministicPolicy,
    pi_ref: &DeterministicPolicy,
    beta: f64,
    delta_small: f64,
    delta_large: f64,
) -> Result<SubsetProbe> {
    if delta_small.is_nan() || delta_large.is_nan() || delta_small > delta_large {
        return Err(Error::param("delta_small", "must not exceed delta_large"));
    }
    let policies: Vec<_> = deterministic_policies(mdp.n_states(), mdp.n_actions())?.collect();
    let small = maximizers(mdp, &policies, pi_exp, pi_ref, delta_small, beta)?;
    let large = maximizers(mdp, &policies, pi_exp, pi_ref, delta_large, beta)?;
    Ok(SubsetProbe {
        small_count: small.len(),
        large_count: large.len(),
        holds: small.iter().all(|i| large.binary_search(i).is_ok()),
    })
}
