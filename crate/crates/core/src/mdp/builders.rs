use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;

use super::TabularMdp;
use crate::error::Result;
use crate::rng::seeded;

/// One state, two self-looping actions with `r(a1) = 1`, `r(a2) = 0`.
pub fn build_two_action_bandit(gamma: f64) -> Result<TabularMdp> {
    TabularMdp::with_reward_bounds(
        1,
        2,
        vec![1.0, 1.0],
        vec![1.0, 0.0],
        gamma,
        vec![1.0],
        (0.0, 1.0),
    )
}

/// Random MDP with flat-Dirichlet transition rows, rewards uniform in `[0, 1]`
/// and a uniform initial distribution.
pub fn build_random_mdp(
    n_states: usize,
    n_actions: usize,
    gamma: f64,
    seed: u64,
) -> Result<TabularMdp> {
    let mut rng = seeded(seed);
    let mut transition = Vec::with_capacity(n_states * n_actions * n_states);
    for _ in 0..n_states * n_actions {
        transition.extend(flat_simplex(n_states, &mut rng));
    }
    let reward = (0..n_states * n_actions).map(|_| rng.gen::<f64>()).collect();
    TabularMdp::with_reward_bounds(
        n_states,
        n_actions,
        transition,
        reward,
        gamma,
        vec![1.0 / n_states as f64; n_states],
        (0.0, 1.0),
    )
}

/// Uniform draw from the probability simplex (normalized exponentials).
pub(crate) fn flat_simplex<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let mut w: Vec<f64> = (0..n)
        .map(|_| {
            let u: f64 = rng.gen();
            -libm::log(1.0 - u)
        })
        .collect();
    let total: f64 = w.iter().sum();
    if total <= 0.0 {
        // every draw was exactly zero; fall back to the barycenter
        return vec![1.0 / n as f64; n];
    }
    w.iter_mut().for_each(|x| *x /= total);
    w
}
