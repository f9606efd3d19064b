//! Exact planning and evaluation on tabular MDPs.

mod lcb;
mod linalg;
mod occupancy;

pub use lcb::{lcb_value_iteration, VisitCounts};
pub use occupancy::{
    concentrability, mix_occupancies, occupancy_distribution, Concentrability,
    ConcentrabilityReport, OccupancyMeasure,
};

use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{DeterministicPolicy, Policy, TabularMdp};

/// Above this many states policy evaluation iterates instead of solving directly.
pub const DIRECT_SOLVE_MAX_STATES: usize = 512;
const EVAL_TOL: f64 = 1e-10;

/// `V` and `Q` for a policy or for the optimum, with solver diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueFunctions {
    pub v: Vec<f64>,
    /// Flat `(s, a)`; serialized as `q[s][a]`.
    #[serde(with = "nested_table")]
    pub q: Table,
    /// Final sup-norm Bellman residual.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Flat row-major table with its row width.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Table {
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }
}

pub(crate) mod nested_table {
    use super::Table;
    use alloc::vec::Vec;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(t: &Table, ser: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<&[f64]> = if t.cols == 0 {
            Vec::new()
        } else {
            t.data.chunks(t.cols).collect()
        };
        rows.serialize(ser)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<Table, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(de)?;
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(serde::de::Error::custom("ragged table rows"));
        }
        Ok(Table {
            cols,
            data: rows.into_iter().flatten().collect(),
        })
    }
}

impl ValueFunctions {
    pub fn q(&self, s: usize, a: usize) -> f64 {
        self.q.get(s, a)
    }

    /// `V(mu) = sum_s mu(s) V(s)`.
    pub fn value_at(&self, mu: &[f64]) -> f64 {
        mu.iter().zip(&self.v).map(|(p, v)| p * v).sum()
    }
}

/// `Q(s, a) = r(s, a) + gamma sum_s' P(s'|s,a) V(s')`.
pub fn q_from_v(mdp: &TabularMdp, v: &[f64]) -> Table {
    let (n, m) = (mdp.n_states(), mdp.n_actions());
    let mut data = Vec::with_capacity(n * m);
    for s in 0..n {
        for a in 0..m {
            data.push(mdp.reward(s, a) + mdp.gamma() * mdp.expected_next(s, a, v));
        }
    }
    Table { cols: m, data }
}

fn bellman_optimal(mdp: &TabularMdp, v: &[f64]) -> Vec<f64> {
    let q = q_from_v(mdp, v);
    (0..mdp.n_states())
        .map(|s| q.row(s).iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .collect()
}

fn sup_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Value iteration from `V = 0`. Stops once the Bellman residual of the
/// current iterate is certified `<= tol` (via `gamma * |V_k+1 - V_k|`), or
/// after `max_iter` sweeps with `converged = false`. The greedy policy breaks
/// ties toward the lowest action index.
pub fn value_iteration(
    mdp: &TabularMdp,
    tol: f64,
    max_iter: usize,
) -> Result<(ValueFunctions, DeterministicPolicy)> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::param("tol", "must be positive"));
    }
    let mut v = vec![0.0; mdp.n_states()];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        let next = bellman_optimal(mdp, &v);
        let change = sup_dist(&next, &v);
        v = next;
        iterations += 1;
        if mdp.gamma() * change <= tol {
            converged = true;
            break;
        }
    }
    let q = q_from_v(mdp, &v);
    let residual = sup_dist(&bellman_optimal(mdp, &v), &v);
    let policy = DeterministicPolicy::greedy(&q.data, mdp.n_actions());
    Ok((
        ValueFunctions {
            v,
            q,
            residual,
            iterations,
            converged,
        },
        policy,
    ))
}

/// Exact `V^pi`, `Q^pi`: a direct solve of `(I - gamma P_pi) V = r_pi` for up
/// to [`DIRECT_SOLVE_MAX_STATES`] states, fixed-point iteration beyond.
pub fn policy_evaluation<P: Policy>(mdp: &TabularMdp, policy: &P) -> Result<ValueFunctions> {
    policy.check_against(mdp)?;
    let n = mdp.n_states();
    let gamma = mdp.gamma();
    let (p_pi, r_pi) = policy_kernel(mdp, policy);
    let (v, iterations) = if n <= DIRECT_SOLVE_MAX_STATES {
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                a[i * n + j] = -gamma * p_pi[i * n + j];
            }
            a[i * n + i] += 1.0;
        }
        let v = linalg::solve_dense(a, r_pi.clone())
            .ok_or_else(|| Error::InvalidMdp("singular evaluation system".into()))?;
        (v, 1)
    } else {
        iterate_linear(&p_pi, &r_pi, gamma, false)
    };
    let q = q_from_v(mdp, &v);
    let residual = (0..n)
        .map(|s| {
            let backed: f64 = (0..mdp.n_actions())
                .map(|a| policy.prob(s, a) * q.get(s, a))
                .sum();
            (backed - v[s]).abs()
        })
        .fold(0.0, f64::max);
    Ok(ValueFunctions {
        v,
        q,
        residual,
        iterations,
        converged: residual <= 1e-8,
    })
}

/// `P_pi(s, s')` (row-major) and `r_pi(s)`.
pub(crate) fn policy_kernel<P: Policy>(mdp: &TabularMdp, policy: &P) -> (Vec<f64>, Vec<f64>) {
    let (n, m) = (mdp.n_states(), mdp.n_actions());
    let mut p_pi = vec![0.0; n * n];
    let mut r_pi = vec![0.0; n];
    for s in 0..n {
        for a in 0..m {
            let w = policy.prob(s, a);
            if w == 0.0 {
                continue;
            }
            r_pi[s] += w * mdp.reward(s, a);
            for (j, p) in mdp.next_dist(s, a).iter().enumerate() {
                p_pi[s * n + j] += w * p;
            }
        }
    }
    (p_pi, r_pi)
}

/// Iterate `x <- b + gamma K x` (or `K^T` when `transpose`) to [`EVAL_TOL`].
pub(crate) fn iterate_linear(kernel: &[f64], b: &[f64], gamma: f64, transpose: bool) -> (Vec<f64>, usize) {
    let n = b.len();
    let mut x = b.to_vec();
    let mut iterations = 0;
    loop {
        let mut next = b.to_vec();
        for i in 0..n {
            for j in 0..n {
                let k = if transpose { kernel[j * n + i] } else { kernel[i * n + j] };
                next[i] += gamma * k * x[j];
            }
        }
        let change = sup_dist(&next, &x);
        x = next;
        iterations += 1;
        if change * gamma <= EVAL_TOL * (1.0 - gamma) || iterations > 1_000_000 {
            return (x, iterations);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::{build_random_mdp, build_two_action_bandit, StochasticPolicy};

    #[test]
    fn gamma_zero_is_one_step_lookahead() {
        let m = build_random_mdp(3, 2, 0.0, 4).unwrap();
        let (vf, pi) = value_iteration(&m, 1e-10, 100).unwrap();
        assert_eq!(vf.iterations, 1);
        for s in 0..3 {
            let best = m.reward(s, 0).max(m.reward(s, 1));
            assert_eq!(vf.v[s], best);
            assert_eq!(m.reward(s, pi.act(s)), best);
        }
    }

    #[test]
    fn bandit_optimum() {
        let m = build_two_action_bandit(0.9).unwrap();
        let (vf, pi) = value_iteration(&m, 1e-12, 10_000).unwrap();
        assert!(vf.converged);
        assert!((vf.v[0] - 10.0).abs() < 1e-10);
        assert_eq!(pi.act(0), 0);
    }

    #[test]
    fn bandit_mixed_policy_values() {
        for (gamma, x, expect) in [(0.9, 1.0, 10.0), (0.0, 0.3, 0.3), (0.99, 0.8, 80.0)] {
            let m = build_two_action_bandit(gamma).unwrap();
            let pi = StochasticPolicy::new(alloc::vec![x, 1.0 - x], 2).unwrap();
            let vf = policy_evaluation(&m, &pi).unwrap();
            assert!((vf.v[0] - expect).abs() < 1e-9, "{gamma} {x}: {}", vf.v[0]);
        }
    }

    #[test]
    fn two_state_cycle() {
        // s0 -> s1 -> s0, rewards (1, 0), gamma 0.5: V = (4/3, 2/3)
        let m = TabularMdp::new(
            2,
            1,
            alloc::vec![0.0, 1.0, 1.0, 0.0],
            alloc::vec![1.0, 0.0],
            0.5,
            alloc::vec![1.0, 0.0],
        )
        .unwrap();
        let vf = policy_evaluation(&m, &DeterministicPolicy::lowest_index(2, 1)).unwrap();
        assert!((vf.v[0] - 4.0 / 3.0).abs() < 1e-12);
        assert!((vf.v[1] - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn greedy_policy_evaluates_to_optimum() {
        let tol = 1e-9;
        let m = build_random_mdp(5, 3, 0.9, 21).unwrap();
        let (vf, pi) = value_iteration(&m, tol, 100_000).unwrap();
        let pe = policy_evaluation(&m, &pi).unwrap();
        for s in 0..5 {
            assert!((pe.v[s] - vf.v[s]).abs() <= 2.0 * tol / (1.0 - 0.9));
        }
    }

    #[test]
    fn iterative_path_matches_direct() {
        let m = build_random_mdp(6, 2, 0.8, 2).unwrap();
        let pi = StochasticPolicy::uniform(6, 2);
        let direct = policy_evaluation(&m, &pi).unwrap();
        let (p, r) = policy_kernel(&m, &pi);
        let (v, _) = iterate_linear(&p, &r, 0.8, false);
        for (x, y) in v.iter().zip(&direct.v) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn non_convergence_is_flagged() {
        let m = build_random_mdp(4, 2, 0.99, 0).unwrap();
        let (vf, _) = value_iteration(&m, 1e-12, 3).unwrap();
        assert!(!vf.converged);
        assert_eq!(vf.iterations, 3);
        assert!(value_iteration(&m, 0.0, 3).is_err());
    }

    #[test]
    fn value_json_nests_q() {
        let m = build_two_action_bandit(0.5).unwrap();
        let (vf, _) = value_iteration(&m, 1e-12, 1000).unwrap();
        let json = serde_json::to_value(&vf).unwrap();
        assert_eq!(json["q"].as_array().unwrap().len(), 1);
        assert_eq!(json["q"][0].as_array().unwrap().len(), 2);
        let back: ValueFunctions = serde_json::from_value(json).unwrap();
        assert_eq!(back, vf);
    }
}
