use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use super::{iterate_linear, linalg, nested_table, policy_kernel, Table, DIRECT_SOLVE_MAX_STATES};
use crate::error::{Error, Result};
use crate::mdp::{Policy, TabularMdp};

/// Normalized discounted visitation `d^pi_mu` over states and state-action pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupancyMeasure {
    pub d_state: Vec<f64>,
    #[serde(with = "nested_table")]
    pub d_state_action: Table,
}

impl OccupancyMeasure {
    pub fn sa(&self, s: usize, a: usize) -> f64 {
        self.d_state_action.get(s, a)
    }

    pub fn n_actions(&self) -> usize {
        self.d_state_action.cols
    }
}

/// Solves the flow equations `d = (1 - gamma) mu + gamma P_pi^T d`.
pub fn occupancy_distribution<P: Policy>(mdp: &TabularMdp, policy: &P) -> Result<OccupancyMeasure> {
    policy.check_against(mdp)?;
    let n = mdp.n_states();
    let gamma = mdp.gamma();
    let (p_pi, _) = policy_kernel(mdp, policy);
    let b: Vec<f64> = mdp.initial_dist().iter().map(|m| (1.0 - gamma) * m).collect();
    let d_state = if n <= DIRECT_SOLVE_MAX_STATES {
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                a[i * n + j] = -gamma * p_pi[j * n + i];
            }
            a[i * n + i] += 1.0;
        }
        linalg::solve_dense(a, b).ok_or_else(|| Error::InvalidMdp("singular flow system".into()))?
    } else {
        iterate_linear(&p_pi, &b, gamma, true).0
    };
    // clamp solver noise below zero
    let d_state: Vec<f64> = d_state.into_iter().map(|x| x.max(0.0)).collect();
    let m = mdp.n_actions();
    let mut data = Vec::with_capacity(n * m);
    for (s, &ds) in d_state.iter().enumerate() {
        for a in 0..m {
            data.push(ds * policy.prob(s, a));
        }
    }
    Ok(OccupancyMeasure {
        d_state,
        d_state_action: Table { cols: m, data },
    })
}

/// `C*` as a real number or the infinite case (target mass where `rho = 0`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Concentrability {
    Finite(f64),
    Infinite,
}

impl Concentrability {
    pub fn is_finite(self) -> bool {
        matches!(self, Concentrability::Finite(_))
    }

    /// `self <= bound + tol`, with infinity only below infinity.
    pub fn at_most(self, bound: Concentrability, tol: f64) -> bool {
        match (self, bound) {
            (_, Concentrability::Infinite) => true,
            (Concentrability::Infinite, Concentrability::Finite(_)) => false,
            (Concentrability::Finite(x), Concentrability::Finite(b)) => x <= b + tol,
        }
    }

    pub fn scale(self, factor: f64) -> Concentrability {
        match self {
            Concentrability::Finite(x) => Concentrability::Finite(x * factor),
            Concentrability::Infinite => Concentrability::Infinite,
        }
    }

    pub fn min(self, other: Concentrability) -> Concentrability {
        if self.at_most(other, 0.0) {
            self
        } else {
            other
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrabilityReport {
    pub c_star: Concentrability,
    pub arg_max_pair: (usize, usize),
    /// Pairs where both target and rho are zero (ratio taken as 0).
    pub zero_over_zero_count: usize,
}

/// `max_(s,a) d(s,a) / rho(s,a)` with the `0/0 = 0` convention; positive
/// mass over zero makes the coefficient infinite.
pub fn concentrability(target: &OccupancyMeasure, rho: &[f64]) -> Result<ConcentrabilityReport> {
    let d = &target.d_state_action;
    if rho.len() != d.data.len() {
        return Err(Error::param("rho", "shape does not match the occupancy table"));
    }
    if rho.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
        return Err(Error::param("rho", "entries must be finite and non-negative"));
    }
    let cols = d.cols;
    let mut best = 0.0;
    let mut arg = (0, 0);
    let mut zero_over_zero = 0;
    let mut infinite_at = None;
    for (i, (&num, &den)) in d.data.iter().zip(rho).enumerate() {
        if num == 0.0 {
            if den == 0.0 {
                zero_over_zero += 1;
            }
            continue;
        }
        if den == 0.0 {
            infinite_at.get_or_insert((i / cols, i % cols));
            continue;
        }
        let ratio = num / den;
        if ratio > best {
            best = ratio;
            arg = (i / cols, i % cols);
        }
    }
    Ok(match infinite_at {
        Some(pair) => ConcentrabilityReport {
            c_star: Concentrability::Infinite,
            arg_max_pair: pair,
            zero_over_zero_count: zero_over_zero,
        },
        None => ConcentrabilityReport {
            c_star: Concentrability::Finite(best),
            arg_max_pair: arg,
            zero_over_zero_count: zero_over_zero,
        },
    })
}

/// `(1 - beta) rho + beta d_ref`, entrywise over `(s, a)`.
pub fn mix_occupancies(rho: &[f64], d_ref: &OccupancyMeasure, beta: f64) -> Result<Vec<f64>> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::param("beta", "must lie in (0, 1)"));
    }
    if rho.len() != d_ref.d_state_action.data.len() {
        return Err(Error::param("rho", "shape does not match the occupancy table"));
    }
    Ok(rho
        .iter()
        .zip(&d_ref.d_state_action.data)
        .map(|(r, d)| (1.0 - beta) * r + beta * d)
        .collect())
}
