use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use super::BOUND_TOL;
use crate::error::{Error, Result};
use crate::mdp::{Policy, TabularMdp};
use crate::solvers::{
    concentrability, mix_occupancies, occupancy_distribution, Concentrability,
    ConcentrabilityReport, OccupancyMeasure,
};

/// Concentrability of the intervention mixture against both branch bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lemma1Report {
    pub mu_int: Vec<f64>,
    pub c_star_int: ConcentrabilityReport,
    pub c_star_rho: ConcentrabilityReport,
    pub c_star_exp: ConcentrabilityReport,
    /// `C*_rho / (1 - beta)`.
    pub bound_rho: Concentrability,
    /// `C*_exp / beta`.
    pub bound_exp: Concentrability,
    pub bound: Concentrability,
    pub beta: f64,
    pub holds: bool,
}

/// Checks `C*(mu_int) <= min(C*_rho / (1 - beta), C*_exp / beta)` where
/// `mu_int = (1 - beta) rho + beta d^ref` and every coefficient is taken
/// against the optimal occupancy.
pub fn verify_lemma1<P: Policy>(
    mdp: &TabularMdp,
    pi_star_occupancy: &OccupancyMeasure,
    pi_ref: &P,
    rho: &[f64],
    beta: f64,
) -> Result<Lemma1Report> {
    let d_ref = occupancy_distribution(mdp, pi_ref)?;
    let mu_int = mix_occupancies(rho, &d_ref, beta)?;
    let c_star_int = concentrability(pi_star_occupancy, &mu_int)?;
    let c_star_rho = concentrability(pi_star_occupancy, rho)?;
    let c_star_exp = concentrability(pi_star_occupancy, &d_ref.d_state_action.data)?;
    let bound_rho = c_star_rho.c_star.scale(1.0 / (1.0 - beta));
    let bound_exp = c_star_exp.c_star.scale(1.0 / beta);
    let bound = bound_rho.min(bound_exp);
    Ok(Lemma1Report {
        holds: c_star_int.c_star.at_most(bound, BOUND_TOL),
        mu_int,
        c_star_int,
        c_star_rho,
        c_star_exp,
        bound_rho,
        bound_exp,
        bound,
        beta,
    })
}

/// `S C*_exp / ((1 - gamma)^3 eps^2)`: the sample-complexity expression with
/// constants and log factors left out.
pub fn sample_complexity_expression(
    n_states: usize,
    c_star_exp: f64,
    gamma: f64,
    epsilon: f64,
) -> Result<f64> {
    if n_states == 0 {
        return Err(Error::param("n_states", "must be positive"));
    }
    if !(c_star_exp.is_finite() && c_star_exp > 0.0) {
        return Err(Error::param("c_star_exp", "must be finite and positive"));
    }
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::param("gamma", "must lie in [0, 1)"));
    }
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::param("epsilon", "must be finite and positive"));
    }
    Ok(n_states as f64 * c_star_exp / (libm::pow(1.0 - gamma, 3.0) * epsilon * epsilon))
}

/// Half-width `t` with `2 exp(-n t^2 / width^2) = failure_prob`.
pub fn hoeffding_interval(n: u64, range_width: f64, failure_prob: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::param("n", "must be at least 1"));
    }
    if !(range_width.is_finite() && range_width > 0.0) {
        return Err(Error::param("range_width", "must be finite and positive"));
    }
    if !(failure_prob > 0.0 && failure_prob < 1.0) {
        return Err(Error::param("failure_prob", "must lie in (0, 1)"));
    }
    Ok(range_width * libm::sqrt(libm::log(2.0 / failure_prob) / n as f64))
}
