use super::gap::GapReport;
use crate::error::{Error, Result};

/// Closed-form gaps on the one-state, two-arm bandit with `r = (1, 0)`.
///
/// Policies are `[x, 1 - x]` and have value `x / (1 - gamma)`. The reference
/// and expert are `x1 >= x2`. Among policies meeting both conditions
/// `x3 + delta >= x1` and `x3 + delta >= x2`, the worst one is
/// `x3 = max(x1 - delta, 0)`. That is the policy reported as `v_tilde`.
pub fn bandit_example(x1: f64, x2: f64, delta: f64, beta: f64, gamma: f64) -> Result<GapReport> {
    if !(0.0..=1.0).contains(&x1) || !(0.0..=1.0).contains(&x2) {
        return Err(Error::param("x1/x2", "must lie in [0, 1]"));
    }
    if x2 > x1 {
        return Err(Error::param("x2", "must not exceed x1"));
    }
    if !(delta.is_finite() && delta >= 0.0) {
        return Err(Error::param("delta", "must be finite and non-negative"));
    }
    if !(beta > 0.5 && beta <= 1.0) {
        return Err(Error::param("beta", "must lie in (0.5, 1]"));
    }
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::param("gamma", "must lie in [0, 1)"));
    }
    let horizon = 1.0 / (1.0 - gamma);
    let x3 = (x1 - delta).max(0.0);
    let loss_ref = if x3 != x1 { 1.0 } else { 0.0 };
    let loss_exp = if x3 != x2 { 1.0 } else { 0.0 };
    Ok(GapReport::assemble(
        (horizon, x1 * horizon, x2 * horizon, x3 * horizon),
        f64::max(loss_ref, loss_exp),
        delta,
        beta,
        gamma,
        true,
    ))
}
