//! Executable checks of the suboptimality-gap, concentrability and metric
//! results: each check computes both sides exactly and reports flags.

mod bandit;
mod bounds;
mod gap;
mod metric;

pub use bandit::bandit_example;
pub use bounds::{hoeffding_interval, sample_complexity_expression, verify_lemma1, Lemma1Report};
pub use gap::{
    bc_loss, compute_pi_tilde, expected_reward_table, verify_cor1, verify_thm1, BcLossReport,
    GapReport,
};
pub use metric::{
    deterministic_policies, pi_opt_delta_monotonicity_probe, policy_metric_d, SubsetProbe,
    ENUMERATION_LIMIT,
};

/// Tolerance used for every bound-holding flag.
pub const BOUND_TOL: f64 = 1e-9;
