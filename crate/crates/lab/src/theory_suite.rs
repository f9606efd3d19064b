//! Seeded sweeps behind `verify-theory`.

use std::str::FromStr;

use rand::Rng;
use rlif_core::mdp::{build_random_mdp, DeterministicPolicy, StochasticPolicy, TabularMdp};
use rlif_core::rng::derive;
use rlif_core::solvers::{occupancy_distribution, Concentrability};
use rlif_core::theory::{
    bandit_example, pi_opt_delta_monotonicity_probe, policy_metric_d, verify_cor1, verify_lemma1,
    verify_thm1, BOUND_TOL,
};
use serde::Serialize;

use crate::config::solve;
use crate::error::{LabError, Result};

const BETA: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Thm1,
    Cor1,
    Lemma1,
    Bandit,
    Metric,
    All,
}

impl FromStr for Suite {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "thm1" => Suite::Thm1,
            "cor1" => Suite::Cor1,
            "lemma1" => Suite::Lemma1,
            "bandit" => Suite::Bandit,
            "metric" => Suite::Metric,
            "all" => Suite::All,
            other => {
                return Err(LabError::field(
                    "suite",
                    format!("unknown suite `{other}` (thm1, cor1, lemma1, bandit, metric, all)"),
                ))
            }
        })
    }
}

/// A failing case with enough context to reproduce it.
#[derive(Debug, Clone, Serialize)]
pub struct Violation {
    pub case: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mdp: Option<TabularMdp>,
    pub detail: serde_json::Value,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    /// Cases the check applies to.
    pub applicable: usize,
    pub passed: usize,
    /// Largest `lhs - rhs` seen; at most the check tolerance when every
    /// case holds. The bandit suite reports `|lhs - rhs|`.
    pub worst_margin: f64,
    pub violations: Vec<Violation>,
}

impl SuiteReport {
    fn new(suite: Suite) -> Self {
        SuiteReport {
            suite,
            applicable: 0,
            passed: 0,
            worst_margin: f64::NEG_INFINITY,
            violations: Vec::new(),
        }
    }

    fn record(&mut self, margin: f64, ok: bool, violation: impl FnOnce() -> Violation) {
        self.applicable += 1;
        self.worst_margin = self.worst_margin.max(margin);
        if ok {
            self.passed += 1;
        } else {
            self.violations.push(violation());
        }
    }

    pub fn all_passed(&self) -> bool {
        self.violations.is_empty()
    }
}

fn random_case(seed: u64, case: u64) -> (TabularMdp, DeterministicPolicy, DeterministicPolicy, f64) {
    let mut rng = derive(seed, case);
    let n = rng.gen_range(2..=6);
    let m = rng.gen_range(2..=3);
    let mdp = build_random_mdp(n, m, 0.9, rng.gen()).expect("sizes are valid");
    let star = solve(&mdp).expect("random MDPs solve").1;
    let pi_exp = DeterministicPolicy::new((0..n).map(|_| rng.gen_range(0..m)).collect(), m).expect("in range");
    let delta = rng.gen_range(0.0..=1.5);
    (mdp, star, pi_exp, delta)
}

fn random_stochastic(n: usize, m: usize, rng: &mut impl Rng) -> StochasticPolicy {
    let mut probs = Vec::with_capacity(n * m);
    for _ in 0..n {
        let raw: Vec<f64> = (0..m).map(|_| rng.gen::<f64>() + 1e-3).collect();
        let total: f64 = raw.iter().sum();
        probs.extend(raw.iter().map(|x| x / total));
    }
    StochasticPolicy::new(probs, m).expect("rows are normalized")
}

fn thm1(cases: u64, seed: u64) -> Result<SuiteReport> {
    let mut report = SuiteReport::new(Suite::Thm1);
    for case in 0..cases {
        let (mdp, star, pi_exp, delta) = random_case(seed, case);
        let r = verify_thm1(&mdp, &pi_exp, &star, delta, BETA)?;
        let ordered = r.rhs_rlif <= r.rhs_dagger;
        if !r.per_state_condition_satisfiable && ordered {
            continue;
        }
        let ok = ordered && (!r.per_state_condition_satisfiable || (r.holds_rlif && r.holds_dagger));
        report.record(r.lhs - r.rhs_rlif, ok, || Violation {
            case,
            mdp: Some(mdp.clone()),
            detail: serde_json::json!({ "pi_exp": pi_exp, "pi_ref": star, "report": r }),
        });
    }
    Ok(report)
}

fn cor1(cases: u64, seed: u64) -> Result<SuiteReport> {
    let mut report = SuiteReport::new(Suite::Cor1);
    for case in 0..cases {
        let (mdp, _, pi_exp, delta) = random_case(seed, case);
        let r = verify_cor1(&mdp, &pi_exp, delta, BETA)?;
        if !r.per_state_condition_satisfiable {
            continue;
        }
        report.record(r.lhs - r.rhs_dagger, r.holds_dagger, || Violation {
            case,
            mdp: Some(mdp.clone()),
            detail: serde_json::json!({ "pi_exp": pi_exp, "report": r }),
        });
    }
    Ok(report)
}

fn lemma1(cases: u64, seed: u64) -> Result<SuiteReport> {
    let mut report = SuiteReport::new(Suite::Lemma1);
    for case in 0..cases {
        let (mdp, star, _, _) = random_case(seed, case);
        let (n, m) = (mdp.n_states(), mdp.n_actions());
        let d_star = occupancy_distribution(&mdp, &star)?;
        let reference = random_stochastic(n, m, &mut derive(seed ^ 0x5eed, case));
        let rho = vec![1.0 / (n * m) as f64; n * m];
        for beta in [0.25, 0.5, 0.75] {
            let r = verify_lemma1(&mdp, &d_star, &reference, &rho, beta)?;
            let margin = match (r.c_star_int.c_star, r.bound) {
                (Concentrability::Finite(c), Concentrability::Finite(b)) => c - b,
                (_, Concentrability::Infinite) => f64::NEG_INFINITY,
                (Concentrability::Infinite, _) => f64::INFINITY,
            };
            report.record(margin, r.holds, || Violation {
                case,
                mdp: Some(mdp.clone()),
                detail: serde_json::json!({ "beta": beta, "report": r }),
            });
        }
    }
    Ok(report)
}

fn bandit() -> Result<SuiteReport> {
    let mut report = SuiteReport::new(Suite::Bandit);
    let grid = [0.2, 0.4, 0.6, 0.8, 1.0];
    let mut case = 0;
    for &x1 in &grid {
        for &x2 in grid.iter().filter(|&&x| x <= x1) {
            for delta in [0.0, 0.05, 0.1] {
                for gamma in [0.9, 0.99] {
                    let r = bandit_example(x1, x2, delta, BETA, gamma)?;
                    let gap = (r.lhs - r.rhs_rlif).abs();
                    report.record(gap, gap <= BOUND_TOL, || Violation {
                        case,
                        mdp: None,
                        detail: serde_json::json!({ "x1": x1, "x2": x2, "report": r }),
                    });
                    case += 1;
                }
            }
        }
    }
    Ok(report)
}

fn metric(cases: u64, seed: u64) -> Result<SuiteReport> {
    let mut report = SuiteReport::new(Suite::Metric);
    let mut rng = derive(seed, u64::MAX);
    for case in 0..cases * 50 {
        let n = rng.gen_range(1..=5);
        let m = rng.gen_range(2..=4);
        let [a, b, c] = [(); 3].map(|_| random_stochastic(n, m, &mut rng));
        let d = |x: &StochasticPolicy, y: &StochasticPolicy| policy_metric_d(x, y);
        let (ab, ba, bc, ac, aa) = (d(&a, &b)?, d(&b, &a)?, d(&b, &c)?, d(&a, &c)?, d(&a, &a)?);
        let excess = ac - ab - bc;
        let ok = aa <= 1e-12 && (ab - ba).abs() <= 1e-12 && (a == b || ab > 0.0) && excess <= 1e-12;
        report.record(excess, ok, || Violation {
            case,
            mdp: None,
            detail: serde_json::json!({ "a": a, "b": b, "c": c }),
        });
    }
    for case in 0..cases {
        let mut rng = derive(seed, case);
        let mdp = build_random_mdp(3, 2, 0.9, rng.gen())?;
        let star = solve(&mdp)?.1;
        let pi_exp = DeterministicPolicy::new((0..3).map(|_| rng.gen_range(0..2)).collect(), 2)?;
        let small = rng.gen_range(0.0..1.0);
        let large = small + rng.gen_range(0.0..1.0);
        let probe = pi_opt_delta_monotonicity_probe(&mdp, &pi_exp, &star, BETA, small, large)?;
        report.record(f64::NEG_INFINITY, probe.holds, || Violation {
            case,
            mdp: Some(mdp.clone()),
            detail: serde_json::json!({ "delta_small": small, "delta_large": large, "probe": probe }),
        });
    }
    Ok(report)
}

/// Runs `suite` (or every suite) with `cases` random instances each.
pub fn run_suite(suite: Suite, cases: u64, seed: u64) -> Result<Vec<SuiteReport>> {
    Ok(match suite {
        Suite::Thm1 => vec![thm1(cases, seed)?],
        Suite::Cor1 => vec![cor1(cases, seed)?],
        Suite::Lemma1 => vec![lemma1(cases, seed)?],
        Suite::Bandit => vec![bandit()?],
        Suite::Metric => vec![metric(cases, seed)?],
        Suite::All => vec![
            thm1(cases, seed)?,
            cor1(cases, seed)?,
            lemma1(cases, seed)?,
            bandit()?,
            metric(cases, seed)?,
        ],
    })
}
