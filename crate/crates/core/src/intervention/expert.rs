use alloc::format;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::policy::argmax_lowest;
use crate::mdp::{DeterministicPolicy, Policy};
use crate::solvers::{nested_table, Table};

pub const DEFAULT_TAKEOVER_STEPS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum ThresholdMode {
    /// Gap condition `q_ref(s, a_exp) > q_ref(s, a) + delta`.
    Absolute { delta: f64 },
    /// Gap condition `q_ref(s, a_exp) * alpha > q_ref(s, a)`.
    Relative { alpha: f64 },
}

/// Which action the agent's proposal is compared against.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TriggerAction {
    /// The expert's own action `pi_exp(s)`.
    #[default]
    ExpertAction,
    /// The greedy action of `q_ref`, so the trigger stays accurate when
    /// `pi_exp` itself is poor.
    ReferenceGreedy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ExpertWire", into = "ExpertWire")]
pub struct ValueBasedExpert {
    pub pi_exp: DeterministicPolicy,
    pub q_ref: Table,
    pub beta: f64,
    pub threshold_mode: ThresholdMode,
    pub takeover_steps: usize,
    pub trigger_action: TriggerAction,
}

#[derive(Serialize, Deserialize)]
struct ExpertWire {
    pi_exp: DeterministicPolicy,
    #[serde(with = "nested_table")]
    q_ref: Table,
    beta: f64,
    threshold_mode: ThresholdMode,
    #[serde(default = "default_takeover")]
    takeover_steps: usize,
    #[serde(default)]
    trigger_action: TriggerAction,
}

fn default_takeover() -> usize {
    DEFAULT_TAKEOVER_STEPS
}

impl From<ValueBasedExpert> for ExpertWire {
    fn from(e: ValueBasedExpert) -> Self {
        Self {
            pi_exp: e.pi_exp,
            q_ref: e.q_ref,
            beta: e.beta,
            threshold_mode: e.threshold_mode,
            takeover_steps: e.takeover_steps,
            trigger_action: e.trigger_action,
        }
    }
}

impl TryFrom<ExpertWire> for ValueBasedExpert {
    type Error = Error;

    fn try_from(w: ExpertWire) -> Result<Self> {
        let e = Self {
            pi_exp: w.pi_exp,
            q_ref: w.q_ref,
            beta: w.beta,
            threshold_mode: w.threshold_mode,
            takeover_steps: w.takeover_steps,
            trigger_action: w.trigger_action,
        };
        e.validate()?;
        Ok(e)
    }
}

impl ValueBasedExpert {
    pub fn new(
        pi_exp: DeterministicPolicy,
        q_ref: Table,
        beta: f64,
        threshold_mode: ThresholdMode,
        takeover_steps: usize,
    ) -> Result<Self> {
        let e = Self {
            pi_exp,
            q_ref,
            beta,
            threshold_mode,
            takeover_steps,
            trigger_action: TriggerAction::ExpertAction,
        };
        e.validate()?;
        Ok(e)
    }

    pub fn with_trigger(mut self, trigger: TriggerAction) -> Self {
        self.trigger_action = trigger;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.5 && self.beta <= 1.0) {
            return Err(Error::param("beta", format!("{} outside (0.5, 1]", self.beta)));
        }
        match self.threshold_mode {
            ThresholdMode::Absolute { delta } if !(delta >= 0.0 && delta.is_finite()) => {
                return Err(Error::param("delta", format!("{delta} is not a finite value >= 0")));
            }
            ThresholdMode::Relative { alpha } if !(alpha > 0.0 && alpha <= 1.0) => {
                return Err(Error::param("alpha", format!("{alpha} outside (0, 1]")));
            }
            _ => {}
        }
        let n_states = self.pi_exp.actions().len();
        let n_actions = self.pi_exp.n_actions();
        if self.q_ref.cols != n_actions || self.q_ref.data.len() != n_states * n_actions {
            return Err(Error::param("q_ref", "shape does not match pi_exp"));
        }
        if self.q_ref.data.iter().any(|q| !q.is_finite()) {
            return Err(Error::param("q_ref", "entries must be finite"));
        }
        Ok(())
    }

    /// Action the proposal is compared against at `s`.
    pub fn reference_action(&self, s: usize) -> usize {
        match self.trigger_action {
            TriggerAction::ExpertAction => self.pi_exp.act(s),
            TriggerAction::ReferenceGreedy => argmax_lowest(self.q_ref.row(s)),
        }
    }

    /// Whether the gap condition holds for proposal `a` at `s`.
    pub fn condition(&self, s: usize, a: usize) -> bool {
        let target = self.q_ref.get(s, self.reference_action(s));
        let proposed = self.q_ref.get(s, a);
        match self.threshold_mode {
            ThresholdMode::Absolute { delta } => target > proposed + delta,
            ThresholdMode::Relative { alpha } => target * alpha > proposed,
        }
    }

    pub fn intervention_probability(&self, s: usize, a: usize) -> f64 {
        if self.condition(s, a) {
            self.beta
        } else {
            1.0 - self.beta
        }
    }
}

/// One Bernoulli draw of the value-based intervention decision.
pub fn decide_value_based<R: Rng + ?Sized>(
    expert: &ValueBasedExpert,
    s: usize,
    a_policy: usize,
    rng: &mut R,
) -> bool {
    rng.gen::<f64>() < expert.intervention_probability(s, a_policy)
}

/// Expected survival label of taking `a` at `s`: `1 - beta` when either
/// reference gap exceeds `delta`, `beta` otherwise.
#[allow(clippy::too_many_arguments)]
pub fn expected_intervention_reward(
    a: usize,
    s: usize,
    pi_exp: &DeterministicPolicy,
    q_exp: &Table,
    pi_ref: &DeterministicPolicy,
    q_ref: &Table,
    delta: f64,
    beta: f64,
) -> f64 {
    let ref_gap = q_ref.get(s, pi_ref.act(s)) > q_ref.get(s, a) + delta;
    let exp_gap = q_exp.get(s, pi_exp.act(s)) > q_exp.get(s, a) + delta;
    if ref_gap || exp_gap {
        1.0 - beta
    } else {
        beta
    }
}
