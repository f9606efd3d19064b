//! Simulated intervening experts and the labeled episode loop.

mod expert;
mod schedule;

pub use expert::{
    decide_value_based, expected_intervention_reward, ThresholdMode, TriggerAction,
    ValueBasedExpert, DEFAULT_TAKEOVER_STEPS,
};
pub use schedule::{RandomExpert, RandomInterventionSchedule, RatePreset};

use alloc::vec::Vec;
use core::cell::RefCell;
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::mdp::sim::{is_absorbing, sample_index};
use crate::mdp::{sample_transition, Policy, TabularMdp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Controller {
    Agent,
    Expert,
}

/// How an intervention event becomes a reward label.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RewardConvention {
    /// `-1` on the transition preceding an intervention, `0` otherwise.
    #[default]
    Penalty,
    /// `1 - [intervened_next]`.
    Survival,
}

impl RewardConvention {
    pub fn label(self, intervened_next: bool) -> f64 {
        match (self, intervened_next) {
            (RewardConvention::Penalty, true) => -1.0,
            (RewardConvention::Penalty, false) => 0.0,
            (RewardConvention::Survival, true) => 0.0,
            (RewardConvention::Survival, false) => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabeledTransition {
    pub s: usize,
    pub a: usize,
    pub s_next: usize,
    pub reward: f64,
    pub intervened_next: bool,
    pub controller: Controller,
    /// `s_next` is absorbing and ended the episode.
    #[serde(default)]
    pub terminal: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterventionEpisode {
    pub transitions: Vec<LabeledTransition>,
    pub intervention_count: usize,
    pub steps_under_expert_control: usize,
    pub total_steps: usize,
}

impl InterventionEpisode {
    pub fn chains(&self) -> bool {
        self.transitions.windows(2).all(|w| w[0].s_next == w[1].s)
    }
}

/// Fraction of steps under expert control; 0 for an empty episode.
pub fn intervention_rate(episode: &InterventionEpisode) -> f64 {
    if episode.total_steps == 0 {
        0.0
    } else {
        episode.steps_under_expert_control as f64 / episode.total_steps as f64
    }
}

/// Incremental episode builder shared by the simulated runner and live
/// sessions, so both apply the same labeling rule.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecorder {
    convention: RewardConvention,
    episode: InterventionEpisode,
}

impl EpisodeRecorder {
    pub fn new(convention: RewardConvention) -> Self {
        Self {
            convention,
            episode: InterventionEpisode {
                transitions: Vec::new(),
                intervention_count: 0,
                steps_under_expert_control: 0,
                total_steps: 0,
            },
        }
    }

    pub fn convention(&self) -> RewardConvention {
        self.convention
    }

    pub fn steps(&self) -> usize {
        self.episode.total_steps
    }

    pub fn transitions(&self) -> &[LabeledTransition] {
        &self.episode.transitions
    }

    /// Registers an intervention before the next step and labels the last
    /// recorded transition (if any).
    pub fn intervene(&mut self) {
        self.episode.intervention_count += 1;
        if let Some(prev) = self.episode.transitions.last_mut() {
            prev.intervened_next = true;
            prev.reward = self.convention.label(true);
        }
    }

    pub fn record(&mut self, s: usize, a: usize, s_next: usize, controller: Controller) {
        self.episode.transitions.push(LabeledTransition {
            s,
            a,
            s_next,
            reward: self.convention.label(false),
            intervened_next: false,
            controller,
            terminal: false,
        });
        self.episode.total_steps += 1;
        if controller == Controller::Expert {
            self.episode.steps_under_expert_control += 1;
        }
    }

    /// Flags the last transition as entering an absorbing state.
    pub fn mark_terminal(&mut self) {
        if let Some(last) = self.episode.transitions.last_mut() {
            last.terminal = true;
        }
    }

    pub fn finish(self) -> InterventionEpisode {
        self.episode
    }
}

/// A simulated expert: value-based trigger or a random schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Expert {
    ValueBased(ValueBasedExpert),
    Random(RandomExpert),
}

impl Expert {
    pub fn pi_exp(&self) -> &crate::mdp::DeterministicPolicy {
        match self {
            Expert::ValueBased(e) => &e.pi_exp,
            Expert::Random(e) => &e.pi_exp,
        }
    }
}

/// Per-episode control state of an expert.
#[derive(Debug, Clone)]
pub(crate) enum ControlState {
    ValueBased { takeover_left: usize },
    Random { agent_until: usize, expert_left: usize },
}

impl ControlState {
    pub(crate) fn start<R: Rng + ?Sized>(expert: &Expert, rng: &mut R) -> Self {
        match expert {
            Expert::ValueBased(_) => ControlState::ValueBased { takeover_left: 0 },
            Expert::Random(e) => ControlState::Random {
                agent_until: e.schedule.draw_gap(rng),
                expert_left: 0,
            },
        }
    }

    /// Controller of step `t`; the flag is true when a scheduled
    /// intervention starts at `t`.
    pub(crate) fn before_step<R: Rng + ?Sized>(&mut self, expert: &Expert, t: usize, rng: &mut R) -> (Controller, bool) {
        match (self, expert) {
            (ControlState::ValueBased { takeover_left }, Expert::ValueBased(_)) => {
                if *takeover_left > 0 {
                    *takeover_left -= 1;
                    (Controller::Expert, false)
                } else {
                    (Controller::Agent, false)
                }
            }
            (
                ControlState::Random {
                    agent_until,
                    expert_left,
                },
                Expert::Random(e),
            ) => {
                let event = if *expert_left > 0 {
                    false
                } else if t <= *agent_until {
                    return (Controller::Agent, false);
                } else {
                    *expert_left = e.schedule.draw_takeover(rng);
                    true
                };
                *expert_left -= 1;
                if *expert_left == 0 {
                    *agent_until = t + 1 + e.schedule.draw_gap(rng);
                }
                (Controller::Expert, event)
            }
            _ => unreachable!("control state built for a different expert"),
        }
    }

    /// Value-based judgement of the agent's executed action; true when the
    /// expert intervenes and takes over from the next step.
    pub(crate) fn after_agent_step<R: Rng + ?Sized>(
        &mut self,
        expert: &Expert,
        s: usize,
        a: usize,
        rng: &mut R,
    ) -> bool {
        match (self, expert) {
            (ControlState::ValueBased { takeover_left }, Expert::ValueBased(e)) if decide_value_based(e, s, a, rng) => {
                *takeover_left = e.takeover_steps;
                true
            }
            _ => false,
        }
    }
}

/// Runs one episode of at most `horizon` steps from `s0 ~ mu`.
///
/// A value-based expert judges each agent action as it is executed; on an
/// intervention that transition is labeled and the expert controls the next
/// `takeover_steps` steps. A random schedule labels the last agent
/// transition before each scheduled takeover. With `stop_at_absorbing` the
/// episode ends on reaching an absorbing state.
pub fn run_intervened_episode<P: Policy, R: Rng + ?Sized>(
    mdp: &TabularMdp,
    policy: &P,
    expert: &Expert,
    horizon: usize,
    convention: RewardConvention,
    stop_at_absorbing: bool,
    rng: &mut R,
) -> InterventionEpisode {
    let shared = RefCell::new(rng);
    run_intervened_episode_with(
        mdp,
        policy,
        expert,
        horizon,
        convention,
        stop_at_absorbing,
        &mut Shared(&shared),
        &mut Shared(&shared),
    )
}

/// Same episode with two generators: `env_rng` drives `s0`, the agent and
/// the dynamics, `expert_rng` drives intervention decisions and schedules.
/// A live session owns only the first; whoever intervenes owns the second.
#[allow(clippy::too_many_arguments)]
pub fn run_intervened_episode_with<P: Policy, E: Rng + ?Sized, X: Rng + ?Sized>(
    mdp: &TabularMdp,
    policy: &P,
    expert: &Expert,
    horizon: usize,
    convention: RewardConvention,
    stop_at_absorbing: bool,
    env_rng: &mut E,
    expert_rng: &mut X,
) -> InterventionEpisode {
    let mut recorder = EpisodeRecorder::new(convention);
    let mut control = ControlState::start(expert, expert_rng);
    let mut s = sample_index(mdp.initial_dist(), env_rng);
    for t in 0..horizon {
        if stop_at_absorbing && is_absorbing(mdp, s) {
            break;
        }
        let (controller, scheduled) = control.before_step(expert, t, expert_rng);
        if scheduled {
            recorder.intervene();
        }
        let a = match controller {
            Controller::Agent => policy.sample(s, env_rng),
            Controller::Expert => expert.pi_exp().act(s),
        };
        let next = sample_transition(mdp, s, a, env_rng);
        recorder.record(s, a, next, controller);
        if controller == Controller::Agent && control.after_agent_step(expert, s, a, expert_rng) {
            recorder.intervene();
        }
        s = next;
    }
    if stop_at_absorbing && is_absorbing(mdp, s) {
        recorder.mark_terminal();
    }
    recorder.finish()
}

/// One generator lent out as two handles, drawn from in call order.
struct Shared<'a, 'r, R: ?Sized>(&'a RefCell<&'r mut R>);

impl<R: RngCore + ?Sized> RngCore for Shared<'_, '_, R> {
    fn next_u32(&mut self) -> u32 {
        self.0.borrow_mut().next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.0.borrow_mut().next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.0.borrow_mut().fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> core::result::Result<(), rand::Error> {
        self.0.borrow_mut().try_fill_bytes(dest)
    }
}
