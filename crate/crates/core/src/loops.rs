//! Round-based training loops: RLIF, HG-DAgger, DAgger and behavioral
//! cloning, each producing a per-round history.
//!
//! Round `i` collects with the policy fitted after round `i - 1` (the
//! all-lowest-index policy when nothing has been fitted yet), appends the new
//! data, refits from scratch on the whole dataset and reports the refitted
//! policy.

use alloc::vec::Vec;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::intervention::{
    run_intervened_episode, ControlState, Controller, Expert, InterventionEpisode, LabeledTransition, RatePreset,
    RandomExpert, RewardConvention,
};
use crate::learners::{
    fit_supervised, model_based_solution, q_learning_table, Dataset,
    SupervisedFilter,
};
use crate::mdp::{rollout, DeterministicPolicy, Policy, TabularMdp};
use crate::rng::derive;
use crate::solvers::policy_evaluation;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LearnerSpec {
    ModelBased { pessimism: f64 },
    QLearning { learning_rate: f64, sweeps: usize },
    Supervised { filter: SupervisedFilter },
}

impl Default for LearnerSpec {
    fn default() -> Self {
        LearnerSpec::ModelBased {
            pessimism: DEFAULT_PESSIMISM,
        }
    }
}

pub const DEFAULT_PESSIMISM: f64 = 1.0;
pub const DEFAULT_EXPLORATION: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopConfig {
    pub rounds: usize,
    pub trajectories_per_round: usize,
    pub horizon: usize,
    #[serde(default)]
    pub reward_convention: RewardConvention,
    #[serde(default)]
    pub learner: LearnerSpec,
    #[serde(default)]
    pub warm_start: Option<Dataset>,
    /// Probability that the agent proposes a uniformly random action instead
    /// of its policy's action during collection.
    #[serde(default = "default_exploration")]
    pub exploration: f64,
    /// End episodes on reaching an absorbing state.
    #[serde(default = "yes")]
    pub stop_at_absorbing: bool,
    /// Rounds whose learner value table is kept in the history.
    #[serde(default)]
    pub snapshot_rounds: Vec<usize>,
    pub seed: u64,
}

fn yes() -> bool {
    true
}

fn default_exploration() -> f64 {
    DEFAULT_EXPLORATION
}

impl LoopConfig {
    pub fn new(rounds: usize, trajectories_per_round: usize, horizon: usize, seed: u64) -> Self {
        Self {
            rounds,
            trajectories_per_round,
            horizon,
            reward_convention: RewardConvention::Penalty,
            learner: LearnerSpec::default(),
            warm_start: None,
            exploration: DEFAULT_EXPLORATION,
            stop_at_absorbing: true,
            snapshot_rounds: Vec::new(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rounds == 0 {
            return Err(Error::param("rounds", "must be at least 1"));
        }
        if self.trajectories_per_round == 0 {
            return Err(Error::param("trajectories_per_round", "must be at least 1"));
        }
        if self.horizon == 0 {
            return Err(Error::param("horizon", "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.exploration) {
            return Err(Error::param("exploration", "must lie in [0, 1]"));
        }
        match self.learner {
            LearnerSpec::ModelBased { pessimism } if !(pessimism >= 0.0 && pessimism.is_finite()) => {
                Err(Error::param("pessimism", "must be finite and >= 0"))
            }
            LearnerSpec::QLearning { learning_rate, sweeps }
                if !(learning_rate > 0.0 && learning_rate <= 1.0) || sweeps == 0 =>
            {
                Err(Error::param("learner", "q-learning needs learning_rate in (0, 1] and sweeps >= 1"))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    pub policy: DeterministicPolicy,
    /// `V^pi(mu)` under the true reward; reporting only.
    pub true_return: f64,
    pub intervention_rate: f64,
    pub dataset_size: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value_snapshot: Option<Vec<f64>>,
}

/// How DAgger picks the steps that get expert labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", content = "preset", rename_all = "snake_case")]
pub enum DaggerMode {
    ActionDiscrepancy,
    Random(RatePreset),
}

/// Agent that takes a uniformly random action with probability `epsilon`.
#[derive(Debug, Clone, Copy)]
pub struct Exploring<'a> {
    pub policy: &'a DeterministicPolicy,
    pub epsilon: f64,
}

impl Policy for Exploring<'_> {
    fn n_states(&self) -> usize {
        self.policy.n_states()
    }

    fn n_actions(&self) -> usize {
        self.policy.n_actions()
    }

    fn prob(&self, s: usize, a: usize) -> f64 {
        let uniform = self.epsilon / self.n_actions() as f64;
        uniform + if self.policy.act(s) == a { 1.0 - self.epsilon } else { 0.0 }
    }

    fn sample<R: Rng + ?Sized>(&self, s: usize, rng: &mut R) -> usize {
        if self.epsilon > 0.0 && rng.gen::<f64>() < self.epsilon {
            rng.gen_range(0..self.n_actions())
        } else {
            self.policy.act(s)
        }
    }
}

/// A refit learner: its greedy policy and, for RL learners, its state values.
#[derive(Debug, Clone, PartialEq)]
pub struct Fit {
    pub policy: DeterministicPolicy,
    pub values: Option<Vec<f64>>,
}

/// Fits `learner` on `dataset` from scratch; an empty dataset gives the
/// lowest-index policy. `seed` only matters for Q-learning.
pub fn fit(mdp: &TabularMdp, dataset: &Dataset, learner: LearnerSpec, seed: u64) -> Result<Fit> {
    let (n, m, gamma) = (mdp.n_states(), mdp.n_actions(), mdp.gamma());
    if dataset.is_empty() {
        return Ok(Fit {
            policy: DeterministicPolicy::lowest_index(n, m),
            values: None,
        });
    }
    Ok(match learner {
        LearnerSpec::ModelBased { pessimism } => {
            let (vf, policy) = model_based_solution(dataset, n, m, gamma, pessimism)?;
            Fit {
                policy,
                values: Some(vf.v),
            }
        }
        LearnerSpec::QLearning { learning_rate, sweeps } => {
            let q = q_learning_table(dataset, n, m, gamma, learning_rate, sweeps, seed)?;
            let values = (0..n)
                .map(|s| q.row(s).iter().copied().fold(f64::NEG_INFINITY, f64::max))
                .collect();
            Fit {
                policy: DeterministicPolicy::greedy(&q.data, m),
                values: Some(values),
            }
        }
        LearnerSpec::Supervised { filter } => Fit {
            policy: fit_supervised(dataset, filter, n, m)?,
            values: None,
        },
    })
}

fn check_expert(mdp: &TabularMdp, expert: &Expert) -> Result<()> {
    expert.pi_exp().check_against(mdp)?;
    if let Expert::ValueBased(e) = expert {
        e.validate()?;
        if e.q_ref.data.len() != mdp.n_states() * mdp.n_actions() {
            return Err(Error::param("q_ref", "shape does not match the MDP"));
        }
    }
    Ok(())
}

/// `V^pi(mu)` under the true reward.
pub fn true_return(mdp: &TabularMdp, policy: &DeterministicPolicy) -> Result<f64> {
    Ok(policy_evaluation(mdp, policy)?.value_at(mdp.initial_dist()))
}

/// Shared round driver: `collect` gathers one round of data given the
/// current policy and returns the new transitions with the round's
/// intervention (or labeling) rate.
fn drive(
    mdp: &TabularMdp,
    config: &LoopConfig,
    learner: LearnerSpec,
    mut collect: impl FnMut(&DeterministicPolicy, &mut crate::rng::LabRng) -> (Vec<LabeledTransition>, f64),
) -> Result<Vec<RoundRecord>> {
    config.validate()?;
    let mut dataset = config.warm_start.clone().unwrap_or_default();
    let mut current = fit(mdp, &dataset, learner, config.seed)?;
    let mut history = Vec::with_capacity(config.rounds);
    for round in 1..=config.rounds {
        let mut rng = derive(config.seed, round as u64);
        let (new, rate) = collect(&current.policy, &mut rng);
        dataset.extend(new, round);
        current = fit(mdp, &dataset, learner, config.seed ^ round as u64)?;
        history.push(RoundRecord {
            round,
            policy: current.policy.clone(),
            true_return: true_return(mdp, &current.policy)?,
            intervention_rate: rate,
            dataset_size: dataset.len(),
            value_snapshot: if config.snapshot_rounds.contains(&round) {
                current.values.clone()
            } else {
                None
            },
        });
    }
    Ok(history)
}

fn collect_episodes(
    mdp: &TabularMdp,
    policy: &DeterministicPolicy,
    expert: &Expert,
    config: &LoopConfig,
    rng: &mut crate::rng::LabRng,
) -> Vec<InterventionEpisode> {
    let agent = Exploring {
        policy,
        epsilon: config.exploration,
    };
    (0..config.trajectories_per_round)
        .map(|_| {
            run_intervened_episode(
                mdp,
                &agent,
                expert,
                config.horizon,
                config.reward_convention,
                config.stop_at_absorbing,
                rng,
            )
        })
        .collect()
}

fn pooled_rate(episodes: &[InterventionEpisode]) -> f64 {
    let total: usize = episodes.iter().map(|e| e.total_steps).sum();
    let expert: usize = episodes.iter().map(|e| e.steps_under_expert_control).sum();
    if total == 0 {
        0.0
    } else {
        expert as f64 / total as f64
    }
}

/// RLIF: every collected transition enters the dataset with its intervention
/// label, and the RL learner refits on those labels only.
pub fn run_rlif(mdp: &TabularMdp, expert: &Expert, config: &LoopConfig) -> Result<Vec<RoundRecord>> {
    check_expert(mdp, expert)?;
    if matches!(config.learner, LearnerSpec::Supervised { .. }) {
        return Err(Error::param("learner", "RLIF needs an RL learner"));
    }
    drive(mdp, config, config.learner, |policy, rng| {
        let episodes = collect_episodes(mdp, policy, expert, config, rng);
        let rate = pooled_rate(&episodes);
        let new = episodes.into_iter().flat_map(|e| e.transitions).collect();
        (new, rate)
    })
}

/// HG-DAgger: only expert-controlled `(s, pi_exp(s))` pairs are kept; the
/// learner is majority-vote imitation over the whole dataset.
pub fn run_hg_dagger(mdp: &TabularMdp, expert: &Expert, config: &LoopConfig) -> Result<Vec<RoundRecord>> {
    check_expert(mdp, expert)?;
    let learner = LearnerSpec::Supervised {
        filter: SupervisedFilter::All,
    };
    drive(mdp, config, learner, |policy, rng| {
        let episodes = collect_episodes(mdp, policy, expert, config, rng);
        let rate = pooled_rate(&episodes);
        let new = episodes
            .into_iter()
            .flat_map(|e| e.transitions)
            .filter(|t| t.controller == Controller::Expert)
            .collect();
        (new, rate)
    })
}

/// DAgger with relabeling: the agent acts on every step and the selected
/// steps are stored with the expert's action. Stored transitions keep the
/// observed `s_next`; only `(s, a)` matters to the supervised learner.
pub fn run_dagger(
    mdp: &TabularMdp,
    pi_exp: &DeterministicPolicy,
    config: &LoopConfig,
    mode: DaggerMode,
) -> Result<Vec<RoundRecord>> {
    pi_exp.check_against(mdp)?;
    let learner = LearnerSpec::Supervised {
        filter: SupervisedFilter::All,
    };
    let selector = match mode {
        DaggerMode::ActionDiscrepancy => None,
        DaggerMode::Random(preset) => Some(Expert::Random(RandomExpert::new(
            pi_exp.clone(),
            preset.schedule(),
        ))),
    };
    drive(mdp, config, learner, |policy, rng| {
        let agent = Exploring {
            policy,
            epsilon: config.exploration,
        };
        let mut new = Vec::new();
        let (mut labeled, mut total) = (0usize, 0usize);
        for _ in 0..config.trajectories_per_round {
            let steps: Vec<(usize, usize, usize, bool)> = match &selector {
                None => rollout(mdp, &agent, config.horizon, rng, config.stop_at_absorbing)
                    .steps
                    .iter()
                    .map(|st| (st.state, st.action, st.next_state, st.action != pi_exp.act(st.state)))
                    .collect(),
                // the schedule only marks steps; the agent keeps acting
                Some(sel) => run_schedule_marks(mdp, &agent, sel, config, rng),
            };
            for (s, _, s_next, selected) in steps {
                total += 1;
                if selected {
                    labeled += 1;
                    new.push(LabeledTransition {
                        s,
                        a: pi_exp.act(s),
                        s_next,
                        reward: config.reward_convention.label(false),
                        intervened_next: false,
                        controller: Controller::Expert,
                        terminal: false,
                    });
                }
            }
        }
        let rate = if total == 0 { 0.0 } else { labeled as f64 / total as f64 };
        (new, rate)
    })
}

/// Agent rollout where a random schedule decides which steps are labeled.
fn run_schedule_marks(
    mdp: &TabularMdp,
    agent: &Exploring<'_>,
    selector: &Expert,
    config: &LoopConfig,
    rng: &mut crate::rng::LabRng,
) -> Vec<(usize, usize, usize, bool)> {
    let mut control = ControlState::start(selector, rng);
    let traj = rollout(mdp, agent, config.horizon, rng, config.stop_at_absorbing);
    traj.steps
        .iter()
        .enumerate()
        .map(|(t, st)| {
            let (controller, _) = control.before_step(selector, t, rng);
            (st.state, st.action, st.next_state, controller == Controller::Expert)
        })
        .collect()
}

/// Behavioral cloning: one supervised fit on demonstrations.
pub fn run_bc(mdp: &TabularMdp, demonstrations: &Dataset, config: &LoopConfig) -> Result<RoundRecord> {
    config.validate()?;
    if demonstrations.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let policy = fit_supervised(demonstrations, SupervisedFilter::All, mdp.n_states(), mdp.n_actions())?;
    Ok(RoundRecord {
        round: 1,
        true_return: true_return(mdp, &policy)?,
        policy,
        intervention_rate: 0.0,
        dataset_size: demonstrations.len(),
        value_snapshot: None,
    })
}

/// Zero-labeled transitions from `trajectories` rollouts of `policy`, tagged
/// as round 0 (warm-start data).
pub fn warm_start_dataset<P: Policy>(
    mdp: &TabularMdp,
    policy: &P,
    trajectories: usize,
    horizon: usize,
    convention: RewardConvention,
    seed: u64,
) -> Dataset {
    let mut rng = derive(seed, u64::MAX);
    let mut d = Dataset::new();
    for _ in 0..trajectories {
        let traj = rollout(mdp, policy, horizon, &mut rng, true);
        let ends_absorbed = !traj.truncated && !traj.is_empty();
        let n = traj.len();
        for (i, st) in traj.steps.iter().enumerate() {
            d.push(
                LabeledTransition {
                    s: st.state,
                    a: st.action,
                    s_next: st.next_state,
                    reward: convention.label(false),
                    intervened_next: false,
                    controller: Controller::Agent,
                    terminal: ends_absorbed && i + 1 == n,
                },
                0,
            );
        }
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::intervention::{ThresholdMode, TriggerAction, ValueBasedExpert};
    use crate::mdp::{build_gridworld, build_random_mdp, GridworldSpec, StochasticPolicy};
    use crate::rng::seeded;
    use crate::solvers::{value_iteration, Table};
    use alloc::vec;

    fn gridworld(seed: u64) -> (GridworldSpec, TabularMdp, crate::solvers::ValueFunctions, DeterministicPolicy) {
        let spec = GridworldSpec::standard(seed);
        let mdp = build_gridworld(&spec).unwrap();
        let (vf, pi) = value_iteration(&mdp, 1e-12, 100_000).unwrap();
        (spec, mdp, vf, pi)
    }

    fn accurate(vf: &crate::solvers::ValueFunctions, pi: &DeterministicPolicy) -> Expert {
        Expert::ValueBased(
            ValueBasedExpert::new(pi.clone(), vf.q.clone(), 0.95, ThresholdMode::Absolute { delta: 0.01 }, 3)
                .unwrap(),
        )
    }

    /// beta = 1 with a flat q_ref: the condition never holds and the
    /// background probability is 0.
    fn silent(n: usize, m: usize) -> Expert {
        let q = Table { cols: m, data: vec![0.0; n * m] };
        Expert::ValueBased(
            ValueBasedExpert::new(
                DeterministicPolicy::lowest_index(n, m),
                q,
                1.0,
                ThresholdMode::Absolute { delta: 0.0 },
                3,
            )
            .unwrap(),
        )
    }

    #[test]
    fn rlif_converges_on_gridworld_route() {
        let (spec, mdp, vf, pi) = gridworld(2);
        let h = run_rlif(&mdp, &accurate(&vf, &pi), &LoopConfig::new(20, 5, 50, 2)).unwrap();
        let last = &h.last().unwrap().policy;
        let route = spec.route_states();
        for &s in &route[..route.len() - 1] {
            assert_eq!(last.act(s), pi.act(s));
        }
        assert!(h.windows(2).all(|w| w[0].dataset_size <= w[1].dataset_size));
        assert_eq!(h.iter().map(|r| r.round).collect::<Vec<_>>(), (1..=20).collect::<Vec<_>>());
    }

    #[test]
    fn rlif_is_deterministic() {
        let (_, mdp, vf, pi) = gridworld(4);
        let cfg = LoopConfig::new(5, 3, 40, 9);
        let a = run_rlif(&mdp, &accurate(&vf, &pi), &cfg).unwrap();
        let b = run_rlif(&mdp, &accurate(&vf, &pi), &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn silent_expert_gives_lowest_index_policy() {
        let mdp = build_random_mdp(5, 3, 0.9, 1).unwrap();
        let mut cfg = LoopConfig::new(4, 3, 30, 0);
        cfg.exploration = 0.0;
        let h = run_rlif(&mdp, &silent(5, 3), &cfg).unwrap();
        for r in &h {
            assert_eq!(r.policy, DeterministicPolicy::lowest_index(5, 3));
            assert_eq!(r.intervention_rate, 0.0);
        }
    }

    #[test]
    fn snapshots_only_for_requested_rounds() {
        let (_, mdp, vf, pi) = gridworld(0);
        let mut cfg = LoopConfig::new(4, 2, 30, 1);
        cfg.snapshot_rounds = vec![2, 4];
        let h = run_rlif(&mdp, &accurate(&vf, &pi), &cfg).unwrap();
        let with: Vec<usize> = h.iter().filter(|r| r.value_snapshot.is_some()).map(|r| r.round).collect();
        assert_eq!(with, vec![2, 4]);
        assert_eq!(h[1].value_snapshot.as_ref().unwrap().len(), 36);
    }

    #[test]
    fn rlif_rejects_supervised_learner_and_bad_config() {
        let (_, mdp, vf, pi) = gridworld(0);
        let mut cfg = LoopConfig::new(2, 2, 10, 0);
        cfg.learner = LearnerSpec::Supervised { filter: SupervisedFilter::All };
        assert!(run_rlif(&mdp, &accurate(&vf, &pi), &cfg).is_err());
        let cfg = LoopConfig::new(0, 2, 10, 0);
        assert!(run_rlif(&mdp, &accurate(&vf, &pi), &cfg).is_err());
    }

    #[test]
    fn q_learning_learner_runs() {
        let (_, mdp, vf, pi) = gridworld(1);
        let mut cfg = LoopConfig::new(3, 2, 30, 0);
        cfg.learner = LearnerSpec::QLearning { learning_rate: 0.5, sweeps: 20 };
        let h = run_rlif(&mdp, &accurate(&vf, &pi), &cfg).unwrap();
        assert_eq!(h.len(), 3);
    }

    #[test]
    fn hg_dagger_with_optimal_expert_reaches_goal() {
        let (spec, mdp, vf, pi) = gridworld(3);
        let mut cfg = LoopConfig::new(20, 5, 50, 3);
        cfg.exploration = 0.0;
        let h = run_hg_dagger(&mdp, &accurate(&vf, &pi), &cfg).unwrap();
        let last = &h.last().unwrap().policy;
        let t = rollout(&mdp, last, 50, &mut seeded(0), true);
        assert_eq!(t.last_state(), Some(spec.goal_state()));
    }

    #[test]
    fn hg_dagger_with_silent_expert_is_bc_on_warm_start() {
        let mdp = build_random_mdp(5, 3, 0.9, 2).unwrap();
        let warm = warm_start_dataset(&mdp, &StochasticPolicy::uniform(5, 3), 5, 20, RewardConvention::Penalty, 1);
        let mut cfg = LoopConfig::new(3, 2, 20, 0);
        cfg.warm_start = Some(warm.clone());
        let h = run_hg_dagger(&mdp, &silent(5, 3), &cfg).unwrap();
        let bc = run_bc(&mdp, &warm, &cfg).unwrap();
        for r in &h {
            assert_eq!(r.dataset_size, warm.len());
            assert_eq!(r.policy, bc.policy);
        }
    }

    #[test]
    fn hg_dagger_cannot_beat_a_fully_triggering_teacher() {
        let (_, mdp, vf, pi) = gridworld(5);
        let bad = pi.epsilon_corrupted(0.5, &mut derive(5, 77));
        let v_exp = true_return(&mdp, &bad).unwrap();
        let e = Expert::ValueBased(
            ValueBasedExpert::new(bad, vf.q.clone(), 1.0, ThresholdMode::Absolute { delta: 0.01 }, 3)
                .unwrap()
                .with_trigger(TriggerAction::ReferenceGreedy),
        );
        let h = run_hg_dagger(&mdp, &e, &LoopConfig::new(20, 5, 50, 5)).unwrap();
        assert!(h.last().unwrap().true_return <= v_exp + 1e-9);
    }

    #[test]
    fn dagger_discrepancy_labels_mismatches_only() {
        let mdp = build_random_mdp(6, 3, 0.9, 3).unwrap();
        let (_, pi) = value_iteration(&mdp, 1e-12, 100_000).unwrap();
        let mut cfg = LoopConfig::new(1, 10, 30, 4);
        cfg.exploration = 0.0;
        // round 1 collects with the all-zero policy
        let mismatch = (0..6).filter(|&s| pi.act(s) != 0).count();
        let h = run_dagger(&mdp, &pi, &cfg, DaggerMode::ActionDiscrepancy).unwrap();
        if mismatch == 0 {
            assert_eq!(h[0].dataset_size, 0);
        } else {
            assert!(h[0].dataset_size > 0);
        }
        assert!(h[0].intervention_rate > 0.0 && h[0].intervention_rate <= 1.0);
    }

    #[test]
    fn dagger_recovers_expert_on_visited_states() {
        let mdp = build_random_mdp(6, 3, 0.9, 8).unwrap();
        let (_, pi) = value_iteration(&mdp, 1e-12, 100_000).unwrap();
        let mut cfg = LoopConfig::new(10, 5, 40, 1);
        cfg.exploration = 0.0;
        let h = run_dagger(&mdp, &pi, &cfg, DaggerMode::ActionDiscrepancy).unwrap();
        let last = &h.last().unwrap().policy;
        let t = rollout(&mdp, last, 200, &mut seeded(2), false);
        for st in &t.steps {
            assert_eq!(last.act(st.state), pi.act(st.state));
        }
    }

    #[test]
    fn dagger_random_rate85_labels_most_steps() {
        let mdp = build_random_mdp(5, 2, 0.9, 0).unwrap();
        let pi = DeterministicPolicy::lowest_index(5, 2);
        let cfg = LoopConfig::new(1, 200, 50, 3);
        let h = run_dagger(&mdp, &pi, &cfg, DaggerMode::Random(RatePreset::Rate85)).unwrap();
        assert!((h[0].intervention_rate - 0.85).abs() <= 0.1, "{}", h[0].intervention_rate);
    }

    #[test]
    fn bc_contracts() {
        let (_, mdp, vf, pi) = gridworld(6);
        let cfg = LoopConfig::new(1, 1, 50, 0);
        let demos = warm_start_dataset(&mdp, &pi, 50, 50, RewardConvention::Penalty, 0);
        let r = run_bc(&mdp, &demos, &cfg).unwrap();
        for t in demos.transitions() {
            assert_eq!(r.policy.act(t.s), pi.act(t.s));
        }
        let v_star = vf.value_at(mdp.initial_dist());
        assert!((r.true_return - v_star).abs() < 1e-9);
        let poor = warm_start_dataset(&mdp, &StochasticPolicy::uniform(36, 4), 5, 50, RewardConvention::Penalty, 0);
        assert!(run_bc(&mdp, &poor, &cfg).unwrap().true_return < v_star);
        let mut twice = poor.clone();
        twice.append(&poor);
        assert_eq!(run_bc(&mdp, &twice, &cfg).unwrap().policy, run_bc(&mdp, &poor, &cfg).unwrap().policy);
        assert!(matches!(run_bc(&mdp, &Dataset::new(), &cfg), Err(Error::EmptyDataset)));
    }

    #[test]
    fn config_json_defaults() {
        let cfg: LoopConfig = serde_json::from_str(r#"{"rounds":3,"trajectories_per_round":5,"horizon":50,"seed":1}"#).unwrap();
        assert_eq!(cfg, LoopConfig::new(3, 5, 50, 1));
        let text = serde_json::to_string(&DaggerMode::Random(RatePreset::Rate30)).unwrap();
        assert_eq!(text, r#"{"mode":"random","preset":"rate30"}"#);
    }
}
