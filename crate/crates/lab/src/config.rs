//! Experiment configuration: a JSON document describing the environment
//! family, the intervening expert, loop settings, algorithms and seeds.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rlif_core::intervention::{
    Expert, RandomExpert, RatePreset, RewardConvention, ThresholdMode, TriggerAction,
    ValueBasedExpert, DEFAULT_TAKEOVER_STEPS,
};
use rlif_core::loops::{DaggerMode, LearnerSpec, LoopConfig, DEFAULT_EXPLORATION};
use rlif_core::mdp::{
    build_gridworld, build_random_mdp, build_two_action_bandit, DeterministicPolicy,
    GridworldSpec, TabularMdp,
};
use rlif_core::rng::derive;
use rlif_core::solvers::{value_iteration, ValueFunctions};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Stream used to corrupt the optimal policy into a suboptimal expert.
pub const EXPERT_CORRUPTION_STREAM: u64 = 77;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Rlif,
    HgDagger,
    Dagger,
    Bc,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Rlif => "rlif",
            Algorithm::HgDagger => "hg_dagger",
            Algorithm::Dagger => "dagger",
            Algorithm::Bc => "bc",
        }
    }
}

/// Environment family; the run seed also seeds the environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnvironmentSpec {
    /// The standard 6x6 grid, or `layout` with its seed replaced by the run seed.
    Gridworld {
        #[serde(default)]
        layout: Option<GridworldSpec>,
    },
    Bandit { gamma: f64 },
    Random {
        n_states: usize,
        n_actions: usize,
        gamma: f64,
    },
}

/// A built environment; `grid` is set for gridworlds.
#[derive(Debug, Clone)]
pub struct Environment {
    pub mdp: TabularMdp,
    pub grid: Option<GridworldSpec>,
}

impl EnvironmentSpec {
    pub fn build(&self, seed: u64) -> Result<Environment> {
        Ok(match self {
            EnvironmentSpec::Gridworld { layout } => {
                let spec = match layout {
                    Some(l) => GridworldSpec { seed, ..l.clone() },
                    None => GridworldSpec::standard(seed),
                };
                Environment {
                    mdp: build_gridworld(&spec)?,
                    grid: Some(spec),
                }
            }
            EnvironmentSpec::Bandit { gamma } => Environment {
                mdp: build_two_action_bandit(*gamma)?,
                grid: None,
            },
            EnvironmentSpec::Random {
                n_states,
                n_actions,
                gamma,
            } => Environment {
                mdp: build_random_mdp(*n_states, *n_actions, *gamma, seed)?,
                grid: None,
            },
        })
    }
}

/// The intervening expert. Its policy is the optimal policy, corrupted with
/// probability `corruption` per state when that is positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ExpertSpec {
    ValueBased {
        beta: f64,
        threshold: ThresholdMode,
        #[serde(default = "default_takeover")]
        takeover_steps: usize,
        #[serde(default)]
        trigger_action: TriggerAction,
        #[serde(default)]
        corruption: f64,
    },
    Random {
        preset: RatePreset,
        #[serde(default)]
        corruption: f64,
    },
}

fn default_takeover() -> usize {
    DEFAULT_TAKEOVER_STEPS
}

impl ExpertSpec {
    fn corruption(&self) -> f64 {
        match self {
            ExpertSpec::ValueBased { corruption, .. } | ExpertSpec::Random { corruption, .. } => *corruption,
        }
    }

    /// Builds the expert from the optimal solution `(Q*, pi*)`.
    pub fn build(&self, optimal: &(ValueFunctions, DeterministicPolicy), seed: u64) -> Result<Expert> {
        let (vf, star) = optimal;
        let corruption = self.corruption();
        let pi_exp = if corruption > 0.0 {
            star.epsilon_corrupted(corruption, &mut derive(seed, EXPERT_CORRUPTION_STREAM))
        } else {
            star.clone()
        };
        Ok(match self {
            ExpertSpec::ValueBased {
                beta,
                threshold,
                takeover_steps,
                trigger_action,
                ..
            } => Expert::ValueBased(
                ValueBasedExpert::new(pi_exp, vf.q.clone(), *beta, *threshold, *takeover_steps)?
                    .with_trigger(*trigger_action),
            ),
            ExpertSpec::Random { preset, .. } => Expert::Random(RandomExpert::new(pi_exp, preset.schedule())),
        })
    }
}

/// Loop settings shared by every algorithm unless overridden.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoopSpec {
    pub rounds: usize,
    pub trajectories_per_round: usize,
    pub horizon: usize,
    #[serde(default)]
    pub reward_convention: RewardConvention,
    #[serde(default)]
    pub learner: LearnerSpec,
    #[serde(default = "default_exploration")]
    pub exploration: f64,
    #[serde(default = "yes")]
    pub stop_at_absorbing: bool,
    #[serde(default)]
    pub snapshot_rounds: Vec<usize>,
}

fn default_exploration() -> f64 {
    DEFAULT_EXPLORATION
}

fn yes() -> bool {
    true
}

impl LoopSpec {
    pub fn to_loop_config(&self, seed: u64, emit_snapshots: bool) -> LoopConfig {
        LoopConfig {
            rounds: self.rounds,
            trajectories_per_round: self.trajectories_per_round,
            horizon: self.horizon,
            reward_convention: self.reward_convention,
            learner: self.learner,
            warm_start: None,
            exploration: self.exploration,
            stop_at_absorbing: self.stop_at_absorbing,
            snapshot_rounds: if emit_snapshots { self.snapshot_rounds.clone() } else { Vec::new() },
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub environment: EnvironmentSpec,
    pub expert: ExpertSpec,
    #[serde(rename = "loop")]
    pub loop_spec: LoopSpec,
    /// Per-algorithm replacements for `loop`.
    #[serde(default)]
    pub loop_overrides: BTreeMap<Algorithm, LoopSpec>,
    pub algorithms: Vec<Algorithm>,
    #[serde(default = "default_dagger_mode")]
    pub dagger_mode: DaggerMode,
    /// Expert rollouts used as behavioral-cloning demonstrations; defaults to
    /// `rounds * trajectories_per_round`.
    #[serde(default)]
    pub bc_demonstrations: Option<usize>,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub emit_value_snapshots: bool,
}

fn default_dagger_mode() -> DaggerMode {
    DaggerMode::ActionDiscrepancy
}

impl ExperimentConfig {
    /// Parses and validates; syntax errors carry the line and column.
    pub fn from_json(text: &str, path: &Path) -> Result<Self> {
        let config: Self = serde_json::from_str(text).map_err(|e| LabError::Config {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::Config {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Self::from_json(&text, path)
    }

    pub fn loop_for(&self, algorithm: Algorithm) -> &LoopSpec {
        self.loop_overrides.get(&algorithm).unwrap_or(&self.loop_spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.algorithms.is_empty() {
            return Err(LabError::field("algorithms", "list at least one algorithm"));
        }
        if self.seeds.is_empty() {
            return Err(LabError::field("seeds", "list at least one seed"));
        }
        let mut seen = self.seeds.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != self.seeds.len() {
            return Err(LabError::field("seeds", "seeds must be distinct"));
        }
        let corruption = self.expert.corruption();
        if !(0.0..=1.0).contains(&corruption) {
            return Err(LabError::field("expert.corruption", "must lie in [0, 1]"));
        }
        if let ExpertSpec::ValueBased { beta, .. } = self.expert {
            if !(beta > 0.5 && beta <= 1.0) {
                return Err(LabError::field("expert.beta", "must lie in (0.5, 1]"));
            }
        }
        for (name, spec) in std::iter::once(("loop".to_string(), &self.loop_spec))
            .chain(self.loop_overrides.iter().map(|(a, s)| (format!("loop_overrides.{}", a.name()), s)))
        {
            spec.to_loop_config(0, true)
                .validate()
                .map_err(|e| LabError::field(name.clone(), e.to_string()))?;
            if let Some(r) = spec.snapshot_rounds.iter().find(|r| **r == 0 || **r > spec.rounds) {
                return Err(LabError::field(
                    format!("{name}.snapshot_rounds"),
                    format!("round {r} is outside 1..={}", spec.rounds),
                ));
            }
        }
        if self.algorithms.contains(&Algorithm::Rlif)
            && matches!(self.loop_for(Algorithm::Rlif).learner, LearnerSpec::Supervised { .. })
        {
            return Err(LabError::field("loop.learner", "RLIF needs an RL learner"));
        }
        if self.bc_demonstrations == Some(0) {
            return Err(LabError::field("bc_demonstrations", "must be at least 1"));
        }
        Ok(())
    }
}

/// The bundled gridworld configuration with snapshots at rounds 2, 10, 20.
pub const GRIDWORLD_FIG3: &str = include_str!("../configs/gridworld_fig3.cfg");

/// Optimal values and policy, used for experts and evaluation.
pub fn solve(mdp: &TabularMdp) -> Result<(ValueFunctions, DeterministicPolicy)> {
    Ok(value_iteration(mdp, 1e-12, 1_000_000)?)
}
