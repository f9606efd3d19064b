//! Runs every `(algorithm, seed)` cell of an experiment and summarizes the
//! final rounds from the written CSV histories.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use rlif_core::loops::{run_bc, run_dagger, run_hg_dagger, run_rlif, warm_start_dataset};
use serde::{Deserialize, Serialize};

use crate::config::{solve, Algorithm, ExperimentConfig};
use crate::error::{LabError, Result};
use crate::io::{mean_std, read_history_csv, write_history_csv, write_json, RunArtifact};

pub fn cell_stem(algorithm: Algorithm, seed: u64) -> String {
    format!("{}_seed{seed}", algorithm.name())
}

/// Runs one cell; deterministic in `(config, algorithm, seed)`.
pub fn run_cell(config: &ExperimentConfig, algorithm: Algorithm, seed: u64) -> Result<RunArtifact> {
    let env = config.environment.build(seed)?;
    let mdp = &env.mdp;
    let optimal = solve(mdp)?;
    let expert = config.expert.build(&optimal, seed)?;
    let spec = config.loop_for(algorithm);
    let loop_config = spec.to_loop_config(seed, config.emit_value_snapshots);
    let records = match algorithm {
        Algorithm::Rlif => run_rlif(mdp, &expert, &loop_config)?,
        Algorithm::HgDagger => run_hg_dagger(mdp, &expert, &loop_config)?,
        Algorithm::Dagger => run_dagger(mdp, expert.pi_exp(), &loop_config, config.dagger_mode)?,
        Algorithm::Bc => {
            let demos = config
                .bc_demonstrations
                .unwrap_or(spec.rounds * spec.trajectories_per_round);
            let data = warm_start_dataset(mdp, expert.pi_exp(), demos, spec.horizon, spec.reward_convention, seed);
            vec![run_bc(mdp, &data, &loop_config)?]
        }
    };
    Ok(RunArtifact {
        algorithm,
        seed,
        n_states: mdp.n_states(),
        n_actions: mdp.n_actions(),
        grid: env.grid,
        optimal_return: optimal.0.value_at(mdp.initial_dist()),
        records,
    })
}

/// Final-round statistics of one algorithm across seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub algorithm: Algorithm,
    pub seeds: usize,
    pub final_return_mean: f64,
    pub final_return_std: f64,
    pub final_rate_mean: f64,
    pub final_rate_std: f64,
}

/// Runs all cells on at most `jobs` threads, writes `<stem>.csv`,
/// `<stem>.json` and `summary.csv` under `out_dir`.
pub fn run_experiment(config: &ExperimentConfig, jobs: usize, out_dir: &Path) -> Result<Vec<SummaryRow>> {
    std::fs::create_dir_all(out_dir).map_err(|e| LabError::io(out_dir, e))?;
    let cells: Vec<(Algorithm, u64)> = config
        .algorithms
        .iter()
        .flat_map(|&a| config.seeds.iter().map(move |&s| (a, s)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| LabError::Runtime(e.to_string()))?;
    pool.install(|| {
        cells.par_iter().try_for_each(|&(algorithm, seed)| {
            let artifact = run_cell(config, algorithm, seed)?;
            let stem = cell_stem(algorithm, seed);
            write_history_csv(&out_dir.join(format!("{stem}.csv")), &artifact.records)?;
            write_json(&out_dir.join(format!("{stem}.json")), &artifact)?;
            tracing::info!(algorithm = algorithm.name(), seed, "cell finished");
            Ok::<_, LabError>(())
        })
    })?;
    let summary = summarize(out_dir, &config.algorithms, &config.seeds)?;
    let mut w = csv::Writer::from_path(out_dir.join("summary.csv"))?;
    for row in &summary {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| LabError::io(out_dir.join("summary.csv"), e))?;
    Ok(summary)
}

/// Recomputes the summary from the per-run CSVs alone.
pub fn summarize(out_dir: &Path, algorithms: &[Algorithm], seeds: &[u64]) -> Result<Vec<SummaryRow>> {
    algorithms
        .iter()
        .map(|&algorithm| {
            let mut returns = Vec::with_capacity(seeds.len());
            let mut rates = Vec::with_capacity(seeds.len());
            for &seed in seeds {
                let path: PathBuf = out_dir.join(format!("{}.csv", cell_stem(algorithm, seed)));
                let rows = read_history_csv(&path)?;
                let last = rows
                    .last()
                    .ok_or_else(|| LabError::Runtime(format!("{} has no rounds", path.display())))?;
                returns.push(last.true_return);
                rates.push(last.intervention_rate);
            }
            let (final_return_mean, final_return_std) = mean_std(&returns);
            let (final_rate_mean, final_rate_std) = mean_std(&rates);
            Ok(SummaryRow {
                algorithm,
                seeds: seeds.len(),
                final_return_mean,
                final_return_std,
                final_rate_mean,
                final_rate_std,
            })
        })
        .collect()
}
