//! File formats: per-run CSV histories, run artifacts (JSON), dataset JSON
//! Lines and value-heatmap matrices.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rlif_core::intervention::LabeledTransition;
use rlif_core::learners::Dataset;
use rlif_core::loops::RoundRecord;
use rlif_core::mdp::GridworldSpec;
use serde::{Deserialize, Serialize};

use crate::config::Algorithm;
use crate::error::{LabError, Result};

/// Version of the history CSV layout documented in the README.
pub const HISTORY_CSV_VERSION: u32 = 1;

/// One history CSV row: `round,true_return,intervention_rate,dataset_size`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryRow {
    pub round: usize,
    pub true_return: f64,
    pub intervention_rate: f64,
    pub dataset_size: usize,
}

impl From<&RoundRecord> for HistoryRow {
    fn from(r: &RoundRecord) -> Self {
        HistoryRow {
            round: r.round,
            true_return: r.true_return,
            intervention_rate: r.intervention_rate,
            dataset_size: r.dataset_size,
        }
    }
}

fn create(path: &Path) -> Result<File> {
    File::create(path).map_err(|e| LabError::io(path, e))
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| LabError::io(path, e))
}

pub fn write_history_csv(path: &Path, records: &[RoundRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    for r in records {
        w.serialize(HistoryRow::from(r))?;
    }
    w.flush().map_err(|e| LabError::io(path, e))?;
    Ok(())
}

pub fn read_history_csv(path: &Path) -> Result<Vec<HistoryRow>> {
    let mut r = csv::Reader::from_reader(open(path)?);
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

/// Everything one `(algorithm, seed)` cell produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunArtifact {
    pub algorithm: Algorithm,
    pub seed: u64,
    pub n_states: usize,
    pub n_actions: usize,
    /// Grid layout, for heatmap export.
    #[serde(default)]
    pub grid: Option<GridworldSpec>,
    pub optimal_return: f64,
    pub records: Vec<RoundRecord>,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n").map_err(|e| LabError::io(path, e))?;
    w.flush().map_err(|e| LabError::io(path, e))
}

pub fn read_run_artifact(path: &Path) -> Result<RunArtifact> {
    Ok(serde_json::from_reader(BufReader::new(open(path)?))?)
}

/// One dataset line: the transition and the round that added it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetLine {
    pub round: usize,
    #[serde(flatten)]
    pub transition: LabeledTransition,
}

pub fn write_dataset_jsonl<W: Write>(mut out: W, dataset: &Dataset) -> std::io::Result<()> {
    for (t, round) in dataset.iter() {
        let line = DatasetLine {
            round,
            transition: *t,
        };
        serde_json::to_writer(&mut out, &line)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_dataset_jsonl<R: BufRead>(input: R) -> Result<Dataset> {
    let mut d = Dataset::new();
    for line in input.lines() {
        let line = line.map_err(|e| LabError::io("<dataset>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let entry: DatasetLine = serde_json::from_str(&line)?;
        d.push(entry.transition, entry.round);
    }
    Ok(d)
}

/// Values laid out on the grid: row `r` holds `y = r + 1`, column `c` holds
/// `x = c + 1`. Without a grid the values form a single row.
pub fn heatmap_matrix(values: &[f64], grid: Option<&GridworldSpec>) -> Vec<Vec<f64>> {
    match grid {
        Some(g) => values.chunks(g.width).map(<[f64]>::to_vec).collect(),
        None => vec![values.to_vec()],
    }
}

pub fn write_matrix_csv<W: Write>(out: W, matrix: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    for row in matrix {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| LabError::io("<matrix>", e))?;
    Ok(())
}

pub fn read_matrix_csv(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).from_reader(open(path)?);
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

/// Heatmap of the value snapshot stored for `round`.
pub fn export_heatmap(artifact_path: &Path, round: usize) -> Result<Vec<Vec<f64>>> {
    let artifact = read_run_artifact(artifact_path)?;
    let values = artifact
        .records
        .iter()
        .find(|r| r.round == round)
        .and_then(|r| r.value_snapshot.as_deref())
        .ok_or_else(|| LabError::MissingSnapshot {
            path: artifact_path.to_path_buf(),
            round,
        })?;
    Ok(heatmap_matrix(values, artifact.grid.as_ref()))
}

/// Mean and sample standard deviation (0 for a single value).
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rlif_core::intervention::Controller;

    fn transition(s: usize, reward: f64) -> LabeledTransition {
        LabeledTransition {
            s,
            a: 1,
            s_next: s + 1,
            reward,
            intervened_next: reward < 0.0,
            controller: Controller::Agent,
            terminal: false,
        }
    }

    #[test]
    fn dataset_lines_round_trip() {
        let mut d = Dataset::new();
        d.push(transition(0, 0.0), 1);
        d.push(transition(3, -1.0), 2);
        let mut buf = Vec::new();
        write_dataset_jsonl(&mut buf, &d).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.starts_with("{\"round\":1,\"s\":0"));
        assert_eq!(read_dataset_jsonl(&buf[..]).unwrap(), d);
    }

    #[test]
    fn heatmap_rows_follow_the_grid() {
        let spec = GridworldSpec::standard(0);
        let values: Vec<f64> = (0..36).map(f64::from).collect();
        let m = heatmap_matrix(&values, Some(&spec));
        assert_eq!(m.len(), 6);
        assert_eq!(m[1][0], 6.0);
        assert_eq!(heatmap_matrix(&[1.0, 2.0], None), vec![vec![1.0, 2.0]]);
    }

    #[test]
    fn sample_std() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - 1.2909944487358056).abs() < 1e-15);
        assert_eq!(mean_std(&[5.0]), (5.0, 0.0));
    }
}
