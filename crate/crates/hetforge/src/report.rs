//! Experiment reports: per-run metrics, per-target and overall aggregates,
//! JSON persistence, and a text table.
//!
//! The serialized form contains only deterministic content (wall-clock time
//! is kept in memory and printed to the console, never written), so
//! identical configs produce byte-identical report files.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{io_err, HetforgeError, Result};

pub const REPORT_VERSION: u32 = 1;

/// Softmax composition weights per prompt kind, as learned by a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptWeights {
    pub fea: Vec<f64>,
    pub edge: Vec<f64>,
    pub structure: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub seed: u64,
    pub micro_f1: f64,
    pub macro_f1: f64,
    pub best_epoch: usize,
    pub weights: PromptWeights,
}

/// Mean and population standard deviation over runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub n_runs: usize,
    pub micro_mean: f64,
    pub micro_std: f64,
    pub macro_mean: f64,
    pub macro_std: f64,
}

impl Aggregate {
    pub fn from_runs<'a>(runs: impl Iterator<Item = &'a RunReport> + Clone) -> Aggregate {
        let micro: Vec<f64> = runs.clone().map(|r| r.micro_f1).collect();
        let macro_: Vec<f64> = runs.map(|r| r.macro_f1).collect();
        let stat = |xs: &[f64]| -> (f64, f64) {
            if xs.is_empty() {
                return (0.0, 0.0);
            }
            let mean = xs.iter().sum::<f64>() / xs.len() as f64;
            let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / xs.len() as f64;
            (mean, var.sqrt())
        };
        let (micro_mean, micro_std) = stat(&micro);
        let (macro_mean, macro_std) = stat(&macro_);
        Aggregate { n_runs: micro.len(), micro_mean, micro_std, macro_mean, macro_std }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetReport {
    pub target: String,
    pub runs: Vec<RunReport>,
    pub aggregate: Aggregate,
}

impl TargetReport {
    pub fn new(target: String, runs: Vec<RunReport>) -> Self {
        let aggregate = Aggregate::from_runs(runs.iter());
        TargetReport { target, runs, aggregate }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub version: u32,
    /// Fingerprint of the canonicalized experiment config.
    pub config_digest: String,
    pub targets: Vec<TargetReport>,
    pub aggregate: Aggregate,
    /// Measured but never serialized, so report files stay byte-identical
    /// across reruns of the same config.
    #[serde(skip)]
    pub wall_clock_secs: f64,
}

impl ExperimentReport {
    pub fn new(config_digest: String, targets: Vec<TargetReport>) -> Self {
        let aggregate = Aggregate::from_runs(targets.iter().flat_map(|t| t.runs.iter()));
        ExperimentReport {
            version: REPORT_VERSION,
            config_digest,
            targets,
            aggregate,
            wall_clock_secs: 0.0,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self).expect("report serializes");
        fs::write(path, json + "\n").map_err(io_err(path))
    }

    pub fn load(path: &Path) -> Result<ExperimentReport> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        let report: ExperimentReport =
            serde_json::from_str(&text).map_err(|e| HetforgeError::Parse {
                file: path.to_path_buf(),
                line: e.line(),
                msg: e.to_string(),
            })?;
        if report.version != REPORT_VERSION {
            return Err(HetforgeError::Version {
                path: path.to_path_buf(),
                found: report.version,
                expected: REPORT_VERSION,
            });
        }
        Ok(report)
    }

    /// Human-readable summary table.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("config digest: {}\n", self.config_digest));
        out.push_str(&format!(
            "{:<16} {:>5} {:>19} {:>19} {:>11}\n",
            "target", "runs", "micro-F1", "macro-F1", "best epoch"
        ));
        let row = |name: &str, agg: &Aggregate, best: f64| {
            format!(
                "{:<16} {:>5} {:>9.4} ± {:>6.4} {:>9.4} ± {:>6.4} {:>11.1}\n",
                name, agg.n_runs, agg.micro_mean, agg.micro_std, agg.macro_mean, agg.macro_std, best
            )
        };
        for t in &self.targets {
            let best_mean = if t.runs.is_empty() {
                0.0
            } else {
                t.runs.iter().map(|r| r.best_epoch as f64).sum::<f64>() / t.runs.len() as f64
            };
            out.push_str(&row(&t.target, &t.aggregate, best_mean));
        }
        let all_best = {
            let runs: Vec<&RunReport> = self.targets.iter().flat_map(|t| t.runs.iter()).collect();
            if runs.is_empty() {
                0.0
            } else {
                runs.iter().map(|r| r.best_epoch as f64).sum::<f64>() / runs.len() as f64
            }
        };
        out.push_str(&row("ALL", &self.aggregate, all_best));
        out
    }
}

/// FNV-1a fingerprint of a canonical config string, rendered as hex.
pub fn digest_str(canonical: &str) -> String {
    let mut h: u64 = 0xCBF2_9CE4_8422_2325;
    for b in canonical.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    format!("{h:016x}")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(seed: u64, micro: f64) -> RunReport {
        RunReport {
            seed,
            micro_f1: micro,
            macro_f1: micro - 0.05,
            best_epoch: 10,
            weights: PromptWeights { fea: vec![0.5, 0.5], edge: vec![0.5, 0.5], structure: vec![0.5, 0.5] },
        }
    }

    #[test]
    fn aggregate_is_recomputable_from_runs() {
        let t = TargetReport::new("d0".into(), vec![run(1, 0.5), run(2, 0.7)]);
        assert_eq!(t.aggregate.n_runs, 2);
        assert!((t.aggregate.micro_mean - 0.6).abs() < 1e-15);
        assert!((t.aggregate.micro_std - 0.1).abs() < 1e-12);
        let recomputed = Aggregate::from_runs(t.runs.iter());
        assert_eq!(recomputed, t.aggregate);
    }

    #[test]
    fn report_roundtrips_and_is_stable() {
        let report = ExperimentReport::new(
            "abcd".into(),
            vec![TargetReport::new("d0".into(), vec![run(1, 0.5)])],
        );
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.json");
        report.save(&path).unwrap();
        let loaded = ExperimentReport::load(&path).unwrap();
        assert_eq!(loaded, report);
        let bytes1 = std::fs::read(&path).unwrap();
        loaded.save(&path).unwrap();
        assert_eq!(bytes1, std::fs::read(&path).unwrap());
        assert!(report.render_table().contains("d0"));
    }
}
