//! Result files.

use std::path::Path;

use feduhd_core::{CommCost, RoundRecord, BYTES_PER_VALUE};
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};
use crate::experiment::Prepared;

pub const ROUNDS_FILE: &str = "rounds.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const ROUNDS_HEADER: &str = "round,acc,values_up,values_down,removed_total,active_min,active_max";

/// One line per round under [`ROUNDS_HEADER`]. Accuracy is printed with
/// shortest round-trip formatting.
pub fn rounds_csv(records: &[RoundRecord]) -> String {
    let mut out = String::from(ROUNDS_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.round,
            r.acc,
            r.values_up,
            r.values_down,
            r.removed_clusters_total,
            r.active_min(),
            r.active_max()
        ));
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub final_acc: f64,
    pub best_acc: f64,
    pub rounds: usize,
    pub train_samples: usize,
    pub test_samples: usize,
    pub feature_dim: usize,
    pub num_classes: usize,
    pub final_removed_total: usize,
    pub final_active_clusters: Vec<usize>,
    pub values_up: u64,
    pub values_down: u64,
    pub bytes: u64,
    pub bytes_per_value: u64,
    pub config: serde_json::Value,
}

impl Summary {
    pub fn new(config: &ExperimentConfig, prepared: &Prepared, records: &[RoundRecord]) -> Self {
        let last = records.last();
        let mut cost = CommCost::default();
        for r in records {
            cost += CommCost { values_up: r.values_up, values_down: r.values_down };
        }
        Summary {
            final_acc: last.map_or(0.0, |r| r.acc),
            best_acc: records.iter().map(|r| r.acc).fold(0.0, f64::max),
            rounds: records.len(),
            train_samples: prepared.train.len(),
            test_samples: prepared.test.len(),
            feature_dim: prepared.train.feature_dim(),
            num_classes: prepared.train.num_classes(),
            final_removed_total: last.map_or(0, |r| r.removed_clusters_total),
            final_active_clusters: last.map_or_else(Vec::new, |r| r.active_clusters_per_client.clone()),
            values_up: cost.values_up,
            values_down: cost.values_down,
            bytes: cost.bytes(),
            bytes_per_value: BYTES_PER_VALUE,
            config: config.to_json(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("summary serializes");
        s.push('\n');
        s
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| CliError::writing(path, e))
}

pub fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| CliError::io(format!("cannot create {}", path.display()), e))
}
