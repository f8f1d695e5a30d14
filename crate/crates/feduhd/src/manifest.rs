//! `partition.manifest`: a JSON record of a client partition, sufficient to
//! replay it exactly. Shard indices refer to rows of the training split.

use std::path::Path;

use feduhd_core::{LabeledDataset, Partition, PartitionSpec};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const FILE_NAME: &str = "partition.manifest";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionManifest {
    pub schema_version: u32,
    pub seed: u64,
    pub alpha: f64,
    pub num_clients: usize,
    pub num_samples: usize,
    pub num_classes: usize,
    pub shards: Vec<Shard>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Shard {
    pub client: usize,
    pub class_histogram: Vec<usize>,
    pub indices: Vec<usize>,
}

impl PartitionManifest {
    pub fn new(spec: &PartitionSpec, partition: &Partition, train: &LabeledDataset) -> Self {
        let histograms = partition.class_histograms(train);
        PartitionManifest {
            schema_version: 1,
            seed: spec.seed(),
            alpha: spec.alpha(),
            num_clients: spec.num_clients(),
            num_samples: train.len(),
            num_classes: train.num_classes(),
            shards: partition
                .shards
                .iter()
                .zip(histograms)
                .enumerate()
                .map(|(client, (indices, class_histogram))| Shard { client, class_histogram, indices: indices.clone() })
                .collect(),
        }
    }

    pub fn partition(&self) -> Partition {
        Partition { shards: self.shards.iter().map(|s| s.indices.clone()).collect() }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        std::fs::write(path, text).map_err(|e| CliError::writing(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(format!("cannot read {}", path.display()), e))?;
        let manifest: Self =
            serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        manifest.partition().validate(manifest.num_samples)?;
        Ok(manifest)
    }

    /// `client,class_0,…,class_{K-1}` rows.
    pub fn histogram_csv(&self) -> String {
        let mut out = String::from("client");
        for c in 0..self.num_classes {
            out.push_str(&format!(",class_{c}"));
        }
        out.push('\n');
        for s in &self.shards {
            out.push_str(&s.client.to_string());
            for n in &s.class_histogram {
                out.push_str(&format!(",{n}"));
            }
            out.push('\n');
        }
        out
    }
}
