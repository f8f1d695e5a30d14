//! Data preparation and training for one configured experiment.

use feduhd_core::{
    dirichlet_partition, make_blobs, run_rounds, train_test_split, ClientState, EvalSet, LabeledDataset,
    Partition, PartitionSpec, ProjectionMatrix, RoundParams, RoundRecord, ServerState, Standardizer,
};
use rayon::prelude::*;

use crate::config::{ChannelConfig, DatasetSource, ExperimentConfig, Seeds};
use crate::dataset_io::{load_csv, load_uci_har};
use crate::error::{CliError, Result};
use crate::parallel::RayonExecutor;

/// Train and test data plus the client partition of the training rows.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub train: LabeledDataset,
    pub test: LabeledDataset,
    pub spec: PartitionSpec,
    pub partition: Partition,
}

fn data_err(e: feduhd_core::Error) -> CliError {
    CliError::Data(e.to_string())
}

pub fn prepare(config: &ExperimentConfig, seeds: Seeds) -> Result<Prepared> {
    let d = &config.dataset;
    let (train, test) = match d.source {
        DatasetSource::Blobs => {
            let b = d.blobs.as_ref().ok_or_else(|| CliError::schema("dataset.blobs", "missing"))?;
            let all = make_blobs(b.num_classes, b.per_class, b.feature_dim, b.separation, seeds.partition)
                .map_err(data_err)?;
            split(&all, d.test_fraction, seeds.partition)?
        }
        DatasetSource::Csv => {
            let path = d.path.as_ref().ok_or_else(|| CliError::schema("dataset.path", "missing"))?;
            let all = load_csv(path)?;
            match &d.test_path {
                Some(test_path) => (all, load_csv(test_path)?),
                None => split(&all, d.test_fraction, seeds.partition)?,
            }
        }
        DatasetSource::UciHar => {
            let path = d.path.as_ref().ok_or_else(|| CliError::schema("dataset.path", "missing"))?;
            load_uci_har(path)?
        }
    };
    if train.feature_dim() != test.feature_dim() {
        return Err(CliError::Data(format!(
            "train has {} features but test has {}",
            train.feature_dim(),
            test.feature_dim()
        )));
    }
    let (train, test) = if d.standardize {
        let s = Standardizer::fit(&train).map_err(data_err)?;
        (s.apply(&train).map_err(data_err)?, s.apply(&test).map_err(data_err)?)
    } else {
        (train, test)
    };

    let f = &config.federation;
    let spec = PartitionSpec::new(f.dirichlet_alpha, f.num_clients, seeds.partition)
        .map_err(|e| CliError::schema("federation.dirichlet_alpha", e.to_string()))?;
    let partition = dirichlet_partition(&train, &spec).map_err(data_err)?;
    Ok(Prepared { train, test, spec, partition })
}

fn split(all: &LabeledDataset, test_fraction: f64, seed: u64) -> Result<(LabeledDataset, LabeledDataset)> {
    let s = train_test_split(all, test_fraction, seed).map_err(data_err)?;
    Ok((all.subset(&s.train), all.subset(&s.test)))
}

/// Encodes every shard, initializes the server and runs all rounds through
/// `channel`.
pub fn train(
    config: &ExperimentConfig,
    seeds: Seeds,
    prepared: &Prepared,
    channel: &ChannelConfig,
    executor: &RayonExecutor,
) -> Result<Vec<RoundRecord>> {
    let m = &config.model;
    let proj = ProjectionMatrix::new(seeds.projection, prepared.train.feature_dim(), m.hdc_dim)?;
    let mut clients = executor.install(|| {
        prepared
            .partition
            .shards
            .par_iter()
            .enumerate()
            .map(|(i, shard)| ClientState::encode(i as u32, &prepared.train.subset(shard), &proj))
            .collect::<feduhd_core::Result<Vec<_>>>()
    })?;
    let mut server = ServerState::init_global(m.num_clusters, m.hdc_dim, seeds.init)?;
    let eval = EvalSet::encode(&prepared.test, &proj)?.with_mapping(m.acc_mapping.into());
    let params = RoundParams { local_epochs: m.local_epochs, knn_k: m.knn_k, rounds: m.rounds };
    let channel = channel.build(seeds.channel)?;
    Ok(run_rounds(&params, &mut clients, &mut server, &channel, &eval, executor)?)
}
