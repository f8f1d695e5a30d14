//! The three subcommands. Each returns what it wrote so callers and tests can
//! inspect results without re-reading files.

use std::path::PathBuf;

use feduhd_core::{degradation, RoundRecord};

use crate::config::{ChannelConfig, ExperimentConfig};
use crate::error::{CliError, Result};
use crate::experiment::{prepare, train, Prepared};
use crate::manifest::{self, PartitionManifest};
use crate::parallel::{default_workers, RayonExecutor};
use crate::report::{self, create_dir, rounds_csv, write_text, Summary};

/// Overrides taken from the command line.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub output: Option<PathBuf>,
    pub workers: Option<usize>,
}

impl Overrides {
    /// Returns the effective config: command-line values replace config values.
    pub fn apply(&self, mut config: ExperimentConfig) -> Result<ExperimentConfig> {
        if let Some(out) = &self.output {
            config.output_dir = out.clone();
        }
        if let Some(w) = self.workers {
            if w == 0 {
                return Err(CliError::schema("--workers", "must be at least 1"));
            }
            config.workers = Some(w);
        }
        Ok(config)
    }
}

fn executor(config: &ExperimentConfig) -> Result<RayonExecutor> {
    let workers = config.workers.unwrap_or_else(|| default_workers(config.federation.num_clients));
    RayonExecutor::new(workers)
        .map_err(|e| CliError::io("cannot start worker pool", std::io::Error::other(e.to_string())))
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub records: Vec<RoundRecord>,
    pub summary: Summary,
    pub manifest: PartitionManifest,
}

pub fn cmd_run(config: &ExperimentConfig) -> Result<RunOutcome> {
    let prepared = prepare(config, config.seeds)?;
    let records = train(config, config.seeds, &prepared, &config.channel, &executor(config)?)?;
    let summary = Summary::new(config, &prepared, &records);
    let manifest = PartitionManifest::new(&prepared.spec, &prepared.partition, &prepared.train);

    let out = &config.output_dir;
    create_dir(out)?;
    write_text(&out.join(report::ROUNDS_FILE), &rounds_csv(&records))?;
    write_text(&out.join(report::SUMMARY_FILE), &summary.to_json())?;
    manifest.write(&out.join(manifest::FILE_NAME))?;
    Ok(RunOutcome { records, summary, manifest })
}

pub const HISTOGRAM_FILE: &str = "histograms.csv";

pub fn cmd_partition(config: &ExperimentConfig) -> Result<PartitionManifest> {
    let prepared = prepare(config, config.seeds)?;
    let manifest = PartitionManifest::new(&prepared.spec, &prepared.partition, &prepared.train);
    let out = &config.output_dir;
    create_dir(out)?;
    manifest.write(&out.join(manifest::FILE_NAME))?;
    write_text(&out.join(HISTOGRAM_FILE), &manifest.histogram_csv())?;
    Ok(manifest)
}

pub const SWEEP_RUNS_FILE: &str = "sweep_runs.csv";
pub const DEGRADATION_FILE: &str = "degradation.csv";

/// One sweep point averaged over repeats.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub channel: ChannelConfig,
    pub mean_baseline_acc: f64,
    pub mean_acc: f64,
    /// Mean over repeats of the per-repeat relative degradation, in percent.
    pub mean_degradation: f64,
}

/// Runs a noiseless baseline and every sweep point for each repeat. Repeat `r`
/// shifts all seeds by `r`, so the baseline and its sweep points share data,
/// partition, projection and initial centroids.
pub fn cmd_noise_sweep(
    config: &ExperimentConfig,
    points: Option<Vec<ChannelConfig>>,
    repeats: Option<usize>,
) -> Result<Vec<SweepRow>> {
    let points = match points {
        Some(p) => p,
        None => config.sweep.as_ref().map(|s| s.points.clone()).unwrap_or_default(),
    };
    if points.is_empty() {
        return Err(CliError::schema("sweep.points", "no sweep points given (use --sweep or a [sweep] table)"));
    }
    let repeats = repeats.or(config.sweep.as_ref().map(|s| s.repeats)).unwrap_or(1);
    if repeats == 0 {
        return Err(CliError::schema("--repeats", "must be at least 1"));
    }
    let exec = executor(config)?;

    let mut runs = String::from("repeat,channel,baseline_acc,acc,degradation_pct\n");
    let mut sums = vec![(0.0, 0.0, 0.0); points.len()];
    for r in 0..repeats {
        let seeds = config.seeds.offset(r as u64);
        let prepared: Prepared = prepare(config, seeds)?;
        let base = final_acc(&train(config, seeds, &prepared, &ChannelConfig::noiseless(), &exec)?);
        for (i, point) in points.iter().enumerate() {
            let acc = final_acc(&train(config, seeds, &prepared, point, &exec)?);
            let deg = degradation(base, acc)?;
            runs.push_str(&format!("{r},{},{base},{acc},{deg}\n", point.label()));
            sums[i].0 += base;
            sums[i].1 += acc;
            sums[i].2 += deg;
        }
    }

    let n = repeats as f64;
    let rows: Vec<SweepRow> = points
        .iter()
        .zip(&sums)
        .map(|(p, s)| SweepRow { channel: *p, mean_baseline_acc: s.0 / n, mean_acc: s.1 / n, mean_degradation: s.2 / n })
        .collect();

    let mut table = String::from("channel,baseline_acc,acc,degradation_pct\n");
    for row in &rows {
        table.push_str(&format!(
            "{},{},{},{}\n",
            row.channel.label(),
            row.mean_baseline_acc,
            row.mean_acc,
            row.mean_degradation
        ));
    }
    let out = &config.output_dir;
    create_dir(out)?;
    write_text(&out.join(SWEEP_RUNS_FILE), &runs)?;
    write_text(&out.join(DEGRADATION_FILE), &table)?;
    Ok(rows)
}

fn final_acc(records: &[RoundRecord]) -> f64 {
    records.last().map_or(0.0, |r| r.acc)
}
