use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use feduhd::commands::{cmd_noise_sweep, cmd_partition, cmd_run, Overrides};
use feduhd::config::{ChannelConfig, ExperimentConfig};
use feduhd::{report, CliError};

/// Unsupervised federated clustering with hyperdimensional computing.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train and evaluate; writes rounds.csv, summary.json and partition.manifest.
    Run(Common),
    /// Materialize the client partition; writes partition.manifest and histograms.csv.
    Partition(Common),
    /// Compare channel settings against a noiseless baseline.
    NoiseSweep {
        #[command(flatten)]
        common: Common,
        /// Comma-separated points: `noiseless`, `packet_loss:<p>`, `gaussian:<sigma>`.
        #[arg(long, value_delimiter = ',')]
        sweep: Option<Vec<String>>,
        /// Repeats per point; repeat r shifts every seed by r.
        #[arg(long)]
        repeats: Option<usize>,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Replaces `output_dir` from the config.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig, CliError> {
        let config = ExperimentConfig::load(&self.config)?;
        Overrides { output: self.output.clone(), workers: self.workers }.apply(config)
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run(common) => {
            let config = common.load()?;
            let out = cmd_run(&config)?;
            let s = &out.summary;
            println!(
                "{} rounds, final ACC {:.4}, {} values sent ({} bytes) -> {}",
                s.rounds,
                s.final_acc,
                s.values_up + s.values_down,
                s.bytes,
                config.output_dir.join(report::ROUNDS_FILE).display()
            );
        }
        Command::Partition(common) => {
            let config = common.load()?;
            let manifest = cmd_partition(&config)?;
            print!("{}", manifest.histogram_csv());
        }
        Command::NoiseSweep { common, sweep, repeats } => {
            let config = common.load()?;
            let points = sweep
                .map(|list| list.iter().map(|s| ChannelConfig::parse_point(s)).collect::<Result<Vec<_>, _>>())
                .transpose()?;
            let rows = cmd_noise_sweep(&config, points, repeats)?;
            println!("{:<24} {:>10} {:>10} {:>14}", "channel", "baseline", "acc", "degradation %");
            for r in rows {
                println!(
                    "{:<24} {:>10.4} {:>10.4} {:>14.2}",
                    r.channel.label(),
                    r.mean_baseline_acc,
                    r.mean_acc,
                    r.mean_degradation
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
