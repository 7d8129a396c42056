use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ocslab::runner::{
    emit_charts, read_csv, read_header, run_decision_sweep, run_flow_sweep, run_probe_sweep, run_reversion_sweep,
    run_train, ExperimentConfig, FlowRow, ProbeRow, ReportRow, SummaryRow, SweepOutput, SweepRow,
};
use ocslab::{Error, Result};

#[derive(Parser)]
#[command(name = "ocslab", version, about = "Train small networks and measure how their predictions drift under shift")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one model per seed and report clean-holdout metrics.
    Train(RunArgs),
    /// OOD score and distance to the OCS across a shift sweep.
    SweepReversion(RunArgs),
    /// Norm ratios, subspace projection and accumulated constants across a shift sweep.
    SweepProbe(RunArgs),
    /// Classifier, reward and oracle policies across a shift sweep.
    SweepDecide(RunArgs),
    /// Gradient descent on homogeneous networks.
    Flow(RunArgs),
    /// Re-draw the charts for an existing `<out>/rows.csv`.
    Report {
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// TOML config; without one the subcommand's default preset is used.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run a single seed instead of the configured list.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, requires = "mnist_labels")]
    mnist_images: Option<PathBuf>,
    #[arg(long, requires = "mnist_images")]
    mnist_labels: Option<PathBuf>,
}

impl RunArgs {
    fn resolve(&self, preset: fn() -> ExperimentConfig, name: &str) -> Result<(ExperimentConfig, PathBuf)> {
        let cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => preset(),
        };
        let mnist = self.mnist_images.clone().zip(self.mnist_labels.clone());
        let cfg = cfg.with_overrides(self.seed, mnist)?;
        let out = self
            .out
            .clone()
            .or_else(|| cfg.out.clone())
            .unwrap_or_else(|| Path::new("out").join(name));
        Ok((cfg, out))
    }
}

fn finish<R: ReportRow>(output: Result<SweepOutput<R>>, out: &Path) -> Result<()> {
    output?.write(out)?;
    println!("wrote {}", out.display());
    Ok(())
}

fn redraw<R: ReportRow>(csv: &Path, out: &Path) -> Result<()> {
    let rows: Vec<R> = read_csv(csv)?;
    for path in emit_charts(&rows, out)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn report(out: &Path) -> Result<()> {
    let csv = out.join("rows.csv");
    let header = read_header(&csv)?;
    let has = |c: &str| header.iter().any(|h| h == c);
    if has("normalized_margin") {
        redraw::<FlowRow>(&csv, out)
    } else if has("projection_mean") {
        redraw::<ProbeRow>(&csv, out)
    } else if has("dist_to_ocs") {
        redraw::<SweepRow>(&csv, out)
    } else if has("metric") {
        redraw::<SummaryRow>(&csv, out)
    } else {
        Err(Error::Format {
            source_kind: "csv",
            field: csv.display().to_string(),
            msg: "unrecognized rows.csv header".into(),
        })
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(a) => {
            let (cfg, out) = a.resolve(ExperimentConfig::default, "train")?;
            finish(run_train(&cfg), &out)
        }
        Command::SweepReversion(a) => {
            let (cfg, out) = a.resolve(ExperimentConfig::reversion, "reversion")?;
            finish(run_reversion_sweep(&cfg), &out)
        }
        Command::SweepProbe(a) => {
            let (cfg, out) = a.resolve(ExperimentConfig::reversion, "probe")?;
            finish(run_probe_sweep(&cfg), &out)
        }
        Command::SweepDecide(a) => {
            let (cfg, out) = a.resolve(ExperimentConfig::decision, "decide")?;
            finish(run_decision_sweep(&cfg), &out)
        }
        Command::Flow(a) => {
            let (cfg, out) = a.resolve(ExperimentConfig::default, "flow")?;
            finish(run_flow_sweep(&cfg), &out)
        }
        Command::Report { out } => report(&out),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
