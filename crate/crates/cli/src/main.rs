//! `rnsplab`: run experiments from a JSON config and plot their reports.
//!
//! Exit codes: 0 on success, 2 on a schema or usage error, 3 on a numeric or
//! I/O failure during the run.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rnsplab_core::experiments::{emit_plot, run_experiment, ExperimentConfig, ExperimentKind, PlotKind};
use rnsplab_core::Error;

#[derive(Parser, Debug)]
#[command(name = "rnsplab", version, about = "Robust null space property experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Exact-recovery phase diagram over the (m, s) grid.
    Phase(RunArgs),
    /// NSP and SNSP certificates plus robust-property probes.
    Certify(RunArgs),
    /// Exact or noisy recovery errors over the (m, s) grid.
    Recover(RunArgs),
    /// Small-ball probability against its analytic lower bound.
    Smallball(RunArgs),
    /// Empirical width of the sparse cone.
    Width(RunArgs),
    /// Plug-in small-ball lower bound against its failure envelope.
    Mendelson(RunArgs),
    /// Moment identities, scaling laws and the soft-indicator checks.
    Lemmas(RunArgs),
    /// Sample-complexity bounds over the (n, s) grid.
    Bounds(RunArgs),
    /// Render a report CSV with columns m, s, rate as SVG.
    Plot(PlotArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Root seed; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; defaults to the number of CPUs.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PlotChoice {
    Heatmap,
    Lines,
}

#[derive(Args, Debug)]
struct PlotArgs {
    /// Report CSV.
    csv: PathBuf,
    #[arg(long, value_enum, default_value = "heatmap")]
    kind: PlotChoice,
    /// SVG path; defaults to the CSV path with an `.svg` extension.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn exit_code(e: &Error) -> ExitCode {
    if e.is_schema() {
        ExitCode::from(2)
    } else {
        ExitCode::from(3)
    }
}

fn run(kind: ExperimentKind, args: RunArgs) -> Result<Vec<PathBuf>, Error> {
    let mut cfg = ExperimentConfig::from_path(&args.config)?;
    match cfg.kind {
        Some(k) if k != kind => {
            return Err(Error::Schema {
                path: "kind".into(),
                message: format!("config is for `{}` but the subcommand is `{}`", k.name(), kind.name()),
            })
        }
        _ => cfg.kind = Some(kind),
    }
    if let Some(out) = args.out {
        cfg.output = out;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(k) = args.threads {
        if k == 0 {
            return Err(Error::Schema {
                path: "--threads".into(),
                message: "need at least one thread".into(),
            });
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    }
    Ok(run_experiment(&cfg)?.files)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Phase(a) => run(ExperimentKind::Phase, a),
        Command::Certify(a) => run(ExperimentKind::Certify, a),
        Command::Recover(a) => run(ExperimentKind::Recover, a),
        Command::Smallball(a) => run(ExperimentKind::Smallball, a),
        Command::Width(a) => run(ExperimentKind::Width, a),
        Command::Mendelson(a) => run(ExperimentKind::Mendelson, a),
        Command::Lemmas(a) => run(ExperimentKind::Lemmas, a),
        Command::Bounds(a) => run(ExperimentKind::Bounds, a),
        Command::Plot(p) => {
            let kind = match p.kind {
                PlotChoice::Heatmap => PlotKind::Heatmap,
                PlotChoice::Lines => PlotKind::Lines,
            };
            emit_plot(&p.csv, kind, p.out.as_deref()).map(|f| vec![f])
        }
    };
    match result {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("rnsplab: {e}");
            exit_code(&e)
        }
    }
}
