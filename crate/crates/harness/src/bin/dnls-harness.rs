use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dnls_harness::{experiments, ExperimentConfig, ExperimentKind, HarnessError};

#[derive(Parser)]
#[command(name = "dnls-harness", version, about = "Run DNLS modified-energy experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its report.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// conservation | increment | nscan (defaults to the config's `experiment`)
        #[arg(long)]
        experiment: Option<ExperimentKind>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn execute(cli: Cli) -> Result<bool, HarnessError> {
    let Command::Run { config, experiment, out, threads, seed } = cli.command;
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| HarnessError::Config(e.to_string()))?;
    }
    let mut cfg = ExperimentConfig::load(&config)?;
    if seed.is_some() {
        cfg.seed = seed;
    }
    let kind = experiment
        .or(cfg.experiment)
        .ok_or_else(|| HarnessError::Config("no experiment given".into()))?;
    let out = out
        .or_else(|| cfg.output.as_ref().map(PathBuf::from))
        .ok_or_else(|| HarnessError::Config("no output directory given".into()))?;
    let report = experiments::run(&cfg, kind)?;
    report.emit(&out)?;
    print!("{}", report.summary());
    Ok(report.passed())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
