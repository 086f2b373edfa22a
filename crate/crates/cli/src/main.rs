//! `csrp`: command-line front end for the relocation planning pipeline.

mod commands;
mod config;
mod synth;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use csrp::density::Family;
use csrp::{ModelVariant, SolveMethod};

use config::{LoadedConfig, Overrides};

#[derive(Parser)]
#[command(name = "csrp", version, about = "Data-driven stochastic car-sharing relocation planning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Use a single scenario count instead of the configured list.
    #[arg(long)]
    n_scenarios: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// `flow-balance` or `paper-literal`.
    #[arg(long)]
    variant: Option<ModelVariant>,
    /// `benders` or `extensive`.
    #[arg(long)]
    method: Option<SolveMethod>,
    /// Relative Benders tolerance, in [1e-7, 1e-4].
    #[arg(long)]
    xi: Option<f64>,
}

impl RunArgs {
    fn load(&self) -> Result<LoadedConfig> {
        LoadedConfig::load(
            &self.config,
            &Overrides {
                n_scenarios: self.n_scenarios,
                seed: self.seed,
                variant: self.variant,
                method: self.method,
                xi: self.xi,
            },
        )
    }
}

#[derive(Subcommand)]
enum Command {
    /// Parse trip files into daily demand panels (all, train, test).
    Ingest(RunArgs),
    /// Fit one demand distribution file per configured family.
    Fit(RunArgs),
    /// Run SAA for every family and scenario count; write plans.
    Solve(RunArgs),
    /// Replay the plans on the test days and write reports.
    Evaluate(RunArgs),
    /// ingest, fit, solve and evaluate in sequence.
    Pipeline(RunArgs),
    /// Write the scenario sets the SAA loop draws for one family.
    Scenarios {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        family: Family,
    },
    /// Generate a synthetic trip file, coordinates and config.
    Synth {
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 120)]
        days: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

fn run(cli: Cli) -> Result<()> {
    use commands::run_stage;
    match cli.command {
        Command::Ingest(a) => run_stage("ingest", || commands::cmd_ingest(&a.load()?)),
        Command::Fit(a) => run_stage("fit", || commands::cmd_fit(&a.load()?)),
        Command::Solve(a) => run_stage("solve", || commands::cmd_solve(&a.load()?)),
        Command::Evaluate(a) => run_stage("evaluate", || commands::cmd_evaluate(&a.load()?)),
        Command::Pipeline(a) => commands::cmd_pipeline(&a.load()?),
        Command::Scenarios { run, family } => run_stage("scenarios", || {
            let cfg = run.load()?;
            let n = cfg.config.pipeline.plan_scenarios();
            for path in commands::write_scenario_sets(&cfg, family, n)? {
                println!("{}", path.display());
            }
            Ok(())
        }),
        Command::Synth { out, days, seed } => {
            synth::write_dataset(&out, &synth::SynthOptions { days, seed, ..Default::default() })?;
            println!("synthetic dataset written to {}", out.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
