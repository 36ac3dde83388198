use std::path::PathBuf;
use std::process::ExitCode;

use binarynav::design::OptionLabel;
use binarynav_cli::{execute, Command, Overrides, Scenario, EXIT_CONFIG};
use clap::{Args, Parser, Subcommand};

/// Trajectory design and navigation analyses around a binary asteroid.
#[derive(Parser)]
#[command(name = "binarynav", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Scenario file; built-in defaults when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Master seed of all random streams.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Monte Carlo sample count.
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// Worker threads; all cores by default.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Plan source: A, B or custom.
    #[arg(long, global = true)]
    option: Option<OptionLabel>,
    /// More log output; repeat for more.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build and validate the plan; write plan, trajectory and constraint report.
    Design,
    /// Check a plan against the constraints.
    Validate {
        /// Stored plan; the scenario's plan is built when omitted.
        #[arg(long, value_name = "PATH")]
        plan: Option<PathBuf>,
    },
    /// Run the knowledge analysis.
    Knowledge,
    /// Run the knowledge analysis and the Monte Carlo dispersion.
    Dispersion,
    /// Write the node set of a reference option.
    GenerateNodes,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.common.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let overrides = Overrides {
        option: cli.common.option,
        out: cli.common.out,
        seed: cli.common.seed,
        samples: cli.common.samples,
    };
    let command = match cli.command {
        Cmd::Design => Command::Design,
        Cmd::Validate { plan } => Command::Validate { plan },
        Cmd::Knowledge => Command::Knowledge,
        Cmd::Dispersion => Command::Dispersion,
        Cmd::GenerateNodes => Command::GenerateNodes,
    };
    let scenario = match Scenario::load(cli.common.config.as_deref(), &overrides) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    };
    match execute(&command, &scenario, cli.common.workers) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
