use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qdba_cli::commands::{self, EXIT_CONFIG};
use qdba_cli::config::{Config, Overrides};

/// Simulator for three-party detectable Byzantine agreement over
/// quantum-correlated secret lists.
#[derive(Parser)]
#[command(name = "qdba", version, about)]
struct Cli {
    /// Flat JSON configuration document; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(flatten)]
    overrides: Overrides,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample source windows and report detection, basis, and triple
    /// statistics.
    SimulateSource,
    /// Run only the distribute-and-test phase and export the released lists.
    Distribute {
        /// Additionally write each party's list as its own CSV.
        #[arg(long)]
        split_lists: bool,
    },
    /// Run only the agreement phase over previously exported lists.
    Agree {
        /// Combined lists CSV (position,lA,lB,lC).
        #[arg(long)]
        lists: PathBuf,
    },
    /// Run one full session: distribution, then agreement.
    FullRun,
    /// Run many seeded sessions and aggregate the outcomes.
    Campaign {
        /// Number of seeded sessions.
        #[arg(long, default_value_t = 1000)]
        trials: usize,
    },
    /// Validate a fixture CSV against the correlation predicate.
    Replay {
        /// Fixture path (position,lA,lB,lC[,flagged]).
        fixture: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_CONFIG as u8),
            };
        }
    };

    let mut config = match &cli.config {
        Some(path) => match Config::load(path) {
            Ok(config) => config,
            Err(e) => {
                eprintln!("config error: {e}");
                return ExitCode::from(EXIT_CONFIG as u8);
            }
        },
        None => Config::default(),
    };
    cli.overrides.apply(&mut config);

    let outcome = match &cli.command {
        Command::SimulateSource => commands::simulate_source(&config),
        Command::Distribute { split_lists } => commands::distribute(&config, *split_lists),
        Command::Agree { lists } => commands::agree(&config, lists),
        Command::FullRun => commands::full_run(&config),
        Command::Campaign { trials } => commands::campaign(&config, *trials),
        Command::Replay { fixture } => commands::replay(fixture),
    };

    match outcome {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
