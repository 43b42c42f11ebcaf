//! `dtg`: batch pipeline for digital twin graphs. Builds per-entity
//! correlation graphs from sensor CSVs, trains graph-to-graph models over
//! the declared system topology, fuses entities with external
//! domain-knowledge models, and simulates scenarios to a fixed point.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use dtg_cli::commands;
use dtg_cli::error::{error_json, CliError};

#[derive(Parser)]
#[command(name = "dtg", version, about = "Digital twin graph pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build entity graphs and feature regressors from sensor CSVs.
    BuildEntity {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        topology: PathBuf,
    },
    /// Train (or fetch from the database) every declared arc's G2G model.
    TrainG2g {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        topology: PathBuf,
    },
    /// Fuse one entity's regressors with external DKMs into a generator.
    Fuse {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        entity: String,
        /// External predictor command, optionally `CMD:weight`. Repeatable.
        #[arg(long = "dkm")]
        dkms: Vec<String>,
    },
    /// Run a scenario file against a trained system.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        system: PathBuf,
        #[arg(long)]
        scenario: PathBuf,
        /// Also export the system graph as DOT.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Model-database inventory and integrity checks.
    Db {
        #[arg(long)]
        config: PathBuf,
        #[command(subcommand)]
        action: DbAction,
    },
    /// Serve a reference DKM on stdio (identity | constant | affine | ...).
    DkmDemo {
        #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
        args: Vec<String>,
    },
}

#[derive(Subcommand)]
enum DbAction {
    /// List every record in the database.
    List,
    /// Verify every record's checksum.
    Verify,
}

fn run(command: Command) -> Result<serde_json::Value, CliError> {
    match command {
        Command::BuildEntity { config, topology } => {
            commands::build_entity::run(&config, &topology)
        }
        Command::TrainG2g { config, topology } => commands::train_g2g::run(&config, &topology),
        Command::Fuse {
            config,
            entity,
            dkms,
        } => commands::fuse::run(&config, &entity, &dkms),
        Command::Simulate {
            config,
            system,
            scenario,
            dot,
        } => commands::simulate::run(&config, &system, &scenario, dot.as_deref()),
        Command::Db { config, action } => match action {
            DbAction::List => commands::db::list(&config),
            DbAction::Verify => commands::db::verify(&config),
        },
        Command::DkmDemo { args } => {
            dtg_core::gaen::run_demo(&args).map_err(CliError::Invalid)?;
            Ok(serde_json::json!({"ok": true, "command": "dkm-demo"}))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(err) => {
            println!("{}", error_json(&err));
            ExitCode::FAILURE
        }
    }
}
