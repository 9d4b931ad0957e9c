mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::OutputOptions;

/// Plans, tracks, and simulates rest-to-rest motions of the second-order
/// chained form and its planar-manipulator realization.
#[derive(Parser)]
#[command(name = "chained-motion", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the five-step motion plan for a scenario
    Plan {
        /// Scenario JSON path
        #[arg(long)]
        config: PathBuf,
        /// Emit the plan as JSON instead of text
        #[arg(long)]
        json: bool,
        /// Also write the output to this file
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one closed-loop simulation; CSV to --out, report JSON to stdout
    Simulate {
        /// Scenario JSON path
        #[arg(long)]
        config: PathBuf,
        /// CSV output path
        #[arg(long)]
        out: PathBuf,
        /// Override the scenario's solver rel_tol
        #[arg(long)]
        rel_tol: Option<f64>,
        /// Omit the generated_at field from the report
        #[arg(long)]
        no_timestamp: bool,
    },
    /// Re-run a scenario under signed initial-pose errors
    Sweep {
        /// Scenario JSON path
        #[arg(long)]
        config: PathBuf,
        /// Initial-pose component to perturb
        #[arg(long)]
        component: String,
        /// Comma-separated error magnitudes; each runs as +/- pair
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        levels: Vec<f64>,
        /// Emit the table as JSON instead of text
        #[arg(long)]
        json: bool,
        /// Override the scenario's solver rel_tol
        #[arg(long)]
        rel_tol: Option<f64>,
        /// Omit the generated_at field
        #[arg(long)]
        no_timestamp: bool,
        /// Also write the output to this file
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the built-in experiments and check them against recorded outcomes
    Reproduce {
        /// Emit the consolidated report as JSON instead of text
        #[arg(long)]
        json: bool,
        /// Override the built-in solver rel_tol
        #[arg(long)]
        rel_tol: Option<f64>,
        /// Omit the generated_at field
        #[arg(long)]
        no_timestamp: bool,
        /// Also write the output to this file
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Plan { config, json, out } => {
            commands::cmd_plan(&config, json, out.as_deref())
        }
        Command::Simulate {
            config,
            out,
            rel_tol,
            no_timestamp,
        } => commands::cmd_simulate(&config, &out, rel_tol, no_timestamp),
        Command::Sweep {
            config,
            component,
            levels,
            json,
            rel_tol,
            no_timestamp,
            out,
        } => commands::cmd_sweep(
            &config,
            &component,
            &levels,
            rel_tol,
            &OutputOptions {
                json,
                no_timestamp,
                out,
            },
        ),
        Command::Reproduce {
            json,
            rel_tol,
            no_timestamp,
            out,
        } => commands::cmd_reproduce(
            rel_tol,
            &OutputOptions {
                json,
                no_timestamp,
                out,
            },
        ),
    };
    match outcome {
        Ok(code) => code,
        Err(error) => {
            eprintln!("error: {}", error.message());
            ExitCode::from(error.exit_code())
        }
    }
}
