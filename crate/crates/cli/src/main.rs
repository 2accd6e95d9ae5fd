//! Command line front end: run the measurement suite, re-render a saved
//! advantage table, or validate a configuration.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use faultmg_cli::config::RunConfig;
use faultmg_cli::suite;

const OUTPUT_ENV: &str = "FAULTMG_OUTPUT";

#[derive(Parser)]
#[command(name = "faultmg", about = "multigrid fault-recovery study runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full suite described by a JSON configuration.
    Run {
        /// Path to the run configuration.
        #[arg(long)]
        config: PathBuf,
        /// Output directory (falls back to $FAULTMG_OUTPUT, then ./out).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Render a saved advantage table as text.
    Table {
        /// Path to an advantage.json produced by `run`.
        path: PathBuf,
    },
    /// Validate a configuration without running anything.
    Check {
        #[arg(long)]
        config: PathBuf,
    },
}

fn output_dir(arg: Option<PathBuf>) -> PathBuf {
    arg.or_else(|| std::env::var_os(OUTPUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, output } => {
            let cfg = match RunConfig::from_path(&config) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("configuration error: {e}");
                    return ExitCode::from(2);
                }
            };
            let dir = output_dir(output);
            match suite::run_suite(&cfg, &dir) {
                Ok(out) => {
                    print!("{}", out.table.render_text());
                    println!("\noutputs written to {}", out.out_dir.display());
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("suite failed: {e}");
                    ExitCode::FAILURE
                }
            }
        }
        Command::Table { path } => {
            let text = match std::fs::read_to_string(&path) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("cannot read {}: {e}", path.display());
                    return ExitCode::FAILURE;
                }
            };
            match serde_json::from_str::<faultmg::metrics::AdvantageTable>(&text) {
                Ok(table) => {
                    print!("{}", table.render_text());
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("{}: {e}", path.display());
                    ExitCode::FAILURE
                }
            }
        }
        Command::Check { config } => match RunConfig::from_path(&config) {
            Ok(_) => {
                println!("configuration ok");
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("configuration error: {e}");
                ExitCode::from(2)
            }
        },
    }
}
