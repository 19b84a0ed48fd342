use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use weakfriend::commands;
use weakfriend::config::parse_config;

#[derive(Parser)]
#[command(name = "weakfriend", version, about = "Wigner-Friend scenarios with weakly coupled probes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario config (TOML, or JSON with a .json extension)
    #[arg(long)]
    config: PathBuf,
    /// Output directory
    #[arg(long, env = "WEAKFRIEND_OUT", default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Outcome table, conditional probe densities and (EWFS) the contradiction report
    Run {
        #[command(flatten)]
        common: Common,
        /// Density grid as min:max:n
        #[arg(long, allow_hyphen_values = true)]
        grid: Option<String>,
    },
    /// Exact disturbance of outcome probabilities against γ
    Scan {
        #[command(flatten)]
        common: Common,
        /// Comma-separated γ values (at least three)
        #[arg(long, value_name = "a,b,c")]
        gamma_list: Option<String>,
    },
    /// Monte Carlo readouts and weak-value estimates
    Mc {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        /// Overrides the config's seed
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Contradiction report only (EWFS)
    Report {
        #[command(flatten)]
        common: Common,
    },
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { common, grid } => {
            let grid = grid.as_deref().map(commands::parse_grid).transpose()?;
            let (file, cfg) = parse_config(&common.config)?;
            commands::cmd_run(&file, &cfg, &common.out, grid)?;
        }
        Command::Scan { common, gamma_list } => {
            let gammas = match gamma_list {
                Some(s) => commands::parse_gamma_list(&s)?,
                None => commands::DEFAULT_GAMMAS.to_vec(),
            };
            let (file, cfg) = parse_config(&common.config)?;
            commands::cmd_scan(&file, &cfg, &common.out, &gammas)?;
        }
        Command::Mc { common, samples, seed } => {
            let (file, cfg) = parse_config(&common.config)?;
            let seed = seed.unwrap_or(file.seed);
            commands::cmd_mc(&file, &cfg, &common.out, samples, seed)?;
        }
        Command::Report { common } => {
            let (file, cfg) = parse_config(&common.config)?;
            commands::cmd_report(&file, &cfg, &common.out)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
