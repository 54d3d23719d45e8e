//! `iaps`: scenarios, figure runs, plots, self-tests and oracle tables.

mod commands;
mod selftest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "iaps", version, about = "Integrated active and passive sensing simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Draw one deployment and write its layout and channels.
    GenScenario(Common),
    /// Run a figure (or an experiment spec given by --config) and write CSV, SVG and manifest.
    Run(Common),
    /// Render an SVG from a figure CSV.
    Plot {
        /// Figure table in the CSV schema written by `run`.
        csv: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Fast built-in property checks; nonzero exit on any failure.
    Selftest(Common),
    /// Write the independent reference tables with their checksums.
    Oracle(Common),
}

#[derive(Debug, Args, Clone, Default)]
pub struct Common {
    /// Scenario config (JSON) or, for `run`, an experiment spec.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Figure id: fig2..fig11 or tradeoff.
    #[arg(long)]
    pub figure: Option<String>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; defaults to the machine's parallelism.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Output directory; falls back to $IAPS_OUT, then `out`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Config override, repeatable: --set sigma_rcs_db=-18
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let common = match &cli.command {
        Command::GenScenario(c) | Command::Run(c) | Command::Selftest(c) | Command::Oracle(c) => c,
        Command::Plot { common, .. } => common,
    };
    if let Err(e) = commands::init_threads(common.threads) {
        return e.report();
    }
    let result = match &cli.command {
        Command::GenScenario(c) => commands::gen_scenario(c),
        Command::Run(c) => commands::run(c),
        Command::Plot { csv, common } => commands::plot(csv, common),
        Command::Selftest(c) => selftest::run(c),
        Command::Oracle(c) => commands::oracle(c),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => e.report(),
    }
}
