//! Command-line front end: solves, result tables, spectra and conditioning studies.

mod bench;
mod condnum;
mod config;
mod output;
mod solve;
mod spectrum;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::bench::Tier;
use crate::config::{Overrides, RunConfig};
use crate::spectrum::Mode;

#[derive(Debug, Parser)]
#[command(
    name = "sinc-pint",
    version,
    about = "Sinc-Nyström all-at-once parallel-in-time solvers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve one problem and write a JSON summary. Exit code 2 when the solve does not converge.
    Solve {
        #[command(flatten)]
        overrides: Overrides,
        /// Also write the solution as solution.csv (needs --out).
        #[arg(long)]
        dump_solution: bool,
    },
    /// Run a benchmark table and write it as CSV and markdown.
    Bench {
        /// heat-const, heat-varying, wave, wave-omega-sweep or allen-cahn.
        table: String,
        #[arg(long, value_enum, default_value = "small")]
        tier: Tier,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Dense spectra with a verdict. Exit code 2 on FAIL.
    Spectrum {
        #[arg(long, value_enum)]
        mode: Mode,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Condition numbers of the eigenvector matrices over M and omega.
    Condnum {
        /// Comma-separated half-widths.
        #[arg(long = "Ms", value_delimiter = ',', default_value = "8,16,32,64,128")]
        half_widths: Vec<usize>,
        /// Comma-separated damping parameters in (0, 1].
        #[arg(long, value_delimiter = ',', default_value = "1,1e-3,1e-6")]
        omegas: Vec<f64>,
        /// Accept M above the default cap.
        #[arg(long)]
        allow_large: bool,
        #[command(flatten)]
        overrides: Overrides,
    },
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    match cli.command {
        Command::Solve {
            overrides,
            dump_solution,
        } => {
            let mut cfg = RunConfig::resolve(&overrides)?;
            cfg.dump_solution |= dump_solution;
            solve::cmd_solve(&cfg, !overrides.no_timestamp)
        }
        Command::Bench {
            table,
            tier,
            overrides,
        } => {
            let cfg = RunConfig::resolve(&overrides)?;
            bench::cmd_bench(&table, tier, &cfg, !overrides.no_timestamp)
        }
        Command::Spectrum { mode, overrides } => {
            let cfg = RunConfig::resolve(&overrides)?;
            spectrum::cmd_spectrum(&cfg, mode, !overrides.no_timestamp)
        }
        Command::Condnum {
            half_widths,
            omegas,
            allow_large,
            overrides,
        } => {
            let cfg = RunConfig::resolve(&overrides)?;
            condnum::cmd_condnum(
                &cfg,
                &half_widths,
                &omegas,
                allow_large,
                !overrides.no_timestamp,
            )
        }
    }
}

fn main() -> ExitCode {
    // Usage errors exit with 1; clap's own 2 is reserved for non-convergence here.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
