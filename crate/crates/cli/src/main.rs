mod commands;
mod error;
mod fixture_table;
mod input;
mod matrix_file;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cproots_core::Tolerance;

use commands::Context;
use error::CliError;
use report::{Outcome, Report};

/// Roots of unital completely positive maps.
///
/// Maps are given as `fixture:NAME[:PARAM]` or as a JSON file holding the
/// superoperator (column-stacking convention, Heisenberg picture).
#[derive(Parser)]
#[command(name = "cproots", version)]
struct Cli {
    /// Directory for matrix artifacts.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Absolute and relative tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Complete positivity, unitality and idempotency of a map.
    CheckCp {
        #[arg(long)]
        map: String,
    },
    /// Support projection of a map.
    Support {
        #[arg(long)]
        map: String,
    },
    /// Construct or search for a proper discrete root.
    Root {
        #[command(subcommand)]
        kind: RootKind,
    },
    /// Certify a claimed proper n-th root.
    VerifyRoot {
        #[arg(long)]
        tau: String,
        #[arg(long)]
        phi: String,
        #[arg(long)]
        n: usize,
    },
    /// Asymptotic continuous root of an idempotent map.
    Asymptotic {
        #[arg(long)]
        map: String,
        #[arg(long, value_delimiter = ',')]
        times: Vec<f64>,
    },
    /// Principal-branch proper continuous root, or a refutation.
    Continuous {
        #[arg(long)]
        map: String,
    },
    /// Grid-shift continuous root of a pure state.
    ShiftDemo {
        #[arg(long)]
        m: usize,
        #[arg(long, value_delimiter = ',')]
        times: Vec<f64>,
    },
    /// Replay the worked examples.
    Fixtures {
        /// Print a plain-text table instead of JSON.
        #[arg(long)]
        table: bool,
    },
}

#[derive(Subcommand)]
enum RootKind {
    /// Root of the state map of a density matrix.
    State {
        /// Density matrix file, or a list of eigenvalues like `(1/2,1/2)`.
        #[arg(long)]
        density: String,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Root of the rank-one stochastic matrix of a probability vector.
    Stochastic {
        /// A list like `(1/2,1/3,1/6)`, or a file with a JSON array.
        #[arg(long)]
        p: String,
        #[arg(long)]
        n: usize,
    },
    /// Numerical search; a miss says nothing about existence.
    Search {
        #[arg(long)]
        map: String,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 8)]
        restarts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn fixtures(ctx: &Context, table: bool) -> Result<Report, CliError> {
    let rows = fixture_table::run(ctx.tol)?;
    if table {
        print!("{}", fixture_table::render(&rows));
    }
    let mut r = Report::new("fixtures");
    r.verdict = Outcome::from_flag(rows.iter().all(|row| row.pass));
    r.seed = Some(0);
    r.detail("table", &rows);
    Ok(r)
}

fn run(cli: Cli) -> Result<(Report, bool), CliError> {
    let tol = match cli.tol {
        None => Tolerance::default(),
        Some(t) => Tolerance::new(t, t)?,
    };
    let ctx = Context { out: cli.out, tol };
    let mut quiet = false;
    let report = match cli.command {
        Command::CheckCp { map } => commands::check_cp(&ctx, &map),
        Command::Support { map } => commands::support(&ctx, &map),
        Command::Root { kind } => match kind {
            RootKind::State { density, n, seed } => commands::root_state(&ctx, &density, n, seed),
            RootKind::Stochastic { p, n } => commands::root_stochastic(&ctx, &p, n),
            RootKind::Search {
                map,
                n,
                restarts,
                seed,
            } => commands::root_search(&ctx, &map, n, restarts, seed),
        },
        Command::VerifyRoot { tau, phi, n } => commands::verify_root(&ctx, &tau, &phi, n),
        Command::Asymptotic { map, times } => commands::asymptotic(&ctx, &map, &times),
        Command::Continuous { map } => commands::continuous(&ctx, &map),
        Command::ShiftDemo { m, times } => commands::shift_demo(&ctx, m, &times),
        Command::Fixtures { table } => {
            quiet = table;
            fixtures(&ctx, table)
        }
    }?;
    Ok((report, quiet))
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok((report, quiet)) => {
            if !quiet {
                println!("{}", report.to_json());
            }
            report.verdict.exit_code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
