//! `migrad`: sweeps, figure data and self-verification for the Gaussian MAC
//! gradient decompositions.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use migrad_core::sk::{solve_rho_star, sum_capacity};
use migrad_core::sweep::{
    default_gamma_range, figure_table, gamma_grid, run_sweep, Figure, Format, SweepMode, Table,
    SWEEP_COLUMNS,
};
use migrad_core::verify::{run_suite, Fault, Suite};
use migrad_core::Error;

const EXIT_FAILED: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser)]
#[command(
    name = "migrad",
    version,
    about = "Mutual-information gradients of two-user Gaussian MACs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the input correlation rho* that balances the two sum-capacity bounds.
    RhoStar {
        #[arg(long, allow_negative_numbers = true)]
        power: f64,
    },
    /// Print the two-user sum capacity with feedback, in nats per channel use.
    SumCapacity {
        #[arg(long, allow_negative_numbers = true)]
        power: f64,
    },
    /// Sweep the channel gain and write one row per grid point.
    #[command(after_help = sweep_help())]
    Sweep {
        #[arg(long, value_enum)]
        mode: ModeArg,
        #[command(flatten)]
        common: SweepArgs,
    },
    /// Write the columns of figure 2, 3 or 4.
    #[command(after_help = figure_help())]
    Figure {
        #[arg(value_parser = clap::value_parser!(u8).range(2..=4))]
        number: u8,
        #[command(flatten)]
        common: SweepArgs,
    },
    /// Run the verification suites; exits 0 iff every gating check passes.
    Verify {
        #[arg(long, value_enum, default_value = "all")]
        suite: SuiteArg,
        /// Emit a JSON report instead of text.
        #[arg(long)]
        json: bool,
        #[arg(long, value_enum, hide = true, default_value = "none")]
        inject_fault: FaultArg,
    },
}

#[derive(Args)]
struct SweepArgs {
    /// Per-user power P.
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    power: f64,
    /// Channel uses per block.
    #[arg(long, default_value_t = 10)]
    n: usize,
    /// Smallest gain (default: half the calibrated gain).
    #[arg(long, allow_negative_numbers = true)]
    gamma_min: Option<f64>,
    /// Largest gain (default: twice the calibrated gain).
    #[arg(long)]
    gamma_max: Option<f64>,
    #[arg(long, default_value_t = 41)]
    points: usize,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
    /// Report information quantities in bits instead of nats.
    #[arg(long)]
    bits: bool,
    /// Worker threads (default: all cores). Output does not depend on it.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    /// Feedback scheme.
    Sk,
    /// No feedback.
    Nf,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    All,
    Engine,
    Sk,
    Nf,
    Scalar,
    Mc,
}

#[derive(Clone, Copy, ValueEnum)]
enum FaultArg {
    None,
    DropHalfMmse,
}

fn sweep_help() -> String {
    format!(
        "Columns (all per channel use):\n{}",
        Table::describe(&SWEEP_COLUMNS)
    )
}

fn figure_help() -> String {
    let mut out = String::from("Columns:\n");
    for (n, f) in [
        (2, Figure::Information),
        (3, Figure::NoFeedbackTerms),
        (4, Figure::FeedbackTerms),
    ] {
        out.push_str(&format!(" figure {n}:\n{}", Table::describe(&f.columns())));
    }
    out
}

enum Failure {
    Usage(Error),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Self::Usage(e)
    }
}

fn grid_for(args: &SweepArgs) -> Result<Vec<f64>, Failure> {
    let (lo, hi) = match (args.gamma_min, args.gamma_max) {
        (Some(lo), Some(hi)) => (lo, hi),
        (lo, hi) => {
            let (dlo, dhi) = default_gamma_range(args.power)?;
            (lo.unwrap_or(dlo), hi.unwrap_or(dhi))
        }
    };
    Ok(gamma_grid(lo, hi, args.points)?)
}

fn configure_threads(threads: Option<usize>) -> Result<(), Failure> {
    if let Some(n) = threads {
        if n == 0 {
            return Err(Failure::Usage(Error::InvalidParameter {
                name: "threads",
                reason: "need at least one thread".into(),
            }));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Io(e.to_string()))?;
    }
    Ok(())
}

fn emit(table: &Table, args: &SweepArgs) -> Result<(), Failure> {
    let format = match args.format {
        FormatArg::Csv => Format::Csv,
        FormatArg::Json => Format::Json,
    };
    let text = table.render(format, args.bits);
    match &args.out {
        Some(path) => fs::write(path, text)
            .map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display()))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::Io(e.to_string())),
    }
}

fn run(command: Command) -> Result<bool, Failure> {
    match command {
        Command::RhoStar { power } => {
            println!("{}", solve_rho_star(power)?);
            Ok(true)
        }
        Command::SumCapacity { power } => {
            println!("{}", sum_capacity(power)?);
            Ok(true)
        }
        Command::Sweep { mode, common } => {
            configure_threads(common.threads)?;
            let mode = match mode {
                ModeArg::Sk => SweepMode::Sk,
                ModeArg::Nf => SweepMode::Nf,
            };
            let rows = run_sweep(mode, common.power, common.n, &grid_for(&common)?)?;
            emit(&Table::from_sweep(&rows), &common)?;
            Ok(true)
        }
        Command::Figure { number, common } => {
            configure_threads(common.threads)?;
            let table = figure_table(
                Figure::from_number(number)?,
                common.power,
                common.n,
                &grid_for(&common)?,
            )?;
            emit(&table, &common)?;
            Ok(true)
        }
        Command::Verify {
            suite,
            json,
            inject_fault,
        } => {
            let suite = match suite {
                SuiteArg::All => Suite::All,
                SuiteArg::Engine => Suite::Engine,
                SuiteArg::Sk => Suite::Sk,
                SuiteArg::Nf => Suite::Nf,
                SuiteArg::Scalar => Suite::Scalar,
                SuiteArg::Mc => Suite::Mc,
            };
            let fault = match inject_fault {
                FaultArg::None => Fault::None,
                FaultArg::DropHalfMmse => Fault::DropHalfMmse,
            };
            let report = run_suite(suite, fault);
            if json {
                println!("{}", report.to_json());
            } else {
                for check in &report.checks {
                    println!("{check}");
                }
                let failed = report.failures().count();
                println!(
                    "{} checks, {failed} gating failure{}",
                    report.checks.len(),
                    if failed == 1 { "" } else { "s" }
                );
            }
            Ok(report.passed())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_FAILED),
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_IO)
        }
    }
}
