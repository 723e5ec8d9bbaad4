use std::path::PathBuf;
use std::process::ExitCode;

use bcrecon_cli::commands::{self, CliError, SearchOptions, StudyOptions, EXIT_INPUT};
use bcrecon_cli::THREADS_ENV;
use clap::{Args, Parser, Subcommand};

/// Forward and inverse spectral problems for third-order ODEs with
/// non-separated boundary conditions.
#[derive(Parser, Debug)]
#[command(name = "bcrecon", version, after_help = EXIT_CODES)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

const EXIT_CODES: &str = "\
Exit codes:
  0  success
  1  unreadable or malformed input, invalid flags
  2  uniqueness conditions fail (roots), no boundary matrix, or fewer than 19 eigenvalues
  3  numerical failure
  4  eigenvalues inconsistent with any rank-3 boundary matrix (invert, verify)
  5  verify round trip exceeded its tolerance

Set BCRECON_THREADS to cap worker threads (0 = automatic).";

#[derive(Subcommand, Debug)]
enum Command {
    /// Characteristic roots and the uniqueness condition table.
    Roots {
        #[arg(long)]
        problem: PathBuf,
        /// Also write a JSON report.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Eigenvalues of a problem with known boundary matrix, as CSV.
    Forward {
        #[arg(long)]
        problem: PathBuf,
        #[command(flatten)]
        search: SearchArgs,
        /// CSV destination; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reconstruct the boundary matrix from a spectrum file.
    Invert {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long)]
        spectrum: PathBuf,
        #[arg(long)]
        rank_gap_threshold: Option<f64>,
        /// JSON report destination.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Forward solve, invert, and compare with the original boundary matrix.
    Verify {
        #[arg(long)]
        problem: PathBuf,
        #[command(flatten)]
        search: SearchArgs,
        #[arg(long)]
        rank_gap_threshold: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Invert noisy copies of the spectrum and record the span distances.
    Perturb {
        #[arg(long)]
        problem: PathBuf,
        #[command(flatten)]
        search: SearchArgs,
        /// Standard deviation of the complex noise added to each eigenvalue.
        #[arg(long)]
        noise: f64,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        rank_gap_threshold: Option<f64>,
        /// CSV destination; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct SearchArgs {
    /// Search rectangle; overrides the problem file.
    #[arg(long, num_args = 4, allow_negative_numbers = true,
          value_names = ["RE_MIN", "RE_MAX", "IM_MIN", "IM_MAX"])]
    region: Option<Vec<f64>>,
    /// Grid samples per unit length.
    #[arg(long)]
    grid: Option<f64>,
    /// Keep at most this many eigenvalues (smallest by real, then imaginary part).
    #[arg(long)]
    count: Option<usize>,
}

impl SearchArgs {
    fn options(&self) -> SearchOptions {
        SearchOptions {
            region: self.region.as_ref().map(|r| [r[0], r[1], r[2], r[3]]),
            grid: self.grid,
            count: self.count,
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().map_err(|_| CliError {
        code: EXIT_INPUT,
        message: format!("{THREADS_ENV} must be a non-negative integer, got {raw:?}"),
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError {
            code: EXIT_INPUT,
            message: e.to_string(),
        })
}

fn run(cli: Cli) -> Result<i32, CliError> {
    configure_threads()?;
    match cli.command {
        Command::Roots { problem, out } => commands::roots(&problem, out.as_deref()),
        Command::Forward {
            problem,
            search,
            out,
        } => commands::forward(&problem, &search.options(), out.as_deref()),
        Command::Invert {
            problem,
            spectrum,
            rank_gap_threshold,
            out,
        } => commands::invert(&problem, &spectrum, rank_gap_threshold, out.as_deref()),
        Command::Verify {
            problem,
            search,
            rank_gap_threshold,
            out,
        } => commands::verify(&problem, &search.options(), rank_gap_threshold, out.as_deref()),
        Command::Perturb {
            problem,
            search,
            noise,
            trials,
            seed,
            rank_gap_threshold,
            out,
        } => commands::perturb(
            &problem,
            &search.options(),
            &StudyOptions {
                noise,
                trials,
                seed,
            },
            rank_gap_threshold,
            out.as_deref(),
        ),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // usage errors share the malformed-input code; 2 means something else here
            return ExitCode::from(if e.use_stderr() { EXIT_INPUT as u8 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code as u8)
        }
    }
}
