use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod input;
mod report;

/// Exit codes.
pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_REJECTED: u8 = 2;
pub const EXIT_UNSAT: u8 = 3;
pub const EXIT_NUMERIC: u8 = 4;

#[derive(Parser, Debug)]
#[command(name = "kscert", version, about = "Contextuality witnesses, KS sets and self-testing of observable sets")]
pub struct Cli {
    #[command(subcommand)]
    pub cmd: Cmd,
    #[command(flatten)]
    pub opts: Opts,
}

#[derive(Args, Debug, Clone)]
pub struct Opts {
    /// Built-in set name (see `catalog list`).
    #[arg(long, global = true)]
    pub set: Option<String>,
    /// Vector set in JSON form.
    #[arg(long, global = true)]
    pub file: Option<PathBuf>,
    /// Tolerance for pass/fail checks.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true, default_value_t = 100_000)]
    pub shots: u64,
    #[arg(long, global = true)]
    pub dim: Option<usize>,
    #[arg(long, global = true)]
    pub theta: Option<f64>,
    #[arg(long, global = true)]
    pub eps: Option<f64>,
    #[arg(long, global = true)]
    pub attest_full_rank: bool,
    /// Write the output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub json: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum StateArg {
    /// Maximally mixed state.
    Mixed,
    /// Seeded random pure state.
    Pure,
    /// Seeded random full-rank state.
    Full,
}

#[derive(Args, Debug, Clone)]
pub struct NoiseArgs {
    #[arg(long, default_value_t = 0.0)]
    pub depolarize: f64,
    /// Magnitude of the seeded projector rotation.
    #[arg(long, default_value_t = 0.0)]
    pub rotation: f64,
    #[arg(long, default_value_t = 0.0)]
    pub readout_flip: f64,
}

#[derive(Subcommand, Debug)]
pub enum Cmd {
    /// List or show built-in sets.
    Catalog {
        #[command(subcommand)]
        action: CatalogCmd,
    },
    /// Weighted independence number of the orthogonality graph.
    Alpha,
    /// Weighted Lovasz number of the orthogonality graph.
    Theta,
    /// Witness evaluation.
    Witness {
        #[command(subcommand)]
        action: WitnessCmd,
    },
    /// Largest deviation of the witness from Q over seeded random states.
    Scan {
        #[arg(long, default_value_t = 100)]
        trials: usize,
    },
    /// Search for a KS 0/1 assignment; exit 3 when none exists.
    Kscolor,
    /// Close the set under 1 - Pi_i - Pi_j.
    Complete,
    /// Peres-24 copies lifted to dimension --dim.
    Lift,
    /// Unitary or antiunitary equivalence of two sets (names or JSON files).
    Equiv { a: String, b: String },
    /// Simulated sequential-measurement counts.
    Simulate {
        #[arg(long, value_enum, default_value = "mixed")]
        state: StateArg,
        #[command(flatten)]
        noise: NoiseArgs,
        /// Also measure every edge in reverse order.
        #[arg(long)]
        both_orders: bool,
    },
    /// Worst-case theta and eps of a (perturbed) realization.
    Quality {
        #[arg(long, default_value_t = 0.0)]
        rotation: f64,
    },
    /// Certification verdict; exit 2 when rejected.
    Certify {
        /// Counts produced by `simulate`.
        #[arg(long)]
        stats: Option<PathBuf>,
        /// Perturb the ideal realization by this much.
        #[arg(long, default_value_t = 0.0)]
        rotation: f64,
    },
    /// Alignment residual against perturbation size.
    Robustness {
        /// Comma-separated perturbation magnitudes, ascending.
        #[arg(long, value_delimiter = ',')]
        magnitudes: Option<Vec<f64>>,
    },
    /// Classical and quantum values of the context-projector game.
    Game,
    /// Exclusivity-graph upper bound on the witness.
    ExclusivityBound,
    /// Critical noise values and single-defect threshold from the SDPs.
    Thresholds,
    /// Golden-value battery as one JSON document.
    Report {
        /// Skip the semidefinite thresholds and exclusivity bounds.
        #[arg(long)]
        quick: bool,
    },
}

#[derive(Subcommand, Debug)]
pub enum CatalogCmd {
    List,
    Show,
}

#[derive(Subcommand, Debug)]
pub enum WitnessCmd {
    Eval {
        #[arg(long, value_enum, default_value = "mixed")]
        state: StateArg,
    },
}

fn threads_from_env() {
    if let Some(n) = std::env::var("KSCERT_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    threads_from_env();
    match commands::run(&cli) {
        Ok(out) => match out.emit(&cli.opts) {
            Ok(()) => ExitCode::from(out.code),
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(EXIT_USAGE)
            }
        },
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
