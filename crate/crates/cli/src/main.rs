mod commands;
mod config;
mod manifest;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gamedyn::Error;
use std::path::PathBuf;
use std::process::ExitCode;

pub const OUT_DIR_ENV: &str = "GAMEDYN_OUT_DIR";

const EXIT_CODES: &str = "\
Exit codes:
  0  success
  2  unparsable arguments, config or game file
  3  value out of bounds or wrong dimensions
  4  degenerate game
  5  a requested assertion failed (--assert-laws, --check-pairs)
  6  numerical failure (step-size underflow, unconverged estimate)
  7  i/o error

Sweeps: a:b:n is n evenly spaced values from a to b inclusive; integer
ranges are a:b inclusive.";

#[derive(Parser, Debug)]
#[command(name = "gamedyn", version, about = "Equilibria, learning dynamics and the minority game", after_help = EXIT_CODES)]
pub struct Cli {
    /// Output directory [default: $GAMEDYN_OUT_DIR, else ./gamedyn-out]
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,

    /// JSON or TOML file with `game`, `integrator`, `diagnostics` and `minority` sections
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Enumerate all equilibria of a game and check the counting laws
    Enumerate(EnumerateArgs),
    /// Integrate the learning dynamics of a rock-paper-scissors game
    Simulate(SimulateArgs),
    /// Lyapunov spectra, for one game or a sweep over eps
    Lyapunov(LyapunovArgs),
    /// Poincaré section on x2 - x1 + y2 - y1 = 0
    Poincare(PoincareArgs),
    /// Run the minority game or sweep sigma over the memory length
    Minority(MinorityArgs),
}

#[derive(Args, Debug)]
pub struct EnumerateArgs {
    /// n x n identity coordination game
    #[arg(long, group = "source")]
    pub identity: Option<usize>,
    /// Generalized rock-paper-scissors game with tie payoffs EPS_X EPS_Y
    #[arg(long, group = "source", num_args = 2, value_names = ["EPS_X", "EPS_Y"], allow_negative_numbers = true)]
    pub rps: Option<Vec<f64>>,
    /// Random nondegenerate integer games of shape RxC
    #[arg(long, group = "source", value_name = "RxC")]
    pub random: Option<String>,
    /// Game file (JSON with rows, cols, payoff_a, payoff_b)
    #[arg(group = "source")]
    pub game: Option<PathBuf>,
    /// Number of random games
    #[arg(long, default_value_t = 1)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Payoff range for random games
    #[arg(long, default_value_t = 10)]
    pub max_payoff: i64,
    /// Also run Lemke-Howson dropping this label (1-based)
    #[arg(long)]
    pub lemke_howson: Option<usize>,
    /// Exit with code 5 when a counting law fails
    #[arg(long)]
    pub assert_laws: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Simplex,
    LogRatio,
}

#[derive(Args, Debug, Clone)]
pub struct DynamicsArgs {
    /// Tie payoffs EPS_X EPS_Y
    #[arg(long, num_args = 2, value_names = ["EPS_X", "EPS_Y"], allow_negative_numbers = true)]
    pub eps: Option<Vec<f64>>,
    /// `uniform` or `x1,x2,x3/y1,y2,y3`
    #[arg(long)]
    pub start: Option<String>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub dynamics: DynamicsArgs,
    #[arg(long)]
    pub t_end: Option<f64>,
    #[arg(long)]
    pub record_every: Option<f64>,
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// Corner threshold for the residence report (simplex mode)
    #[arg(long)]
    pub threshold: Option<f64>,
}

#[derive(Args, Debug)]
pub struct LyapunovArgs {
    #[command(flatten)]
    pub dynamics: DynamicsArgs,
    /// Sweep eps_x over a:b:n
    #[arg(long, conflicts_with = "eps")]
    pub eps_sweep: Option<String>,
    /// In sweeps use eps_y = -eps_x (otherwise eps_y = eps_x)
    #[arg(long)]
    pub zero_sum: bool,
    /// Exit with code 5 unless every spectrum is ±-paired within 0.01
    #[arg(long)]
    pub check_pairs: bool,
    #[arg(long)]
    pub t_total: Option<f64>,
    #[arg(long)]
    pub qr_interval: Option<f64>,
    #[arg(long)]
    pub transient: Option<f64>,
}

#[derive(Args, Debug)]
pub struct PoincareArgs {
    #[command(flatten)]
    pub dynamics: DynamicsArgs,
    #[arg(long)]
    pub t_end: Option<f64>,
}

#[derive(Args, Debug)]
pub struct MinorityArgs {
    /// Number of agents (odd)
    #[arg(long)]
    pub n: Option<usize>,
    /// Memory length in bits
    #[arg(long)]
    pub m: Option<usize>,
    /// Strategies per agent
    #[arg(long)]
    pub s: Option<usize>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Sweep the memory length over a:b
    #[arg(long)]
    pub m_sweep: Option<String>,
    /// Seeds per memory length in a sweep, starting at --seed
    #[arg(long, default_value_t = 5)]
    pub seeds: u64,
    /// Steps dropped before computing sigma
    #[arg(long, default_value_t = 0)]
    pub discard: usize,
    /// Also write the initial strategy tables and history
    #[arg(long)]
    pub dump_population: bool,
}

#[derive(Debug)]
pub enum Failure {
    Lib(Error),
    Assertion(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn exit_code(f: &Failure) -> u8 {
    match f {
        Failure::Assertion(_) => 5,
        Failure::Lib(e) => match e {
            Error::Parse(_) => 2,
            Error::Bounds(_) | Error::Dimension(_) | Error::Size { .. } | Error::Domain(_) | Error::TooFewSamples(_) => 3,
            Error::Degenerate(_) => 4,
            Error::Stiffness { .. } | Error::Inconclusive(_) => 6,
            Error::Io(_) => 7,
        },
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Lib(e) => eprintln!("error: {e}"),
                Failure::Assertion(msg) => eprintln!("assertion failed: {msg}"),
            }
            ExitCode::from(exit_code(&f))
        }
    }
}
