//! `qfiopt` command-line driver.
//!
//! Each invocation runs one subcommand, writes a JSON run report to standard output and a
//! short summary to standard error. Exit status: 0 success, 1 numerical failure, 2 input error.

mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use report::{CliError, Outcome};

#[derive(Parser, Debug)]
#[command(name = "qfiopt", version, about = "Quantum Fisher information and metrological gain for bipartite states")]
struct Cli {
    /// Worker threads for parallel restarts (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// QFI, variance bound and separable bound for a given Hamiltonian.
    Qfi(QfiArgs),
    /// Maximize the QFI over local Hamiltonians and report the metrological gain.
    Gain(GainArgs),
    /// Maximize four times the Wigner-Yanase skew information over local Hamiltonians.
    Wy(WyArgs),
    /// Level-1 moment relaxation bound on the maximal QFI.
    Relax(RelaxArgs),
    /// Maximize the realigned trace norm over PPT states, or evaluate it for one state.
    Ccnr(CcnrArgs),
    /// Generate, inspect and test states.
    #[command(subcommand)]
    State(StateCommand),
}

#[derive(Args, Debug, Clone)]
pub struct StateSource {
    /// Built-in state `name:param:...`, e.g. `isotropic:0.1:2`, `horodecki:0.3`, `upb-tiles`.
    #[arg(long, value_name = "NAME:PARAMS")]
    builtin: Option<String>,
    /// State file in the JSON state format.
    #[arg(long = "state", value_name = "FILE")]
    state: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct SeesawArgs {
    #[arg(long, default_value_t = 50)]
    restarts: usize,
    #[arg(long, default_value_t = 500)]
    max_iters: usize,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long, env = "QFIOPT_SEED", default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
pub struct QfiArgs {
    #[command(flatten)]
    source: StateSource,
    /// JSON file with `matrix` (full operator) or `h1` and `h2` (local terms), as [re, im] arrays.
    #[arg(long, value_name = "FILE")]
    hamiltonian: PathBuf,
}

#[derive(Args, Debug)]
pub struct GainArgs {
    #[command(flatten)]
    source: StateSource,
    #[command(flatten)]
    seesaw: SeesawArgs,
    #[arg(long, default_value_t = 1.0, conflicts_with = "scan_theta")]
    c1: f64,
    #[arg(long, default_value_t = 1.0, conflicts_with = "scan_theta")]
    c2: f64,
    /// Scan the cap ratio instead of fixing (c1, c2).
    #[arg(long)]
    scan_theta: bool,
    #[arg(long, default_value_t = 33)]
    grid: usize,
    #[arg(long, default_value_t = 1e-4)]
    refine_width: f64,
}

#[derive(Args, Debug)]
pub struct WyArgs {
    #[command(flatten)]
    source: StateSource,
    #[command(flatten)]
    seesaw: SeesawArgs,
    #[arg(long, default_value_t = 1.0)]
    c1: f64,
    #[arg(long, default_value_t = 1.0)]
    c2: f64,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum ModeArg {
    Eig,
    Sum,
    Trace,
}

#[derive(Args, Debug)]
pub struct RelaxArgs {
    #[command(flatten)]
    source: StateSource,
    /// Eigenvalue caps `c1,c2`.
    #[arg(long, default_value = "1,1", value_name = "C1,C2")]
    caps: String,
    /// `off`, `scan`, or fixed multipliers `m1,m2` with `Tr(H_n) = m_n c_n`.
    #[arg(long, default_value = "off", value_name = "off|scan|M1,M2")]
    trace_pinning: String,
    #[arg(long, value_enum, default_value_t = ModeArg::Eig)]
    mode: ModeArg,
    /// Interior-point stopping tolerance.
    #[arg(long, default_value_t = 1e-9)]
    solver_tol: f64,
}

#[derive(Args, Debug)]
pub struct CcnrArgs {
    #[arg(long, requires = "d2")]
    d1: Option<usize>,
    #[arg(long, requires = "d1")]
    d2: Option<usize>,
    #[command(flatten)]
    source: StateSource,
    #[command(flatten)]
    seesaw: SeesawArgs,
}

#[derive(Subcommand, Debug)]
pub enum StateCommand {
    /// Write a built-in state to a file (or into the report).
    Gen(GenArgs),
    /// Spectrum, purity, PPT test, realigned trace norm and coherence-vector sparsity.
    Info(InfoArgs),
    /// Test for the form `p rho1 (x) 1/d2 + (1 - p) 1/d1 (x) rho2`.
    CheckSpecialSeparable(InfoArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum StateName {
    Isotropic,
    Horodecki,
    UpbTiles,
    CcnrBes4x4,
    MaximallyMixed,
    TwoCopyIsotropic,
}

#[derive(Args, Debug)]
pub struct GenArgs {
    #[arg(value_enum)]
    name: StateName,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    d1: Option<usize>,
    #[arg(long)]
    d2: Option<usize>,
    #[arg(short = 'o', long, value_name = "FILE")]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct InfoArgs {
    /// State file.
    #[arg(value_name = "FILE", conflicts_with = "builtin")]
    file: Option<PathBuf>,
    #[arg(long, value_name = "NAME:PARAMS")]
    builtin: Option<String>,
}

fn run(command: &Command) -> (String, Value, Result<Outcome, CliError>) {
    match command {
        Command::Qfi(a) => commands::with_source("qfi", &a.source, |s| commands::qfi(s, a)),
        Command::Gain(a) => commands::with_source("gain", &a.source, |s| commands::gain(s, a)),
        Command::Wy(a) => commands::with_source("wy", &a.source, |s| commands::wy(s, a)),
        Command::Relax(a) => commands::with_source("relax", &a.source, |s| commands::relax(s, a)),
        Command::Ccnr(a) => commands::ccnr(a),
        Command::State(StateCommand::Gen(a)) => commands::state_gen(a),
        Command::State(StateCommand::Info(a)) => commands::state_info(a),
        Command::State(StateCommand::CheckSpecialSeparable(a)) => commands::check_special_separable(a),
    }
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    let start = Instant::now();
    let (subcommand, input, result) = run(&cli.command);
    let (doc, code) = match result {
        Ok(outcome) => {
            eprintln!("{}", outcome.summary);
            for w in &outcome.warnings {
                eprintln!("warning: {w}");
            }
            let doc = report::report(&argv, &subcommand, &input, &outcome, start.elapsed());
            (doc, outcome.status.exit_code())
        }
        Err(e) => {
            eprintln!("error: {}", e.message());
            let doc = report::error_report(&argv, &subcommand, &input, &e, start.elapsed());
            (doc, e.exit_code())
        }
    };
    println!("{}", serde_json::to_string_pretty(&doc).expect("report serializes"));
    ExitCode::from(code as u8)
}

impl SeesawArgs {
    fn config(&self, caps: (f64, f64)) -> qfiopt::optimizers::SeesawConfig {
        qfiopt::optimizers::SeesawConfig {
            restarts: self.restarts,
            max_iters: self.max_iters,
            tol: self.tol,
            seed: self.seed,
            caps,
        }
    }

    fn echo(&self) -> Value {
        json!({ "restarts": self.restarts, "max_iters": self.max_iters, "tol": self.tol, "seed": self.seed })
    }
}
