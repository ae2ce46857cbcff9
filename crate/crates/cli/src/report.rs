//! Run reports, input loading and JSON encodings of operators.

use std::path::{Path, PathBuf};
use std::time::Duration;

use qfiopt::linalg::c;
use qfiopt::{CMatrix, DensityMatrix, Error, LocalHamiltonian};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub const VERSION: &str = concat!("qfiopt ", env!("CARGO_PKG_VERSION"));

/// Failure of a command, split by exit status.
#[derive(Debug)]
pub enum CliError {
    /// Bad input: files, dimensions, parameters.
    Input(String),
    /// The computation itself failed.
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Numerical(_) => 1,
            CliError::Input(_) => 2,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Input(m) | CliError::Numerical(m) => m,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Solver(_) | Error::EigenNonConvergence | Error::SvdNonConvergence => CliError::Numerical(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Completion state reported in `status` and mapped to the exit code.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Ok,
    NotConverged,
    Infeasible,
}

impl Status {
    pub fn name(self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::NotConverged => "not_converged",
            Status::Infeasible => "infeasible",
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::NotConverged | Status::Infeasible => 1,
        }
    }
}

/// What a command produced, before it is wrapped into a report.
pub struct Outcome {
    pub config: Value,
    pub results: Value,
    pub summary: String,
    pub status: Status,
    pub warnings: Vec<String>,
}

impl Outcome {
    pub fn new(config: Value, results: Value, summary: String) -> Self {
        Outcome { config, results, summary, status: Status::Ok, warnings: Vec::new() }
    }
}

pub fn report(command: &[String], subcommand: &str, input: &Value, outcome: &Outcome, elapsed: Duration) -> Value {
    json!({
        "version": VERSION,
        "command": command,
        "subcommand": subcommand,
        "input": input,
        "config": outcome.config,
        "results": outcome.results,
        "status": outcome.status.name(),
        "warnings": outcome.warnings,
        "duration_seconds": elapsed.as_secs_f64(),
    })
}

pub fn error_report(command: &[String], subcommand: &str, input: &Value, err: &CliError, elapsed: Duration) -> Value {
    let kind = match err {
        CliError::Input(_) => "input",
        CliError::Numerical(_) => "numerical",
    };
    json!({
        "version": VERSION,
        "command": command,
        "subcommand": subcommand,
        "input": input,
        "config": Value::Null,
        "results": Value::Null,
        "status": "error",
        "error": { "kind": kind, "message": err.message() },
        "warnings": [],
        "duration_seconds": elapsed.as_secs_f64(),
    })
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// A state together with the descriptor echoed in the report.
pub struct LoadedState {
    pub rho: DensityMatrix,
    pub input: Value,
}

pub fn load_builtin(spec: &str) -> CliResult<LoadedState> {
    let rho = qfiopt::states::builtin(spec)?;
    Ok(LoadedState { rho, input: json!({ "kind": "builtin", "descriptor": spec }) })
}

pub fn load_file(path: &Path) -> CliResult<LoadedState> {
    let bytes = std::fs::read(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    let text = String::from_utf8(bytes.clone()).map_err(|_| CliError::Input(format!("{} is not UTF-8", path.display())))?;
    let (rho, label) = qfiopt::states::parse_state(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    Ok(LoadedState {
        rho,
        input: json!({ "kind": "file", "path": path.display().to_string(), "sha256": sha256_hex(&bytes), "label": label }),
    })
}

pub fn load_source(builtin: Option<&str>, file: Option<&PathBuf>) -> CliResult<LoadedState> {
    match (builtin, file) {
        (Some(spec), None) => load_builtin(spec),
        (None, Some(path)) => load_file(path),
        (Some(_), Some(_)) => Err(CliError::Input("give either a built-in state or a state file, not both".into())),
        (None, None) => Err(CliError::Input("no state given; use --builtin NAME:PARAMS or a state file".into())),
    }
}

/// `[[[re, im], ...], ...]`, row-major.
pub fn matrix_json(m: &CMatrix) -> Value {
    let rows: Vec<Value> = (0..m.nrows())
        .map(|i| Value::Array((0..m.ncols()).map(|j| json!([m[(i, j)].re, m[(i, j)].im])).collect()))
        .collect();
    Value::Array(rows)
}

pub fn matrix_from_json(v: &Value, what: &str) -> CliResult<CMatrix> {
    let bad = || CliError::Input(format!("{what}: expected a square array of [re, im] pairs"));
    let rows = v.as_array().ok_or_else(bad)?;
    let n = rows.len();
    let mut entries = Vec::with_capacity(n * n);
    for row in rows {
        let row = row.as_array().filter(|r| r.len() == n).ok_or_else(bad)?;
        for z in row {
            let pair = z.as_array().filter(|p| p.len() == 2).ok_or_else(bad)?;
            let re = pair[0].as_f64().ok_or_else(bad)?;
            let im = pair[1].as_f64().ok_or_else(bad)?;
            entries.push(c(re, im));
        }
    }
    if n == 0 {
        return Err(bad());
    }
    Ok(CMatrix::from_row_slice(n, n, &entries))
}

pub fn hamiltonian_json(h: &LocalHamiltonian) -> Value {
    json!({ "h1": matrix_json(h.h1.matrix()), "h2": matrix_json(h.h2.matrix()), "caps": [h.caps.0, h.caps.1] })
}

pub fn state_json(rho: &DensityMatrix) -> Value {
    let dims = rho.dims().map(|d| json!([d.d1, d.d2])).unwrap_or(Value::Null);
    json!({ "dims": dims, "matrix": matrix_json(rho.matrix()) })
}
