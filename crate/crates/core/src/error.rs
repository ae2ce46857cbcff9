use crate::sdp::SolveStatus;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("hermiticity violation: max deviation from conjugate-transpose symmetry is {0:.3e}")]
    NotHermitian(f64),

    #[error("trace violation: trace is {0}")]
    TraceViolation(f64),

    #[error("positivity violation: minimum eigenvalue is {0:.3e}")]
    NotPositive(f64),

    #[error("{what} out of range: {value}")]
    OutOfRange { what: &'static str, value: f64 },

    #[error("Hermitian eigensolver did not converge")]
    EigenNonConvergence,

    #[error("singular value decomposition did not converge")]
    SvdNonConvergence,

    #[error("uninformative measurement: <i[M,H]>^2 = {0:.3e}")]
    UninformativeMeasurement(f64),

    #[error("metrologically trivial Hamiltonian: separable bound is {0:.3e}")]
    TrivialHamiltonian(f64),

    #[error("conic solve finished with status {0}")]
    Solver(SolveStatus),

    #[error("infeasible constraints: {0}")]
    Infeasible(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("malformed state file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}
