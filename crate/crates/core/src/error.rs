use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid torus parameters: {0}")]
    InvalidParams(String),

    #[error("degenerate lattice basis: |det| = {det:e} relative to |v1||v2|")]
    DegenerateBasis { det: f64 },

    #[error("argument out of range: {0}")]
    OutOfRange(String),

    #[error("atom condition violated: largest weight {max} is not below half of the total mass {total}")]
    AtomCondition { max: f64, total: f64 },

    #[error("point {0:?} is singular for the Möbius map")]
    Singular(Vec<f64>),

    #[error("resolution floor violated: {0}")]
    Resolution(String),

    #[error("invalid conformal weight: {0}")]
    InvalidWeight(String),

    #[error("weight expression error at byte {pos}: {msg}")]
    Expr { pos: usize, msg: String },

    #[error("guard exceeded: {0}")]
    Guard(String),

    #[error("{what} did not converge within {iterations} iterations")]
    NoConvergence { what: &'static str, iterations: usize },

    #[error("no sign change of {what} on [{lo}, {hi}]")]
    NoBracket { what: &'static str, lo: f64, hi: f64 },

    #[error("mass matrix is not positive definite (pivot {pivot} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("invalid configuration: {0}")]
    Config(String),
}

/// Process exit codes shared by the CLI and the C ABI.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(i32)]
pub enum ExitCode {
    Success = 0,
    InvalidInput = 2,
    Io = 3,
    Numeric = 4,
}

impl Error {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            Error::InvalidParams(_)
            | Error::DegenerateBasis { .. }
            | Error::OutOfRange(_)
            | Error::AtomCondition { .. }
            | Error::Resolution(_)
            | Error::InvalidWeight(_)
            | Error::Expr { .. }
            | Error::Guard(_)
            | Error::Config(_) => ExitCode::InvalidInput,
            Error::Io(_) => ExitCode::Io,
            Error::Singular(_)
            | Error::NoConvergence { .. }
            | Error::NoBracket { .. }
            | Error::NotPositiveDefinite { .. } => ExitCode::Numeric,
        }
    }
}
