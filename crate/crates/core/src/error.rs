use std::path::PathBuf;

use crate::conic::SolveStatus;

/// Failures of the dense complex kernel.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LinalgError {
    #[error("expected a square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("block_diag needs at least one block")]
    EmptyBlocks,
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("matrix is not Hermitian positive definite: pivot {pivot:.3e} at index {index} (threshold {threshold:.3e})")]
    NotHpd {
        index: usize,
        pivot: f64,
        threshold: f64,
    },
    #[error("matrix is not positive semidefinite: eigenvalue {eigenvalue:.3e} (norm {norm:.3e})")]
    NotPsd { eigenvalue: f64, norm: f64 },
    #[error("Hermitian eigendecomposition did not converge within {iterations} sweeps (dimension {dim})")]
    NoConvergence { iterations: usize, dim: usize },
}

/// Errors raised while building conic programs.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProgramError {
    #[error("variable index {index} out of range (program has {var_count} variables)")]
    UnknownVariable { index: usize, var_count: usize },
    #[error("matrix expression is not Hermitian: {0}")]
    NotHermitian(String),
    #[error("matrix expression shape mismatch: {0}")]
    Shape(String),
    #[error("program has no variables")]
    Empty,
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Program(#[from] ProgramError),
    #[error("{stage} subproblem ended with status {status:?} after {iterations} iterations (gap {gap:.3e}, residual {residual:.3e})")]
    Solver {
        stage: &'static str,
        status: SolveStatus,
        iterations: usize,
        gap: f64,
        residual: f64,
    },
    #[error("relay power left for the signal part is not positive ({0:.6e}); the relay noise alone exhausts the budget")]
    RelayPowerExhausted(f64),
    #[error("alternating optimization aborted after {} passes: {source}", trace.iters)]
    Aborted {
        source: Box<Error>,
        trace: Box<crate::opt::IterationTrace>,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
