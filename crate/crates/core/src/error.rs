use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("matrix is not symmetric ({0})")]
    NotSymmetric(&'static str),
    #[error("quadratic term is not positive semidefinite (smallest eigenvalue {0:e})")]
    NotPositiveSemidefinite(f64),
    #[error("constraint matrix has rank {rank} < {rows} rows")]
    RankDeficient { rank: usize, rows: usize },
    #[error("symmetric factorization broke down at pivot {0}")]
    Singular(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("pair is not complementary at index {0}")]
    NotComplementary(usize),
    #[error("iterate left the relaxed bounds at index {0}")]
    BoundViolation(usize),
    #[error("problem is infeasible (phase-1 residual {0:e})")]
    Infeasible(f64),
    #[error("problem is unbounded below along a feasible ray")]
    Unbounded,
    #[error("active-set method exceeded {0} working-set changes")]
    CycleLimit(usize),
    #[error("line {line}: {message} (token `{token}`)")]
    Parse {
        line: usize,
        token: String,
        message: String,
    },
    #[error("unsupported section {0}")]
    UnsupportedSection(String),
    #[error("cannot convert to standard form: {0}")]
    Conversion(String),
    #[error("problem generation failed: {0}")]
    Generation(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
