use thiserror::Error;

/// Errors raised by the reduction pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("equality constraints are rank deficient (rank {rank}, expected {expected})")]
    RankDeficient { rank: usize, expected: usize },

    #[error("infeasible problem: {0}")]
    Infeasible(String),

    #[error("normal matrix of the reduced least-squares problem is singular")]
    SingularHessian,

    #[error("iteration cap of {0} reached without convergence")]
    IterationCap(usize),

    #[error("empty class {0} in classifier training data")]
    EmptyClass(usize),

    #[error("structural mismatch: {0}")]
    Structure(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn dim_check(ok: bool, what: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::DimensionMismatch(what()))
    }
}
