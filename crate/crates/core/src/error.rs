use thiserror::Error;

/// Invalid model inputs.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum DomainError {
    #[error("sucker payoff S = {0} outside [-1, 1]")]
    SuckerOutOfRange(f64),
    #[error("temptation T = {0} outside [0, 2]")]
    TemptationOutOfRange(f64),
    #[error("cycle needs at least 3 vertices, got {0}")]
    CycleTooSmall(usize),
    #[error("complete graph needs at least 2 vertices, got {0}")]
    CompleteTooSmall(usize),
    #[error("cooperator count {delta} outside [0, {n}]")]
    CountOutOfRange { delta: usize, n: usize },
    #[error("probability {0} outside [0, 1]")]
    Probability(f64),
    #[error("invalid bitstring {0:?}: expected only '0' and '1'")]
    Bitstring(String),
    #[error("{0}")]
    Invalid(String),
}

/// Failures of the exact Markov-chain oracle.
#[derive(Debug, Error)]
pub enum OracleError {
    #[error("state space of 2^{n} configurations exceeds the cap of 2^{cap}")]
    TooLarge { n: usize, cap: usize },
    #[error("linear solve failed: {0}")]
    Singular(String),
    #[error("iterative solve did not reach residual {tol:e} within {iters} sweeps")]
    NoConvergence { tol: f64, iters: usize },
    #[error(transparent)]
    Domain(#[from] DomainError),
}

/// Failures of sweep and table output.
#[derive(Debug, Error)]
pub enum SweepError {
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("empty table")]
    EmptyTable,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
