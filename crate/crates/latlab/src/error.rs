use thiserror::Error;

/// Crate-wide error type.
///
/// The CLI maps these onto exit codes: configuration and argument problems
/// exit 2, runtime failures (budgets, accuracy certificates, hypothesis
/// checks) exit 3.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("rank-deficient input: {0}")]
    RankDeficient(String),

    #[error("local decomposition undefined: {0}")]
    DecompositionUndefined(String),

    /// Enumeration node budget exhausted. `best_so_far` carries the best
    /// bound achieved before the cap was hit, when one exists.
    #[error("enumeration budget exceeded after {visited} nodes ({context})")]
    BudgetExceeded {
        visited: u64,
        best_so_far: Option<f64>,
        context: String,
    },

    #[error("quadrature accuracy certificate failed: {0}")]
    Accuracy(String),

    #[error("test-function support too large: {0}")]
    Support(String),

    #[error("degenerate function: {0}")]
    DegenerateFunction(String),

    #[error("growth hypothesis failed: {0}")]
    Hypothesis(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
