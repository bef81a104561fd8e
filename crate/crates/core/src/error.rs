use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("expectile level must lie strictly inside (0, 1), got {0}")]
    InvalidTau(f64),

    #[error("scale must be positive and finite, got {0}")]
    InvalidScale(f64),

    #[error("non-finite value in {what} at index {index}")]
    NonFinite { what: &'static str, index: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("dimension mismatch in {what}: expected {expected}, got {actual}")]
    Dimension {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("invalid probability law: {0}")]
    InvalidProbability(String),

    #[error("path enumeration needs {states}^{steps} paths, above the limit of {limit}")]
    PathLimit {
        states: usize,
        steps: usize,
        limit: u64,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid dataset: {0}")]
    Data(String),

    #[error("could not draw an initial partition with at least {needed} points per state after {attempts} attempts")]
    Initialization { needed: usize, attempts: usize },

    #[error("singular weighted Gram matrix for state {state} at IRLS iteration {iteration}")]
    Singular { state: usize, iteration: usize },

    #[error("state {state} collapsed: effective sample size {mass:.3} below {needed}")]
    StateCollapse {
        state: usize,
        mass: f64,
        needed: usize,
    },

    #[error("all {} random starts failed: {}", .0.len(), .0.join("; "))]
    AllStartsFailed(Vec<String>),

    #[error("only {converged} of {requested} bootstrap replicates converged")]
    Bootstrap { converged: usize, requested: usize },

    #[error("Monte Carlo study: {0}")]
    Study(String),
}

impl Error {
    /// True for failures of the numerical procedure itself, as opposed to bad
    /// input or configuration.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Singular { .. }
                | Error::StateCollapse { .. }
                | Error::AllStartsFailed(_)
                | Error::Initialization { .. }
                | Error::Bootstrap { .. }
                | Error::Study(_)
        )
    }
}
