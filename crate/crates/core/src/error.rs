use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum DesignError {
    /// Problem dimensions do not admit the third-order interactions model.
    #[error("dimension error: {0}")]
    Dimension(String),

    /// A value violates a structural invariant (profile levels, weights, ...).
    #[error("validation error: {0}")]
    Validation(String),

    /// The two alternatives of a pair do not present the same attributes.
    #[error("invalid pair: {0}")]
    InvalidPair(String),

    /// An argument is outside the admissible range, e.g. a depth d > S.
    #[error("domain error: {0}")]
    Domain(String),

    /// The information matrix is singular, so not all parameters are
    /// identifiable. `zero_blocks` lists the 1-based blocks r with h_r = 0
    /// when the matrix is block diagonal.
    #[error("not identifiable: {detail}")]
    Singular {
        zero_blocks: Vec<usize>,
        detail: String,
    },

    /// The optimizer failed to certify within its iteration budget.
    #[error("no convergence after {iterations} iterations (KW excess {excess:.3e}, best weights {best_weights:?})")]
    NonConvergence {
        iterations: usize,
        excess: f64,
        best_weights: Vec<f64>,
    },

    /// The brute-force oracle refuses problems above its size gate.
    #[error("oracle refused: {0}")]
    OracleTooLarge(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl DesignError {
    pub(crate) fn singular_blocks(zero_blocks: Vec<usize>) -> Self {
        let detail = zero_blocks
            .iter()
            .map(|r| format!("h{r}="))
            .collect::<String>()
            + "0";
        DesignError::Singular {
            zero_blocks,
            detail,
        }
    }
}

pub type Result<T> = std::result::Result<T, DesignError>;
