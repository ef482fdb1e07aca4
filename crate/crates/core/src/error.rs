use alloc::string::String;
use core::fmt;

/// Errors from kernel-level operations.
#[derive(Debug, Clone, PartialEq)]
pub enum CoreError {
    /// An argument lies outside the operation's domain (e.g. a positive
    /// history time, a mark outside `[0, H]`).
    Domain(String),
    /// Inputs violate a declared contract (mismatched decay rates or
    /// dimensions, empty samples, invalid grids).
    Contract(String),
    /// A history integral does not converge for the given weight rate.
    Divergence(String),
    /// A state-dependent rate exceeded its dominating entry; the model is
    /// inconsistent.
    DominanceViolation { rate: f64, dominating: f64 },
    /// Numerical failure (singular diffusion, non-positive grid operator).
    Numeric(String),
    /// A point fell outside a solution grid.
    Extrapolation(String),
}

impl fmt::Display for CoreError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoreError::Domain(msg) => write!(f, "domain error: {msg}"),
            CoreError::Contract(msg) => write!(f, "contract violation: {msg}"),
            CoreError::Divergence(msg) => write!(f, "divergent integral: {msg}"),
            CoreError::DominanceViolation { rate, dominating } => write!(
                f,
                "rate {rate} exceeds dominating entry {dominating}; model is inconsistent"
            ),
            CoreError::Numeric(msg) => write!(f, "numeric error: {msg}"),
            CoreError::Extrapolation(msg) => write!(f, "point outside grid: {msg}"),
        }
    }
}

impl core::error::Error for CoreError {}

pub type Result<T> = core::result::Result<T, CoreError>;
