use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A caller-supplied value violates a documented precondition.
    #[error("invalid {name}: {reason}")]
    InvalidArgument {
        name: &'static str,
        reason: &'static str,
    },

    /// A path whose quadratic functional vanishes, so a ratio estimator is undefined.
    #[error("degenerate path: {quantity} is zero")]
    DegeneratePath { quantity: &'static str },

    #[error("singular Gram matrix (condition number {condition:e})")]
    SingularGram { condition: f64 },

    /// A limit law requested outside the regime where it holds.
    #[error("{law} requires {requirement}")]
    Regime {
        law: &'static str,
        requirement: &'static str,
    },
}

impl Error {
    pub(crate) const fn invalid(name: &'static str, reason: &'static str) -> Self {
        Error::InvalidArgument { name, reason }
    }

    /// True for precondition violations, false for numeric failures on valid input.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::InvalidArgument { .. } | Error::Regime { .. })
    }
}
