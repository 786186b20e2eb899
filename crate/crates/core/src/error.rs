use thiserror::Error;

/// Errors raised by the analysis, design, and simulation routines.
///
/// Variants split into two families: input validation problems
/// ([`Error::is_validation`]) and numerical failures of a well-formed problem.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("matrix is not Hurwitz (spectral abscissa {abscissa:e}): {context}")]
    Unstable { context: String, abscissa: f64 },

    #[error("below connectivity threshold: {0}")]
    BelowThreshold(String),

    #[error("eigensolver failed to converge: {0}")]
    Eigensolver(String),

    #[error("singular linear system: {0}")]
    Singular(String),

    #[error("not stabilizable: {0}")]
    NotStabilizable(String),

    #[error("not detectable: {0}")]
    NotDetectable(String),

    #[error("Riccati solver failed: {0}")]
    Riccati(String),

    #[error("bound requires convex φ: {0}")]
    NotConvex(String),

    #[error("quadrature failed: {0}")]
    Quadrature(String),

    #[error("ill-conditioned fit: {0}")]
    IllConditioned(String),

    #[error("simulation diverged: {0}")]
    Diverged(String),
}

impl Error {
    /// True for errors caused by malformed or inconsistent inputs, as opposed
    /// to numerical failures on valid inputs.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Dimension(_) | Error::Invalid(_) | Error::Parse { .. }
        )
    }

    pub(crate) fn unstable(context: impl Into<String>, abscissa: f64) -> Self {
        Error::Unstable {
            context: context.into(),
            abscissa,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
