use thiserror::Error;

/// Errors raised by the grid, operator and estimation layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("expected a {expected} grid function, found {found}")]
    WrongTag {
        expected: &'static str,
        found: &'static str,
    },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("integration window of half-width {window} does not fit in a box of half-width {extent}")]
    WindowTooLarge { window: f64, extent: f64 },

    #[error("frequency band {0} is not resolved by the grid")]
    UnresolvedBand(String),

    #[error("coefficient field violates a precondition: {0}")]
    FieldPrecondition(String),

    #[error("quadrature did not converge: {0}")]
    NotConverged(String),

    #[error("unknown operator id `{0}`")]
    UnknownOperator(String),

    #[error("case contract violated: {0}")]
    CaseViolation(String),

    #[error("fit error: {0}")]
    Fit(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures caused by the numerics rather than by malformed input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::WindowTooLarge { .. }
                | Error::UnresolvedBand(_)
                | Error::NotConverged(_)
                | Error::FieldPrecondition(_)
                | Error::CaseViolation(_)
                | Error::Fit(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
