use thiserror::Error;

/// Errors produced anywhere in the library.
///
/// Each variant maps onto a CLI exit code through [`Error::exit_code`].
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unsupported order {order} (maximum {max})")]
    UnsupportedOrder { order: u32, max: u32 },

    #[error("{what} did not converge; best residuals {best_residuals:?}")]
    Convergence {
        what: String,
        best_residuals: Vec<f64>,
    },

    #[error("enumeration budget exceeded: {0}")]
    Budget(String),

    #[error("degenerate domain: {0}")]
    DegenerateDomain(String),

    #[error("invalid polygon: {0}")]
    InvalidPolygon(String),

    #[error("insufficient resolution: {0}")]
    Resolution(String),

    #[error("incomplete base spectrum: {0}")]
    IncompleteBase(String),

    #[error("size error: requested {requested} eigenpairs of a {dimension}-dimensional operator")]
    Size { requested: usize, dimension: usize },

    #[error("insufficient spectrum: {0}")]
    InsufficientSpectrum(String),

    #[error("sampling failure: {0}")]
    Sampling(String),

    #[error("operator is not positive definite at pivot {0}")]
    NotPositiveDefinite(usize),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidInput(_)
            | Error::InvalidPolygon(_)
            | Error::DegenerateDomain(_)
            | Error::UnsupportedOrder { .. }
            | Error::Size { .. } => 2,
            Error::Convergence { .. } | Error::NotPositiveDefinite(_) => 3,
            Error::Resolution(_) => 4,
            Error::Budget(_) | Error::IncompleteBase(_) | Error::InsufficientSpectrum(_) => 5,
            Error::Sampling(_) => 6,
            Error::Io(_) => 7,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
