use thiserror::Error;

/// Errors raised by the estimation library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An input lies outside the domain of the requested quantity.
    #[error("domain error: {0}")]
    Domain(String),

    /// Malformed or inconsistent arguments (empty samples, mismatched grids, ...).
    #[error("invalid argument: {0}")]
    Argument(String),

    /// The error law's Mellin transform is (numerically) zero inside the cut-off.
    #[error("ill-posed: |M_c[g](t)| = {modulus:e} at t = {t}")]
    IllPosed { t: f64, modulus: f64 },

    /// A quadrature node or scan point produced a non-finite value.
    #[error("numeric failure at t = {t}: {what}")]
    Numeric { t: f64, what: String },

    /// A population moment required by a constant does not exist.
    #[error("moment does not exist: {0}")]
    Moment(String),

    /// An error raised while evaluating one cut-off of a curve.
    #[error("at k = {k}: {source}")]
    AtCutoff {
        k: f64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn argument(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn at_cutoff(self, k: f64) -> Self {
        Error::AtCutoff {
            k,
            source: Box::new(self),
        }
    }

    /// True for failures that stem from floating point evaluation rather
    /// than from bad input.
    pub fn is_numeric(&self) -> bool {
        match self {
            Error::Numeric { .. } | Error::IllPosed { .. } => true,
            Error::AtCutoff { source, .. } => source.is_numeric(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
