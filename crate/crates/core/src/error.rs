use thiserror::Error;

/// Errors produced by the simulation and reconstruction pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain where the quantity is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// The depth grid is too coarse for the requested frequency.
    #[error("resolution error: {0}")]
    Resolution(String),

    /// Mismatched lengths or axes.
    #[error("dimension error: {0}")]
    Dimension(String),

    /// A quantity required to be nonzero (norm, energy, wavenumber) vanished.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// Invalid experiment configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// The pulse time window clips part of the arrival pattern.
    #[error("time window error: {0}")]
    Window(String),

    /// An internal numerical consistency check failed.
    #[error("internal consistency error: {0}")]
    Consistency(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
