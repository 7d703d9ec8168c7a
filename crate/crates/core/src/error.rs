//! Error conditions shared by the model, solvers and diagnostics.

use std::fmt;

/// Error conditions raised by model construction, solver runs and diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A physical or numerical parameter violates its admissible range.
    InvalidParams(String),
    /// Initial or boundary data violates its admissible form (negative,
    /// non-finite, wrong length, ...).
    InvalidData(String),
    /// A field is not sampled on the grid it is used with.
    GridMismatch(String),
    /// A non-finite value was produced; carries the simulation time at which
    /// it was first detected.
    NonFinite { what: &'static str, t: f64 },
    /// A non-finite value was passed where a finite one is required.
    DomainError(&'static str),
    /// The fixed-point iteration failed to contract within the iteration cap,
    /// which signals a misconfigured window.
    NonContraction { window: f64, iterations: usize },
    /// A trajectory is missing the boundary-trace coverage a diagnostic needs.
    MissingTrace(String),
    /// A configuration value is inconsistent with the run it is used for.
    Config(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParams(msg) => write!(f, "invalid parameters: {msg}"),
            Error::InvalidData(msg) => write!(f, "invalid data: {msg}"),
            Error::GridMismatch(msg) => write!(f, "grid mismatch: {msg}"),
            Error::NonFinite { what, t } => {
                write!(f, "non-finite value in {what} at t = {t}")
            }
            Error::DomainError(what) => write!(f, "non-finite argument: {what}"),
            Error::NonContraction { window, iterations } => write!(
                f,
                "fixed point did not converge in {iterations} iterations \
                 (window = {window}); shrink the window or refine the grid"
            ),
            Error::MissingTrace(msg) => write!(f, "missing boundary trace: {msg}"),
            Error::Config(msg) => write!(f, "configuration error: {msg}"),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;
