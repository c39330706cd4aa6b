//! Error taxonomy shared by the solver and the verification lab.
//!
//! Variants are split so that callers (and the CLI exit-code mapping) can
//! distinguish configuration mistakes, infeasible analysis parameters,
//! numerical blow-up, and missing/corrupt artifacts.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Structural misuse: mismatched grids, non-divisible step sizes,
    /// out-of-range parameters, malformed config values.
    #[error("configuration error: {0}")]
    Config(String),

    /// The requested decay parameters violate one of the feasibility
    /// conditions; the message names the first violated interval.
    #[error("infeasible hypothesis window: {0}")]
    Infeasible(String),

    /// A spectral coefficient left the trust region or became non-finite.
    #[error("numerical blow-up at t = {time}: {detail}")]
    BlowUp { time: f64, detail: String },

    /// A certificate was asked for more data than the run contains.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// A referenced artifact (snapshot, checkpoint, manifest) is absent.
    #[error("missing artifact: {0}")]
    MissingArtifact(String),

    /// An artifact exists but fails structural validation.
    #[error("corrupt artifact {path}: {detail}")]
    CorruptArtifact { path: String, detail: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn infeasible(msg: impl Into<String>) -> Self {
        Error::Infeasible(msg.into())
    }

    pub fn insufficient(msg: impl Into<String>) -> Self {
        Error::InsufficientData(msg.into())
    }

    pub fn missing(msg: impl Into<String>) -> Self {
        Error::MissingArtifact(msg.into())
    }
}
