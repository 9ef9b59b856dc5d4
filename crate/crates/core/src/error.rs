use thiserror::Error;

/// Crate-wide error type.
///
/// The variants map one-to-one onto the CLI exit codes: `Config` → 1,
/// `Input` → 2, `NonFinite` and `Invariant` → 3.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration or parameter value.
    #[error("config: {0}")]
    Config(String),

    /// Malformed or unusable input data (corpus, weights, ECG, ...).
    #[error("input: {0}")]
    Input(String),

    /// A simulated state variable left the representable range.
    #[error("non-finite value in component `{component}` at t={t_s} s")]
    NonFinite { component: String, t_s: f64 },

    /// An internal invariant was violated.
    #[error("invariant: {0}")]
    Invariant(String),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub fn invariant(msg: impl Into<String>) -> Self {
        Error::Invariant(msg.into())
    }

    /// Stable one-word category, used for machine-parsable CLI errors.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Config(_) => "config",
            Error::Input(_) => "input",
            Error::NonFinite { .. } | Error::Invariant(_) => "internal",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
