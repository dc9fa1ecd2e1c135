use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter set that can never produce a valid run.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A valid configuration used in an invalid way (mismatched widths,
    /// empty inputs, ...).
    #[error("usage error: {0}")]
    Usage(String),

    /// The network stopped making progress before a barrier completed.
    #[error("simulation fault at cycle {cycle}: {reason}")]
    Simulation { cycle: u64, reason: String },

    #[error("snapshot format error: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn config<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}
