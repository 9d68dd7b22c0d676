use thiserror::Error;

/// Errors raised by the simulator library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {field} {reason}")]
    InvalidConfig { field: &'static str, reason: String },

    #[error("unknown configuration key `{0}`")]
    UnknownKey(String),

    #[error("malformed value for `{key}`: {reason}")]
    MalformedValue { key: String, reason: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate link: transmitter and receiver are co-located")]
    ZeroDistance,

    #[error("allocation violates power bound C1 for {who} (power {power_mw} mW, max {max_mw} mW)")]
    PowerBound {
        who: String,
        power_mw: f64,
        max_mw: f64,
    },

    #[error("malformed allocation: {0}")]
    MalformedAllocation(String),

    #[error("instance too large for exhaustive search: {0}")]
    OracleGuard(String),

    #[error("sweep point {axis}={value}: {skipped} of {instances} instances skipped (more than half)")]
    TooManySkips {
        axis: String,
        value: f64,
        skipped: usize,
        instances: usize,
    },

    #[error("sweep point {axis}={value}: {source}")]
    Point {
        axis: String,
        value: f64,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
