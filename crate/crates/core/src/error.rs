use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{what} out of domain: {value}")]
    Domain { what: &'static str, value: f64 },

    #[error("degenerate geometry: {0}")]
    Geometry(String),

    #[error("unsupported modulation order {0} (expected one of 2, 4, 8, 16, 32, 64)")]
    UnsupportedOrder(u32),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("drive current outside the LED linear range: {0}")]
    LinearRange(String),

    #[error("quadrature did not converge after {subdivisions} subdivisions (error estimate {error:e})")]
    Quadrature { subdivisions: usize, error: f64 },

    #[error("mutual information {value} bits falls outside [0, {max}] beyond tolerance")]
    InformationBounds { value: f64, max: f64 },

    #[error("action space too large: {total} actions exceeds the limit of {limit}")]
    Capacity { total: u128, limit: usize },

    #[error("empty action space")]
    EmptyActionSpace,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("slot {slot}: {source}")]
    Slot {
        slot: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("empty log")]
    EmptyLog,

    #[error("{0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
