use std::path::PathBuf;

/// Errors raised by the beamforming, channel and optimizer layers.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid array layout: {0}")]
    InvalidLayout(String),

    #[error("non-finite steering angle (theta={theta}, psi={psi})")]
    NonFiniteAngle { theta: f64, psi: f64 },

    #[error("invalid gain vector: {0}")]
    InvalidGain(String),

    #[error("dimension mismatch: expected {expected}, got {actual} ({context})")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("malformed channel file: {0}")]
    MalformedFile(String),

    #[error("frequency band [{low_hz}, {high_hz}] Hz is not covered by the grid [{grid_low_hz}, {grid_high_hz}] Hz")]
    BandOutsideGrid {
        low_hz: f64,
        high_hz: f64,
        grid_low_hz: f64,
        grid_high_hz: f64,
    },

    #[error("frequency band selects no grid points")]
    EmptyBand,

    #[error("sub-array partition: {0}")]
    Partition(String),

    #[error("power {0} is at or below the numeric floor")]
    BelowNumericFloor(f64),

    #[error("invalid bounds: {0}")]
    InvalidBounds(String),

    #[error("invalid optimizer configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid sweep grid: {0}")]
    InvalidGrid(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
