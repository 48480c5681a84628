//! Crate-wide error type.

/// Errors produced by simulation, analytics and experiment code.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Invalid configuration (bad profile, checkpoint outside horizon, ...).
    #[error("config error: {0}")]
    Config(String),

    /// A mathematical operation was called outside its domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// The particle population exceeded the configured cap.
    #[error("population cap {limit} exceeded at time {time_reached}")]
    PopulationCap { time_reached: f64, limit: usize },

    /// `split_by_ancestor` was asked for a time that was not recorded.
    #[error("time {requested} is not a recorded checkpoint; add it to SimConfig::checkpoints and rerun")]
    CheckpointNotRecorded { requested: f64 },

    /// A snapshot without barrier flags was passed where flags are required.
    #[error("snapshot carries no barrier flags; simulate with a BarrierSpec to use localized counts")]
    MissingBarrierFlags,

    /// Adaptive quadrature failed to reach the requested tolerance.
    #[error("quadrature did not converge: best bracket log[{log_lo}, {log_hi}] after {subdivisions} subdivisions")]
    QuadratureNoConvergence {
        log_lo: f64,
        log_hi: f64,
        subdivisions: usize,
    },

    /// Reports with overlapping replica ids cannot be merged.
    #[error("cannot merge reports: {0}")]
    Merge(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
