//! Exact event-driven simulation of binary branching Brownian motion.
//!
//! A single particle starts at the origin, diffuses with a (piecewise
//! constant) variance rate, and splits in two after an Exp(1) lifetime;
//! both children continue independently. Nothing is discretized: increments
//! are drawn only at branch events, checkpoints and profile breakpoints,
//! and barrier crossings between those events are resolved by exact
//! Brownian-bridge sampling.

mod profile;
mod simulate;
mod snapshot;

pub use profile::VarianceProfile;
pub use simulate::{sample_barrier_crossing, simulate};
pub use snapshot::{split_by_ancestor, ParticleSnapshot};

use crate::error::{Error, Result};

/// Binary splits at unit rate; generalized offspring laws are out of scope.
pub const BRANCHING_RATE: f64 = 1.0;

/// Default particle cap (~e^18 particles).
pub const DEFAULT_MAX_PARTICLES: usize = 1 << 26;

/// Barrier line `s -> slope * s`, checked on `[start_time, horizon]`.
///
/// The barrier only flags lineages that exceed the line; it never kills.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierSpec {
    /// Time from which the line is monitored.
    pub start_time: f64,
    /// Slope of the line (space/time).
    pub slope: f64,
}

/// Full description of one simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// Simulation horizon `t >= 0`.
    pub horizon: f64,
    /// Ascending snapshot times in `[0, horizon]`; always ends with the horizon.
    pub checkpoints: Vec<f64>,
    /// Optional flagging barrier.
    pub barrier: Option<BarrierSpec>,
    /// Master seed shared by all replicas of an experiment.
    pub seed: u64,
    /// Replica index; selects an independent stream family.
    pub replica_id: u64,
    /// Hard cap on the population at any checkpoint.
    pub max_particles: usize,
}

impl SimConfig {
    /// Build a config with the horizon appended to the checkpoints if absent.
    pub fn new(horizon: f64, checkpoints: Vec<f64>, seed: u64) -> Result<Self> {
        let mut checkpoints = checkpoints;
        if checkpoints.last() != Some(&horizon) {
            checkpoints.push(horizon);
        }
        let cfg = SimConfig {
            horizon,
            checkpoints,
            barrier: None,
            seed,
            replica_id: 0,
            max_particles: DEFAULT_MAX_PARTICLES,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_replica(mut self, replica_id: u64) -> Self {
        self.replica_id = replica_id;
        self
    }

    pub fn with_barrier(mut self, barrier: BarrierSpec) -> Result<Self> {
        self.barrier = Some(barrier);
        self.validate()?;
        Ok(self)
    }

    pub fn with_max_particles(mut self, cap: usize) -> Result<Self> {
        self.max_particles = cap;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.horizon.is_finite() || self.horizon < 0.0 {
            return Err(Error::Config(format!(
                "horizon must be finite and >= 0, got {}",
                self.horizon
            )));
        }
        if self.checkpoints.is_empty() || self.checkpoints.last() != Some(&self.horizon) {
            return Err(Error::Config(
                "checkpoints must end with the horizon".into(),
            ));
        }
        for w in self.checkpoints.windows(2) {
            if !(w[0] < w[1]) {
                return Err(Error::Config(format!(
                    "checkpoints must be strictly ascending, got {} then {}",
                    w[0], w[1]
                )));
            }
        }
        if self.checkpoints[0] < 0.0 {
            return Err(Error::Config("checkpoints must be >= 0".into()));
        }
        if self.max_particles == 0 {
            return Err(Error::Config("max_particles must be >= 1".into()));
        }
        if let Some(b) = &self.barrier {
            if !b.slope.is_finite() {
                return Err(Error::Config("barrier slope must be finite".into()));
            }
            // start_time == horizon is the single-instant barrier.
            if !(0.0..=self.horizon).contains(&b.start_time) {
                return Err(Error::Config(format!(
                    "barrier start_time must lie in [0, horizon], got {}",
                    b.start_time
                )));
            }
        }
        Ok(())
    }
}
