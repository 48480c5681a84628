//! Simulation and analytics for binary branching Brownian motion: an exact
//! event-driven simulator with genealogy checkpoints and barrier flagging,
//! the classical additive/derivative martingales and high-point counts,
//! closed-form and quadrature reference values, and a deterministic Monte
//! Carlo experiment harness.

pub mod analytics;
pub mod error;
pub mod experiments;
pub mod fmt;
pub mod functionals;
pub mod process;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
pub use functionals::{AlphaParams, Centering, MartingaleTrace};
pub use process::{BarrierSpec, ParticleSnapshot, SimConfig, VarianceProfile};
