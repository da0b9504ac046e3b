//! Uncertainty-driven informative path planning on gridded fields.
//!
//! The crate implements the full stack needed to study adaptive spatial
//! sampling missions: Ordinary-Kriging interpolation with spherical
//! variogram fitting, kriging-variance-guided waypoint planners (random,
//! global, radius-limited local, and TSP-queued), a from-scratch
//! convolutional Q-network, and a DQN meta-controller that switches
//! between local planners to keep prediction error low while shortening
//! travelled paths.
//!
//! All randomness flows through explicitly seeded ChaCha streams, so every
//! mission, training run, and evaluation is reproducible bit-for-bit. The
//! crate is `no_std` (with `alloc`); file formats, CSV/SVG emission, and
//! the command line live in the companion `ipp-cli` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod field;
pub mod kriging;
pub mod mission;
pub mod nn;
pub mod planner;
pub mod rl;
pub mod rng;
pub mod stats;
pub mod surrogate;
pub mod tsp;

pub(crate) mod linalg;

pub use field::{Cell, FieldInstance, GridField, InstanceSource, InstanceSplit};
pub use kriging::{EmpiricalVariogram, PredictionMap, SampleSet, VariogramParams};
pub use mission::{EpisodeTrace, MissionPolicy, StepRecord};
pub use planner::{Path, PlannerContext};
