//! Extinction times of the stochastic SIRS epidemic and of linear
//! birth-death(-immigration) chains.
//!
//! The crate bundles the pieces needed to sample extinction times exactly
//! (Gillespie direct method) or approximately (modified τ-leaping), to couple
//! chains so that their paths stay ordered, and to evaluate the closed-form
//! limit laws, hitting probabilities and bounds that those samples are checked
//! against.
//!
//! * [`model`]: reaction-system representation of the chains.
//! * [`ssa`] / [`tau`]: the two simulation engines.
//! * [`coupling`]: order-preserving couplings and the SIRS sandwich.
//! * [`analytics`]: closed-form laws, case classification, hitting bounds.
//! * [`montecarlo`]: seeded replication harness, KS comparison, result files.

pub mod analytics;
pub mod coupling;
mod error;
pub mod model;
pub mod montecarlo;
pub mod rng;
pub mod special;
pub mod ssa;
pub mod tau;

pub use error::{Error, Result};
pub use model::{BdiParams, BdiSystem, ReactionSystem, SirsParams, SirsState, SirsSystem};
pub use rng::RngStream;
pub use ssa::{Extinction, Recording, StopCondition, StopMode, TerminalReason, Trajectory};
pub use tau::TauConfig;
