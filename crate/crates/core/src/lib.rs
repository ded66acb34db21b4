//! Coherence-based sequential Jacobian approximation for receding-horizon
//! model predictive control.

pub mod bench;
pub mod cli;
pub mod derivative;
pub mod error;
pub mod mpc;
pub mod planners;
pub mod tasks;

pub use error::{Error, Result};
