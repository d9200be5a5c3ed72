//! Monte Carlo pricing of barrier interest-rate derivatives under the LIBOR
//! market model with simple random walks for stopped diffusions.
//!
//! The weak Euler scheme with two-point noise is run until the chain enters a
//! boundary zone. There it either stops on the boundary or is pushed inward by
//! a coin flip (weak order one), or simply stops (weak order one half).

pub mod cli;
pub mod config;
pub mod error;
pub mod harness;
pub mod lmm;
pub mod noise;
pub mod products;
pub mod sde;
pub mod walk;

pub use error::{Error, Result};
pub use harness::{MCResult, PathSample};
pub use walk::{Algorithm, WalkOutcome};
