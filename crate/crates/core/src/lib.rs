//! Deterministic 2D multi-robot simulator with swarm and multi-robot
//! navigation and coverage algorithms, a bandwidth ledger, and an
//! information-invariants analysis of their communication needs.

pub mod bench;
pub mod comms;
pub mod coverage;
pub mod dmarrt;
pub mod error;
pub mod geom;
pub mod invariants;
pub mod sim;
pub mod swarm;

pub use error::{Error, Result};
pub use geom::{vec2, Vec2};
