//! Sensing-only swarm navigation controllers. Nothing here has access to a
//! message bus: every output is a function of the robot's own state and what
//! it senses.

pub mod pbc;
pub mod pf;
pub mod qp;

pub use pbc::{barrier_constraints, p_controller, pbc_filter, FilterOutput, PbcParams};
pub use pf::{pf_control, PfParams};
pub use qp::{max_min_slack, qp_solve_2d, HalfPlane, QpSolution};
