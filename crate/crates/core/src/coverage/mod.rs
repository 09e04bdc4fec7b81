//! Dynamic area coverage on a capped grid.

pub mod gdc;
pub mod grid;
pub mod idc;
pub mod path;

pub use gdc::{Distribution, Family, GdcMode, GdcParams, GdcState, GdcTeam, PerturbRule, RendezvousEvent};
pub use grid::{footprint, CoverageGrid, CoverageParams};
pub use idc::{
    coverage_error_rate, idc_control, idc_gradient, idc_perturb, nearest_uncovered, IdcAgent, IdcMode, IdcParams,
    IdcTeam, SlowTimer,
};
pub use path::{Transit, TransitPlanner};
