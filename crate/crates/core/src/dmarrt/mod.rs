//! Decentralized multi-agent RRT with merit-based token passing.

pub mod plan;
pub mod protocol;
pub mod rrt;

pub use plan::{min_separation, Plan, Waypoint};
pub use protocol::{
    compute_merit, dmarrt_execute, select_winner, token_round, CommitEvent, DmaAgent, DmaRrtTeam, TokenState,
};
pub use rrt::{audit_separation, grow_rrt, plan_is_well_formed, DmaRrtParams, PlanningContext};
