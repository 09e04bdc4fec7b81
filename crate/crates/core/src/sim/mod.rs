//! Deterministic fixed-timestep world model.

pub mod map;
pub mod world;

pub use map::{load_map, load_map_by_name, GoalDisk, MapId, Obstacle, StaticMap};
pub use world::{
    count_collisions, sense_obstacles_at, spawn_robots, CollisionLedger, Neighbor, ObstaclePoint,
    RobotState, SimParams, WorldState, PENETRATION_TOLERANCE,
};
