use std::collections::BTreeMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::coverage::CoverageGrid;
use crate::error::{Error, Result};
use crate::geom::{clamp_norm, vec2, Vec2};
use crate::sim::map::StaticMap;

/// Allowed penetration of a robot disk into an obstacle after a step.
pub const PENETRATION_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotState {
    pub id: usize,
    pub position: Vec2,
    /// Commanded velocity after the speed clamp.
    pub velocity: Vec2,
    pub collision_radius: f64,
    pub sense_radius: f64,
    pub distance_travelled: f64,
    /// Displacement produced by the most recent step (after obstacle clipping).
    pub last_displacement: Vec2,
}

impl RobotState {
    pub fn new(id: usize, position: Vec2, collision_radius: f64, sense_radius: f64) -> Self {
        Self {
            id,
            position,
            velocity: Vec2::zeros(),
            collision_radius,
            sense_radius,
            distance_travelled: 0.0,
            last_displacement: Vec2::zeros(),
        }
    }
}

/// Physical and sensing constants shared by every robot in a trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimParams {
    pub dt: f64,
    pub v_max: f64,
    pub collision_radius: f64,
    pub sense_radius: f64,
    /// Minimum pairwise spacing enforced by spawn placement.
    pub d_spawn: f64,
    /// Place robots uniformly in the spawn region with no spacing guarantee.
    pub violate_spawn_spacing: bool,
}

impl Default for SimParams {
    fn default() -> Self {
        Self {
            dt: 0.02,
            v_max: 0.5,
            collision_radius: 0.1,
            sense_radius: 3.0,
            d_spawn: 0.6,
            violate_spawn_spacing: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Neighbor {
    pub id: usize,
    /// `p_j - p_i`
    pub rel_position: Vec2,
    /// `v_j - v_i`
    pub rel_velocity: Vec2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ObstaclePoint {
    pub obstacle: usize,
    pub point: Vec2,
    pub distance: f64,
}

#[derive(Debug, Clone)]
pub struct WorldState {
    pub time: f64,
    pub steps: u64,
    pub robots: Vec<RobotState>,
    pub map: Arc<StaticMap>,
    pub coverage: Option<CoverageGrid>,
    pub rng_seed: u64,
    pub v_max: f64,
}

impl WorldState {
    pub fn new(map: Arc<StaticMap>, robots: Vec<RobotState>, v_max: f64, rng_seed: u64) -> Self {
        Self {
            time: 0.0,
            steps: 0,
            robots,
            map,
            coverage: None,
            rng_seed,
            v_max,
        }
    }

    /// Advances every robot by one holonomic step. Commands are clamped to
    /// `v_max`; motion into obstacles or the map boundary is clipped so the
    /// robot slides along the contact surface.
    pub fn step(&mut self, controls: &[Vec2], dt: f64) -> Result<()> {
        if controls.len() != self.robots.len() {
            return Err(Error::Config(format!(
                "{} controls for {} robots",
                controls.len(),
                self.robots.len()
            )));
        }
        if !(dt > 0.0) {
            return Err(Error::Config(format!("dt must be positive, got {dt}")));
        }
        let map = Arc::clone(&self.map);
        for (robot, &u) in self.robots.iter_mut().zip(controls) {
            let u = if u.iter().all(|c| c.is_finite()) { u } else { Vec2::zeros() };
            let v = clamp_norm(u, self.v_max);
            let target = robot.position + v * dt;
            let next = resolve_contacts(&map, robot.position, target, robot.collision_radius);
            let disp = next - robot.position;
            robot.velocity = v;
            robot.last_displacement = disp;
            robot.distance_travelled += disp.norm();
            robot.position = next;
        }
        self.time += dt;
        self.steps += 1;
        Ok(())
    }

    /// Robots within sensing range of robot `i`, ordered by id.
    pub fn sense_neighbors(&self, i: usize) -> Vec<Neighbor> {
        let me = &self.robots[i];
        self.robots
            .iter()
            .filter(|r| r.id != me.id)
            .filter_map(|r| {
                let rel = r.position - me.position;
                (rel.norm() <= me.sense_radius).then(|| Neighbor {
                    id: r.id,
                    rel_position: rel,
                    rel_velocity: r.velocity - me.velocity,
                })
            })
            .collect()
    }

    /// Closest boundary point of every obstacle within sensing range, in obstacle order.
    pub fn sense_obstacles(&self, i: usize) -> Vec<ObstaclePoint> {
        sense_obstacles_at(&self.map, self.robots[i].position, self.robots[i].sense_radius)
    }

    pub fn total_distance(&self) -> f64 {
        self.robots.iter().map(|r| r.distance_travelled).sum()
    }
}

pub fn sense_obstacles_at(map: &StaticMap, p: Vec2, range: f64) -> Vec<ObstaclePoint> {
    map.obstacles
        .iter()
        .enumerate()
        .filter_map(|(k, o)| {
            let c = o.closest_boundary_point(p);
            let d = (p - c).norm();
            (d <= range).then_some(ObstaclePoint {
                obstacle: k,
                point: c,
                distance: d,
            })
        })
        .collect()
}

fn clamp_to_bounds(map: &StaticMap, p: Vec2, r: f64) -> Vec2 {
    vec2(
        p.x.clamp(r, (map.width - r).max(r)),
        p.y.clamp(r, (map.height - r).max(r)),
    )
}

/// Projects `target` out of every inflated obstacle. Falls back to the
/// previous position when the projection does not settle (tight corners).
fn resolve_contacts(map: &StaticMap, from: Vec2, target: Vec2, r: f64) -> Vec2 {
    let mut p = clamp_to_bounds(map, target, r);
    for _ in 0..6 {
        let mut moved = false;
        for obs in &map.obstacles {
            let (sd, n) = obs.signed_distance_and_normal(p);
            if sd < r {
                p += n * (r - sd);
                moved = true;
            }
        }
        p = clamp_to_bounds(map, p, r);
        if !moved {
            return p;
        }
    }
    if map.obstacles.iter().all(|o| o.signed_distance(p) >= r - PENETRATION_TOLERANCE) {
        p
    } else {
        from
    }
}

/// Places `n` robots inside the spawn region on a jittered grid whose
/// spacing is at least `d_spawn`, or uniformly at random when spacing is
/// deliberately violated.
pub fn spawn_robots(map: &StaticMap, n: usize, params: &SimParams, seed: u64) -> Result<Vec<RobotState>> {
    let region = map.spawn_region;
    let (w, h) = (region.width(), region.height());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = params.collision_radius;
    let mut out = Vec::with_capacity(n);
    if n == 0 {
        return Ok(out);
    }
    if params.violate_spawn_spacing {
        for id in 0..n {
            let p = vec2(
                region.min.x + rng.random::<f64>() * w,
                region.min.y + rng.random::<f64>() * h,
            );
            out.push(RobotState::new(id, p, r, params.sense_radius));
        }
        return Ok(out);
    }
    let cols = ((n as f64 * w / h).sqrt().round() as usize).clamp(1, n);
    let rows = n.div_ceil(cols);
    let (cw, ch) = (w / cols as f64, h / rows as f64);
    if cw.min(ch) < params.d_spawn {
        return Err(Error::Config(format!(
            "spawn region cannot hold {n} robots at spacing {}",
            params.d_spawn
        )));
    }
    let jx = ((cw - params.d_spawn) / 2.0).max(0.0);
    let jy = ((ch - params.d_spawn) / 2.0).max(0.0);
    for id in 0..n {
        let (row, col) = (id / cols, id % cols);
        let cx = region.min.x + (col as f64 + 0.5) * cw;
        let cy = region.min.y + (row as f64 + 0.5) * ch;
        let dx = (rng.random::<f64>() * 2.0 - 1.0) * jx;
        let dy = (rng.random::<f64>() * 2.0 - 1.0) * jy;
        out.push(RobotState::new(id, vec2(cx + dx, cy + dy), r, params.sense_radius));
    }
    Ok(out)
}

/// Per-pair overlap counts sampled once per simulated second.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CollisionLedger {
    pub robot_robot: u64,
    pub robot_obstacle: u64,
    pub samples: u64,
    pub pair_counts: BTreeMap<(usize, usize), u64>,
}

/// Adds one sample: every overlapping robot pair and every robot overlapping
/// an obstacle contributes one increment.
pub fn count_collisions(world: &WorldState, mut ledger: CollisionLedger) -> CollisionLedger {
    let robots = &world.robots;
    for i in 0..robots.len() {
        for j in (i + 1)..robots.len() {
            let d = (robots[i].position - robots[j].position).norm();
            if d < robots[i].collision_radius + robots[j].collision_radius {
                ledger.robot_robot += 1;
                *ledger.pair_counts.entry((robots[i].id, robots[j].id)).or_default() += 1;
            }
        }
        let clearance = world.map.obstacle_distance(robots[i].position);
        if clearance < robots[i].collision_radius - PENETRATION_TOLERANCE {
            ledger.robot_obstacle += 1;
        }
    }
    ledger.samples += 1;
    ledger
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::map::{load_map, MapId};

    fn world_with(map: MapId, positions: &[Vec2], v_max: f64) -> WorldState {
        let map = Arc::new(load_map(map, 1.0).unwrap());
        let robots = positions
            .iter()
            .enumerate()
            .map(|(i, &p)| RobotState::new(i, p, 0.1, 3.0))
            .collect();
        WorldState::new(map, robots, v_max, 7)
    }

    #[test]
    fn zero_input_is_a_fixed_point() {
        let mut w = world_with(MapId::EmptyDense, &[vec2(3.0, 3.0), vec2(5.0, 5.0)], 0.5);
        let before: Vec<_> = w.robots.iter().map(|r| r.position).collect();
        w.step(&[Vec2::zeros(), Vec2::zeros()], 0.02).unwrap();
        let after: Vec<_> = w.robots.iter().map(|r| r.position).collect();
        assert_eq!(before, after);
        assert!((w.time - 0.02).abs() < 1e-15);
    }

    #[test]
    fn speed_is_clamped_before_integration() {
        let mut w = world_with(MapId::EmptyDense, &[vec2(5.0, 5.0)], 0.5);
        w.step(&[vec2(1.0, 0.0)], 0.1).unwrap();
        let d = w.robots[0].position - vec2(5.0, 5.0);
        assert!((d - vec2(0.05, 0.0)).norm() < 1e-15);
        assert!((w.robots[0].distance_travelled - 0.05).abs() < 1e-15);
    }

    #[test]
    fn wall_contact_slides_tangentially() {
        // Corridor upper wall face is x = 8; start touching it.
        let mut w = world_with(MapId::Corridor, &[vec2(7.9, 10.0)], 0.5);
        w.step(&[vec2(0.3, 0.2)], 0.1).unwrap();
        let disp = w.robots[0].last_displacement;
        assert!(disp.x.abs() < 1e-12, "normal component {}", disp.x);
        assert!((disp.y - 0.02).abs() < 1e-12);
    }

    #[test]
    fn mismatched_controls_are_a_config_error() {
        let mut w = world_with(MapId::EmptyDense, &[vec2(3.0, 3.0)], 0.5);
        assert!(matches!(w.step(&[], 0.02), Err(Error::Config(_))));
        assert!(w.step(&[Vec2::zeros()], 0.0).is_err());
    }

    #[test]
    fn neighbor_sensing_respects_range_and_order() {
        let w = world_with(MapId::EmptyDense, &[vec2(1.0, 1.0), vec2(101.0, 1.0)], 0.5);
        assert!(w.sense_neighbors(0).is_empty());
        let w = world_with(MapId::EmptyDense, &[vec2(1.0, 1.0), vec2(2.0, 1.0)], 0.5);
        assert_eq!(w.sense_neighbors(0)[0].id, 1);
        assert_eq!(w.sense_neighbors(1)[0].id, 0);
        let w = world_with(
            MapId::EmptyDense,
            &[vec2(1.0, 5.0), vec2(3.0, 5.0), vec2(5.0, 5.0)],
            0.5,
        );
        let ids = |i| w.sense_neighbors(i).iter().map(|n| n.id).collect::<Vec<_>>();
        assert_eq!(ids(1), vec![0, 2]);
        assert_eq!(ids(0), vec![1]);
        assert_eq!(ids(2), vec![1]);
    }

    #[test]
    fn obstacle_sensing() {
        let w = world_with(MapId::EmptyDense, &[vec2(1.0, 1.0)], 0.5);
        assert!(w.sense_obstacles(0).is_empty());

        let mut map = load_map(MapId::EmptyDense, 1.0).unwrap();
        map.obstacles.push(crate::geom::Aabb::new(2.0, 0.0, 3.0, 2.0).to_polygon());
        map.obstacles.push(crate::geom::Aabb::new(0.0, 2.5, 1.5, 3.0).to_polygon());
        let w = WorldState::new(Arc::new(map), vec![RobotState::new(0, vec2(1.0, 1.0), 0.1, 3.0)], 0.5, 0);
        let pts = w.sense_obstacles(0);
        assert_eq!(pts.len(), 2);
        assert_eq!(pts[0].obstacle, 0);
        assert_eq!(pts[0].point, vec2(2.0, 1.0));
        assert!((pts[0].distance - 1.0).abs() < 1e-15);
        assert_eq!(pts[1].obstacle, 1);
    }

    #[test]
    fn collision_sampling() {
        let far = world_with(MapId::EmptyDense, &[vec2(1.0, 1.0), vec2(2.0, 1.0)], 0.5);
        assert_eq!(count_collisions(&far, CollisionLedger::default()).robot_robot, 0);

        let pair = world_with(MapId::EmptyDense, &[vec2(1.0, 1.0), vec2(1.15, 1.0)], 0.5);
        let mut ledger = CollisionLedger::default();
        for _ in 0..5 {
            ledger = count_collisions(&pair, ledger);
        }
        assert_eq!(ledger.robot_robot, 5);
        assert_eq!(ledger.pair_counts[&(0, 1)], 5);

        let triple = world_with(
            MapId::EmptyDense,
            &[vec2(1.0, 1.0), vec2(1.1, 1.0), vec2(1.05, 1.05)],
            0.5,
        );
        assert_eq!(count_collisions(&triple, CollisionLedger::default()).robot_robot, 3);
    }

    #[test]
    fn spawn_respects_spacing_and_region() {
        let map = load_map(MapId::EmptyDense, 1.0).unwrap();
        let params = SimParams::default();
        for n in [1, 4, 8, 16] {
            let robots = spawn_robots(&map, n, &params, 3).unwrap();
            assert_eq!(robots.len(), n);
            for (i, a) in robots.iter().enumerate() {
                assert!(map.spawn_region.contains(a.position));
                for b in &robots[i + 1..] {
                    assert!((a.position - b.position).norm() >= params.d_spawn - 1e-12);
                }
            }
        }
        assert_eq!(
            spawn_robots(&map, 8, &params, 3).unwrap(),
            spawn_robots(&map, 8, &params, 3).unwrap()
        );
    }
}
