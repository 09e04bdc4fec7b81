use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::bench::config::{AlgorithmId, ScenarioConfig, ARTIFACT_VERSION};
use crate::comms::{bandwidth_summary, BandwidthSummary, CommLedger, LogRecord};
use crate::coverage::{CoverageGrid, GdcTeam, IdcTeam, RendezvousEvent};
use crate::dmarrt::{CommitEvent, DmaRrtTeam};
use crate::error::Result;
use crate::geom::Vec2;
use crate::invariants::TaskClass;
use crate::sim::{count_collisions, load_map, spawn_robots, CollisionLedger, RobotState, WorldState};
use crate::swarm::{p_controller, pbc_filter, pf_control};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub config_hash: String,
    pub artifact_version: String,
    pub seed: u64,
    pub algorithm: AlgorithmId,
    pub map: String,
    pub robots: usize,
    pub success: bool,
    pub convergence_time_s: Option<f64>,
    pub total_distance_m: f64,
    pub collisions_rr: u64,
    pub collisions_ro: u64,
    pub coverage_fraction: f64,
    pub bandwidth: BandwidthSummary,
    /// Simulated seconds actually run.
    pub duration_s: f64,
    /// Advisory: some window of `stall_window_s` passed with no robot moving.
    pub stalled: bool,
}

/// Side data recorded during a trial.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Telemetry {
    /// `(time, coverage_error)` at the metric rate, starting at t = 0.
    pub coverage_error: Vec<(f64, f64)>,
    pub rendezvous_events: Vec<RendezvousEvent>,
    pub commits: Vec<CommitEvent>,
    pub comm_log: Vec<LogRecord>,
    pub per_robot_distance: Vec<f64>,
    /// Smallest center distance between any two robots over every physics step.
    pub min_pair_distance: f64,
    pub final_positions: Vec<Vec2>,
    pub collisions: CollisionLedger,
}

enum Team {
    P { k_p: f64 },
    Pf,
    Pbc,
    DmaRrt(Box<DmaRrtTeam>),
    Idc(Box<IdcTeam>),
    Gdc(Box<GdcTeam>),
}

fn min_pair_distance(robots: &[RobotState]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..robots.len() {
        for j in (i + 1)..robots.len() {
            best = best.min((robots[i].position - robots[j].position).norm());
        }
    }
    best
}

pub fn run_trial(cfg: &ScenarioConfig) -> Result<TrialResult> {
    run_trial_with_telemetry(cfg).map(|(r, _)| r)
}

pub fn run_trial_with_telemetry(cfg: &ScenarioConfig) -> Result<(TrialResult, Telemetry)> {
    cfg.validate()?;
    let map = Arc::new(load_map(cfg.map, cfg.scale)?);
    let sim = &cfg.sim;
    let dt = sim.dt;
    let robots = match &cfg.starts {
        Some(starts) => starts
            .iter()
            .enumerate()
            .map(|(i, &p)| RobotState::new(i, p, sim.collision_radius, sim.sense_radius))
            .collect(),
        None => spawn_robots(&map, cfg.robots, sim, cfg.seed)?,
    };
    let mut world = WorldState::new(Arc::clone(&map), robots, sim.v_max, cfg.seed);
    let coverage_params = &cfg.coverage;
    let mut grid = CoverageGrid::for_map(&map, coverage_params);
    let mut bus = CommLedger::new(dt, cfg.comms.latency_ticks);
    let goal = map.goal;

    let mut team = match cfg.algorithm {
        AlgorithmId::P => Team::P { k_p: cfg.params.p.k_p },
        AlgorithmId::Pf => Team::Pf,
        AlgorithmId::Pbc => Team::Pbc,
        AlgorithmId::DmaRrt => Team::DmaRrt(Box::new(DmaRrtTeam::new(&world, cfg.params.dmarrt.clone(), cfg.seed)?)),
        AlgorithmId::Idc => Team::Idc(Box::new(IdcTeam::new(&world, cfg.params.idc.clone(), coverage_params.clone()))),
        AlgorithmId::Gdc | AlgorithmId::IdcWires => {
            Team::Gdc(Box::new(GdcTeam::new(&world, cfg.gdc_params(), coverage_params.clone())?))
        }
    };

    let control_every = ((cfg.control_period / dt).round() as u64).max(1);
    let collision_every = ((1.0 / dt) - 1e-9).ceil().max(1.0) as u64;
    let metric_every = ((1.0 / (cfg.metric_rate_hz * dt)).round() as u64).max(1);
    let max_steps = (cfg.cutoff_s / dt).round() as u64;
    let stall_samples = (cfg.stall_window_s * cfg.metric_rate_hz).round() as usize;

    let task = cfg.task();
    let done = |world: &WorldState, grid: &CoverageGrid| match task {
        TaskClass::Navigation => world.robots.iter().all(|r| goal.contains(r.position)),
        TaskClass::Coverage => grid.is_complete(),
    };

    let mut telemetry = Telemetry {
        min_pair_distance: min_pair_distance(&world.robots),
        ..Telemetry::default()
    };
    telemetry.coverage_error.push((0.0, grid.coverage_error()));
    let mut collisions = CollisionLedger::default();
    let mut history: Vec<Vec<Vec2>> = vec![world.robots.iter().map(|r| r.position).collect()];
    let mut stalled = false;
    let mut controls = vec![Vec2::zeros(); world.robots.len()];
    let mut converged = None;
    let mut tick: u64 = 0;

    while tick < max_steps {
        if tick % control_every == 0 {
            controls = match &mut team {
                Team::P { k_p } => world
                    .robots
                    .iter()
                    .map(|r| p_controller(r.position, goal.center, *k_p, world.v_max))
                    .collect(),
                Team::Pf => (0..world.robots.len())
                    .map(|i| {
                        pf_control(
                            &world.robots[i],
                            &world.sense_neighbors(i),
                            &world.sense_obstacles(i),
                            goal.center,
                            &cfg.params.pf,
                        )
                    })
                    .collect::<Result<Vec<_>>>()?,
                Team::Pbc => (0..world.robots.len())
                    .map(|i| {
                        let r = &world.robots[i];
                        let u = p_controller(r.position, goal.center, cfg.params.pbc.k_p, world.v_max);
                        pbc_filter(u, r, &world.sense_neighbors(i), &world.sense_obstacles(i), &cfg.params.pbc, world.v_max).u
                    })
                    .collect(),
                Team::DmaRrt(t) => t.step(&world, &mut bus, tick)?,
                Team::Idc(t) => t.control(&world, &grid, cfg.control_period),
                Team::Gdc(t) => t.step(&world, &grid, &mut bus, tick, cfg.control_period)?,
            };
        }
        world.step(&controls, dt)?;
        tick += 1;
        let positions: Vec<Vec2> = world.robots.iter().map(|r| r.position).collect();
        grid.accrue(&positions, dt, coverage_params);
        telemetry.min_pair_distance = telemetry.min_pair_distance.min(min_pair_distance(&world.robots));

        if tick % collision_every == 0 {
            collisions = count_collisions(&world, collisions);
        }
        if tick % metric_every == 0 {
            telemetry.coverage_error.push((tick as f64 * dt, grid.coverage_error()));
            history.push(positions);
            if stall_samples > 0 && history.len() > stall_samples {
                let then = &history[history.len() - 1 - stall_samples];
                let now = &history[history.len() - 1];
                if then.iter().zip(now).all(|(a, b)| (a - b).norm() <= 0.05) {
                    stalled = true;
                }
            }
        }
        if done(&world, &grid) {
            converged = Some(tick as f64 * dt);
            break;
        }
    }

    let duration = tick as f64 * dt;
    let bandwidth = bandwidth_summary(&bus, duration);
    telemetry.per_robot_distance = world.robots.iter().map(|r| r.distance_travelled).collect();
    telemetry.final_positions = world.robots.iter().map(|r| r.position).collect();
    telemetry.comm_log = bus.log().to_vec();
    telemetry.collisions = collisions.clone();
    match team {
        Team::Gdc(t) => telemetry.rendezvous_events = t.events,
        Team::DmaRrt(t) => telemetry.commits = t.commits,
        _ => {}
    }

    let result = TrialResult {
        config_hash: cfg.config_hash(),
        artifact_version: ARTIFACT_VERSION.to_string(),
        seed: cfg.seed,
        algorithm: cfg.algorithm,
        map: cfg.map.as_str().to_string(),
        robots: world.robots.len(),
        success: converged.is_some(),
        convergence_time_s: converged,
        total_distance_m: world.total_distance(),
        collisions_rr: collisions.robot_robot,
        collisions_ro: collisions.robot_obstacle,
        coverage_fraction: grid.coverage_fraction(),
        bandwidth,
        duration_s: duration,
        stalled,
    };
    Ok((result, telemetry))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::vec2;
    use crate::sim::MapId;

    #[test]
    fn zero_cutoff_fails_immediately() {
        let mut cfg = ScenarioConfig::new(MapId::EmptySpread, AlgorithmId::Pbc, 4, 1).unwrap();
        cfg.cutoff_s = 0.0;
        let r = run_trial(&cfg).unwrap();
        assert!(!r.success);
        assert_eq!(r.convergence_time_s, None);
        assert_eq!(r.duration_s, 0.0);
    }

    #[test]
    fn single_p_robot_reaches_the_goal_band() {
        let mut cfg = ScenarioConfig::new(MapId::EmptySpread, AlgorithmId::P, 1, 1).unwrap();
        let map = load_map(MapId::EmptySpread, 1.0).unwrap();
        cfg.starts = Some(vec![map.goal.center - vec2(5.0, 0.0)]);
        let r = run_trial(&cfg).unwrap();
        let t = r.convergence_time_s.unwrap();
        assert!((t - 4.0).abs() <= cfg.control_period + 1e-9, "t = {t}");
    }
}
