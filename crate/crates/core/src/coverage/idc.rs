//! Individual dynamic coverage: each robot descends its own footprint's share
//! of the coverage error and escapes local minima on a private timer.

use serde::{Deserialize, Serialize};

use crate::coverage::grid::{footprint, CoverageGrid, CoverageParams};
use crate::coverage::path::{Transit, TransitPlanner};
use crate::error::{Error, Result};
use crate::geom::{clamp_norm, Vec2};
use crate::sim::WorldState;
use crate::swarm::{pbc_filter, PbcParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IdcParams {
    /// Gradient gain.
    pub k_c: f64,
    /// Speed below which a robot counts as slow (m/s).
    pub v_slow: f64,
    /// Seconds of continuous slowness before a robot perturbs itself.
    pub t_stuck: f64,
    /// Gain of the proportional controller used while in transit (1/s).
    pub transit_k_p: f64,
    /// Distance at which a transit waypoint counts as reached (m).
    pub capture_radius: f64,
    pub pbc: PbcParams,
}

impl Default for IdcParams {
    fn default() -> Self {
        Self {
            k_c: 1.0,
            v_slow: 0.02,
            t_stuck: 5.0,
            transit_k_p: 2.0,
            capture_radius: 0.2,
            pbc: PbcParams::default(),
        }
    }
}

/// Rate at which the coverage error would change with one robot at `p` and no cap:
/// `-Σ (C* - C(q)) s(|q - p|) · cell_area` over cells within `r_cov`.
pub fn coverage_error_rate(grid: &CoverageGrid, p: Vec2, cov: &CoverageParams) -> f64 {
    let area = grid.cell_area();
    -grid
        .cells_within(p, cov.r_cov)
        .filter(|&i| !grid.blocked[i])
        .map(|i| (grid.c_star - grid.levels[i]) * footprint((grid.center(i) - p).norm(), cov.r_cov, cov.peak_rate))
        .sum::<f64>()
        * area
}

/// Negative gradient of [`coverage_error_rate`] with respect to `p`.
pub fn idc_gradient(grid: &CoverageGrid, p: Vec2, cov: &CoverageParams) -> Vec2 {
    let r2 = cov.r_cov * cov.r_cov;
    let k = 4.0 * cov.peak_rate / r2 * grid.cell_area();
    let mut g = Vec2::zeros();
    for i in grid.cells_within(p, cov.r_cov) {
        if grid.blocked[i] {
            continue;
        }
        let deficit = grid.c_star - grid.levels[i];
        if deficit == 0.0 {
            continue;
        }
        let dq = grid.center(i) - p;
        g += dq * (deficit * k * (1.0 - dq.norm_squared() / r2));
    }
    g
}

/// Gradient command `k_c · (-∇ rate)` clamped to `v_max`.
pub fn idc_control(grid: &CoverageGrid, p: Vec2, cov: &CoverageParams, k_c: f64, v_max: f64) -> Vec2 {
    clamp_norm(idc_gradient(grid, p, cov) * k_c, v_max)
}

/// Center of the free cell closest to `p` with `C < c_done · C*`; ties go to the
/// lowest row-major index.
pub fn nearest_uncovered(grid: &CoverageGrid, p: Vec2) -> Option<(usize, Vec2)> {
    let mut best: Option<(f64, usize)> = None;
    for i in 0..grid.levels.len() {
        if grid.blocked[i] || grid.is_covered(i) {
            continue;
        }
        let d = (grid.center(i) - p).norm_squared();
        if best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, i));
        }
    }
    best.map(|(_, i)| (i, grid.center(i)))
}

/// Consecutive time spent below a speed threshold.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SlowTimer {
    pub elapsed: f64,
}

impl SlowTimer {
    pub fn update(&mut self, speed: f64, dt: f64, v_slow: f64) {
        if speed < v_slow {
            self.elapsed += dt;
        } else {
            self.elapsed = 0.0;
        }
    }

    pub fn reset(&mut self) {
        self.elapsed = 0.0;
    }
}

/// Returns a new waypoint once `timer` has reached `t_stuck`, resetting it.
pub fn idc_perturb(grid: &CoverageGrid, p: Vec2, timer: &mut SlowTimer, t_stuck: f64) -> Result<Option<Vec2>> {
    if timer.elapsed < t_stuck {
        return Ok(None);
    }
    timer.reset();
    nearest_uncovered(grid, p)
        .map(|(_, c)| Some(c))
        .ok_or(Error::MissionComplete)
}

#[derive(Debug, Clone, PartialEq)]
pub enum IdcMode {
    Gradient,
    Transit(Transit),
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdcAgent {
    pub mode: IdcMode,
    pub timer: SlowTimer,
    pub last_position: Vec2,
    pub perturbations: u32,
}

/// Per-robot IDC state for a whole team. Agents never read each other's
/// state; neighbors enter only through the barrier filter's sensing.
#[derive(Debug, Clone)]
pub struct IdcTeam {
    pub agents: Vec<IdcAgent>,
    pub params: IdcParams,
    pub coverage: CoverageParams,
    planner: TransitPlanner,
}

impl IdcTeam {
    pub fn new(world: &WorldState, params: IdcParams, coverage: CoverageParams) -> Self {
        // keep transit paths outside the barrier's obstacle margin
        let clearance = world.robots.first().map_or(0.1, |r| r.collision_radius).max(params.pbc.ds) + 0.05;
        let planner = TransitPlanner::new(&world.map, coverage.resolution, clearance);
        let agents = world
            .robots
            .iter()
            .map(|r| IdcAgent {
                mode: IdcMode::Gradient,
                timer: SlowTimer::default(),
                last_position: r.position,
                perturbations: 0,
            })
            .collect();
        Self { agents, params, coverage, planner }
    }

    /// One control update of period `period`.
    pub fn control(&mut self, world: &WorldState, grid: &CoverageGrid, period: f64) -> Vec<Vec2> {
        let mut out = Vec::with_capacity(world.robots.len());
        for (i, robot) in world.robots.iter().enumerate() {
            let agent = &mut self.agents[i];
            let speed = (robot.position - agent.last_position).norm() / period;
            agent.last_position = robot.position;
            agent.timer.update(speed, period, self.params.v_slow);

            let mut u_des = None;
            if let IdcMode::Transit(t) = &mut agent.mode {
                if agent.timer.elapsed >= self.params.t_stuck {
                    agent.timer.reset();
                    agent.mode = IdcMode::Gradient;
                } else {
                    match t.command(robot.position, self.params.transit_k_p, world.v_max, self.params.capture_radius) {
                        Some(u) => u_des = Some(u),
                        None => agent.mode = IdcMode::Gradient,
                    }
                }
            }
            if u_des.is_none() {
                if let Ok(Some(target)) = idc_perturb(grid, robot.position, &mut agent.timer, self.params.t_stuck) {
                    if let Some(mut t) = self.planner.plan(robot.position, target) {
                        agent.perturbations += 1;
                        u_des = t.command(robot.position, self.params.transit_k_p, world.v_max, self.params.capture_radius);
                        agent.mode = IdcMode::Transit(t);
                    }
                }
            }
            let u_des = u_des.unwrap_or_else(|| idc_control(grid, robot.position, &self.coverage, self.params.k_c, world.v_max));
            let neighbors = world.sense_neighbors(i);
            let obstacles = world.sense_obstacles(i);
            out.push(pbc_filter(u_des, robot, &neighbors, &obstacles, &self.params.pbc, world.v_max).u);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::vec2;

    fn grid(w: f64, h: f64) -> (CoverageGrid, CoverageParams) {
        let cov = CoverageParams::default();
        (CoverageGrid::new(w, h, &cov), cov)
    }

    #[test]
    fn saturated_neighborhood_gives_zero() {
        let (mut g, cov) = grid(10.0, 10.0);
        for i in 0..g.levels.len() {
            g.set_level(i, 1.0);
        }
        assert_eq!(idc_control(&g, vec2(5.0, 5.0), &cov, 1.0, 0.5), Vec2::zeros());
    }

    #[test]
    fn uncovered_half_plane_pulls_along_it() {
        let (mut g, cov) = grid(10.0, 10.0);
        for i in 0..g.levels.len() {
            if g.center(i).x < 5.0 {
                g.set_level(i, 1.0);
            }
        }
        let u = idc_control(&g, vec2(5.0, 5.0), &cov, 1.0, 0.5);
        assert!(u.x > 0.0);
        assert!(u.y.abs() < 1e-12);
    }

    #[test]
    fn nearest_uncovered_example() {
        let (mut g, _) = grid(20.0, 20.0);
        for i in 0..g.levels.len() {
            g.set_level(i, 1.0);
        }
        let target = g.index_of(vec2(7.125, 5.125)).unwrap();
        let far = g.index_of(vec2(12.0, 12.0)).unwrap();
        g.set_level(target, 0.0);
        g.set_level(far, 0.0);
        let mut timer = SlowTimer { elapsed: 5.0 };
        let wp = idc_perturb(&g, vec2(5.0, 5.0), &mut timer, 5.0).unwrap();
        assert_eq!(wp, Some(vec2(7.125, 5.125)));
        assert_eq!(timer.elapsed, 0.0);
    }

    #[test]
    fn tie_goes_to_lower_index() {
        let (mut g, _) = grid(4.0, 4.0);
        for i in 0..g.levels.len() {
            g.set_level(i, 1.0);
        }
        let below = g.index_of(vec2(2.125, 1.125)).unwrap();
        let above = g.index_of(vec2(2.125, 3.125)).unwrap();
        g.set_level(below, 0.0);
        g.set_level(above, 0.0);
        assert_eq!(nearest_uncovered(&g, vec2(2.125, 2.125)).unwrap().0, below);
    }

    #[test]
    fn not_stuck_means_no_waypoint() {
        let (g, _) = grid(4.0, 4.0);
        let mut timer = SlowTimer::default();
        timer.update(0.3, 0.1, 0.02);
        assert_eq!(idc_perturb(&g, vec2(1.0, 1.0), &mut timer, 5.0), Ok(None));
    }

    #[test]
    fn fully_covered_signals_completion() {
        let (mut g, _) = grid(2.0, 2.0);
        for i in 0..g.levels.len() {
            g.set_level(i, 1.0);
        }
        let mut timer = SlowTimer { elapsed: 6.0 };
        assert_eq!(idc_perturb(&g, vec2(1.0, 1.0), &mut timer, 5.0), Err(Error::MissionComplete));
    }

    #[test]
    fn toy_grid_matches_finite_difference() {
        let cov = CoverageParams { resolution: 1.0, r_cov: 2.0, ..CoverageParams::default() };
        let mut g = CoverageGrid::new(3.0, 3.0, &cov);
        for (i, v) in [0.1, 0.9, 0.3, 0.0, 0.5, 1.0, 0.7, 0.2, 0.4].into_iter().enumerate() {
            g.set_level(i, v);
        }
        let p = vec2(1.3, 1.6);
        let h = 1e-4;
        let fd = |e: Vec2| {
            (coverage_error_rate(&g, p + e * h, &cov) - coverage_error_rate(&g, p - e * h, &cov)) / (2.0 * h)
        };
        let grad = vec2(fd(vec2(1.0, 0.0)), fd(vec2(0.0, 1.0)));
        let u = idc_gradient(&g, p, &cov);
        assert!((u + grad).norm() <= 1e-4 * grad.norm());
    }
}
