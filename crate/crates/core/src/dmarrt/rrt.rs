//! Time-aware RRT: other agents' broadcast plans are moving obstacles.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dmarrt::plan::{Plan, Waypoint};
use crate::error::{Error, Result};
use crate::geom::{vec2, Vec2};
use crate::sim::{GoalDisk, StaticMap};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DmaRrtParams {
    pub goal_bias: f64,
    /// Maximum tree edge length (m).
    pub step: f64,
    pub max_iterations: usize,
    /// Extra clearance on top of the collision radius (m).
    pub margin: f64,
    /// Time step for checks against other agents' plans (s).
    pub sample_dt: f64,
    pub n_max_waypoints: usize,
    /// Added to the cost of a plan that stops short of the goal (s).
    pub partial_penalty: f64,
    /// Plans must end this far inside the goal disk (m).
    pub goal_inset: f64,
    pub capture_radius: f64,
    /// Waypoint tracking gain (1/s).
    pub k_p: f64,
    /// Agents with a committed plan regrow a candidate every this many rounds.
    pub regrow_every: u64,
    /// Merit a bid must exceed to commit (s).
    pub min_merit: f64,
}

impl Default for DmaRrtParams {
    fn default() -> Self {
        Self {
            goal_bias: 0.1,
            step: 1.0,
            max_iterations: 2000,
            margin: 0.1,
            sample_dt: 0.1,
            n_max_waypoints: 64,
            partial_penalty: 10.0,
            goal_inset: 0.5,
            capture_radius: 0.2,
            k_p: 5.0,
            regrow_every: 10,
            min_merit: 0.5,
        }
    }
}

impl DmaRrtParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.goal_bias) {
            return Err(Error::Config("goal_bias must lie in [0, 1]".into()));
        }
        if !(self.step > 0.0 && self.sample_dt > 0.0) || self.max_iterations == 0 || self.n_max_waypoints < 2 {
            return Err(Error::Config("invalid RRT step, sampling or waypoint cap".into()));
        }
        if self.regrow_every == 0 {
            return Err(Error::Config("regrow_every must be at least 1".into()));
        }
        Ok(())
    }
}

/// Inputs shared by every check of one growth call.
pub struct PlanningContext<'a> {
    pub map: &'a StaticMap,
    pub others: &'a [&'a Plan],
    pub collision_radius: f64,
    pub v_max: f64,
    pub params: &'a DmaRrtParams,
}

impl PlanningContext<'_> {
    /// Required separation, padded by the distance two robots can close
    /// between samples so the bound also holds in continuous time.
    fn separation(&self) -> f64 {
        2.0 * self.collision_radius + self.params.margin + self.v_max * self.params.sample_dt
    }

    fn static_radius(&self) -> f64 {
        self.collision_radius + self.params.margin
    }

    /// Motion from `a` (at `t_a`) to `b` at `v_max` keeps clear of every
    /// scheduled trajectory. The sample at `t_a` itself is skipped since it
    /// belongs to the previous edge.
    fn edge_dynamic_ok(&self, a: Vec2, t_a: f64, b: Vec2) -> bool {
        let len = (b - a).norm();
        let t_b = t_a + len / self.v_max;
        let sep = self.separation();
        let mut t = t_a + self.params.sample_dt;
        loop {
            let t_eval = t.min(t_b);
            let p = if t_b > t_a { a + (b - a) * ((t_eval - t_a) / (t_b - t_a)) } else { b };
            if self.others.iter().any(|o| (o.position_at(t_eval) - p).norm() < sep) {
                return false;
            }
            if t >= t_b {
                return true;
            }
            t += self.params.sample_dt;
        }
    }

    /// Parking at `q` from `t_q` onward stays clear of every trajectory.
    fn parking_ok(&self, q: Vec2, t_q: f64) -> bool {
        let sep = self.separation();
        self.others.iter().all(|o| {
            let mut t = t_q;
            let until = o.end_time().max(t_q);
            loop {
                if (o.position_at(t.min(until)) - q).norm() < sep {
                    return false;
                }
                if t >= until {
                    return true;
                }
                t += self.params.sample_dt;
            }
        })
    }

    fn edge_ok(&self, a: Vec2, t_a: f64, b: Vec2, static_radius: f64) -> bool {
        self.map.segment_clear(a, b, static_radius) && self.edge_dynamic_ok(a, t_a, b)
    }
}

struct Node {
    position: Vec2,
    time: f64,
    parent: usize,
}

fn goal_heuristic(p: Vec2, center: Vec2, radius: f64, v_max: f64) -> f64 {
    ((p - center).norm() - radius).max(0.0) / v_max
}

/// Grows a plan from `start` at time `now` into the disk `goal` shrunk by
/// `goal_inset`. Gives up after `max_iterations` samples and then returns the
/// best reachable partial plan, priced at its duration plus the straight-line
/// remainder plus `partial_penalty`.
pub fn grow_rrt(
    start: Vec2,
    now: f64,
    goal: &GoalDisk,
    ctx: &PlanningContext<'_>,
    rng: &mut ChaCha8Rng,
) -> Result<Plan> {
    let map = ctx.map;
    let params = ctx.params;
    if map.in_obstacle(start) {
        return Err(Error::Input(format!("start ({}, {}) lies inside an obstacle", start.x, start.y)));
    }
    let target_r = (goal.radius - params.goal_inset).max(0.0);
    let in_goal = |p: Vec2| (p - goal.center).norm() <= target_r;
    if in_goal(start) && ctx.parking_ok(start, now) {
        return Ok(Plan::from_positions(&[start], now, ctx.v_max, 0.0));
    }

    // A robot pressed against a wall may sit closer than the usual margin.
    let boundary = start
        .x
        .min(start.y)
        .min(map.width - start.x)
        .min(map.height - start.y);
    let root_clearance = map.obstacle_distance(start).min(boundary);
    let root_radius = ctx.static_radius().min(root_clearance - 1e-9).max(0.0);

    let r = ctx.collision_radius;
    let mut nodes = vec![Node { position: start, time: now, parent: usize::MAX }];
    let mut reached = None;
    for _ in 0..params.max_iterations {
        let sample = if rng.random::<f64>() < params.goal_bias {
            let ang = rng.random::<f64>() * std::f64::consts::TAU;
            let rad = target_r * rng.random::<f64>().sqrt();
            goal.center + vec2(ang.cos(), ang.sin()) * rad
        } else {
            vec2(
                rng.random_range(r..map.width - r),
                rng.random_range(r..map.height - r),
            )
        };
        let (near_idx, _) = nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (i, (n.position - sample).norm_squared()))
            .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
        let near = &nodes[near_idx];
        let dir = sample - near.position;
        let dist = dir.norm();
        if dist < 1e-9 {
            continue;
        }
        let next = if dist > params.step { near.position + dir * (params.step / dist) } else { sample };
        let radius = if near_idx == 0 { root_radius } else { ctx.static_radius() };
        if !ctx.edge_ok(near.position, near.time, next, radius) {
            continue;
        }
        let time = near.time + (next - near.position).norm() / ctx.v_max;
        nodes.push(Node { position: next, time, parent: near_idx });
        if in_goal(next) && ctx.parking_ok(next, time) {
            reached = Some(nodes.len() - 1);
            break;
        }
    }

    let (end, complete) = match reached {
        Some(i) => (i, true),
        None => {
            let best = (0..nodes.len())
                .filter(|&i| i == 0 || ctx.parking_ok(nodes[i].position, nodes[i].time))
                .min_by(|&a, &b| {
                    let ha = goal_heuristic(nodes[a].position, goal.center, target_r, ctx.v_max);
                    let hb = goal_heuristic(nodes[b].position, goal.center, target_r, ctx.v_max);
                    ha.total_cmp(&hb).then(a.cmp(&b))
                })
                .unwrap_or(0);
            (best, false)
        }
    };
    let mut path = Vec::new();
    let mut k = end;
    while k != usize::MAX {
        path.push(nodes[k].position);
        k = nodes[k].parent;
    }
    path.reverse();
    let path = shortcut(&path, now, ctx, root_radius);

    let mut complete = complete;
    let mut path = path;
    if path.len() > params.n_max_waypoints {
        path.truncate(params.n_max_waypoints);
        complete = false;
    }
    let tail = if complete {
        0.0
    } else {
        goal_heuristic(*path.last().unwrap(), goal.center, target_r, ctx.v_max) + params.partial_penalty
    };
    Ok(Plan::from_positions(&path, now, ctx.v_max, tail))
}

/// Greedy shortcutting with retiming. Falls back to the input path when a
/// retimed segment no longer clears the moving obstacles.
fn shortcut(path: &[Vec2], now: f64, ctx: &PlanningContext<'_>, root_radius: f64) -> Vec<Vec2> {
    if path.len() <= 2 {
        return path.to_vec();
    }
    let mut out = vec![path[0]];
    let mut t = now;
    let mut i = 0;
    while i + 1 < path.len() {
        let radius = |from: usize| if from == 0 { root_radius } else { ctx.static_radius() };
        let mut chosen = None;
        for j in (i + 1..path.len()).rev() {
            if ctx.edge_ok(path[i], t, path[j], radius(i)) {
                chosen = Some(j);
                break;
            }
        }
        let Some(j) = chosen else {
            return path.to_vec();
        };
        t += (path[j] - path[i]).norm() / ctx.v_max;
        out.push(path[j]);
        i = j;
    }
    if !ctx.parking_ok(*out.last().unwrap(), t) {
        return path.to_vec();
    }
    out
}

/// Smallest separation between `plan` and any of `others` over the plan's
/// duration and every other plan's remaining schedule.
pub fn audit_separation(plan: &Plan, others: &[&Plan], step: f64) -> f64 {
    let from = plan.start_time();
    others
        .iter()
        .map(|o| {
            let until = plan.end_time().max(o.end_time());
            crate::dmarrt::plan::min_separation(plan, o, from, until, step)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Checks the structural invariants of a plan: strictly increasing times and
/// segments driven no faster than `v_max`.
pub fn plan_is_well_formed(plan: &Plan, v_max: f64) -> bool {
    plan.waypoints.windows(2).all(|w: &[Waypoint]| {
        let dt = w[1].time - w[0].time;
        dt > 0.0 && (w[1].position - w[0].position).norm() <= v_max * dt * (1.0 + 1e-9)
    })
}
