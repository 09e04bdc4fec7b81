use serde::{Deserialize, Serialize};

use crate::geom::Vec2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub position: Vec2,
    /// Absolute simulation time of arrival (s).
    pub time: f64,
}

/// Piecewise-linear trajectory. The owner parks at the last waypoint after
/// its arrival time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub waypoints: Vec<Waypoint>,
    /// Estimated time still needed past the last waypoint; 0 for plans that
    /// end in the goal region, infinite for placeholders.
    pub tail_cost: f64,
}

impl Plan {
    /// Constant-speed timing from `start_time`. Receivers rebuild broadcast
    /// plans with this same function, so positions and the send time fully
    /// determine the trajectory.
    pub fn from_positions(positions: &[Vec2], start_time: f64, speed: f64, tail_cost: f64) -> Self {
        let mut t = start_time;
        let mut waypoints = Vec::with_capacity(positions.len());
        for (i, &p) in positions.iter().enumerate() {
            if i > 0 {
                t += (p - positions[i - 1]).norm() / speed;
            }
            waypoints.push(Waypoint { position: p, time: t });
        }
        Self { waypoints, tail_cost }
    }

    /// A plan that stays at `position`; it is never preferable to a real plan.
    pub fn placeholder(position: Vec2, time: f64) -> Self {
        Self {
            waypoints: vec![Waypoint { position, time }],
            tail_cost: f64::INFINITY,
        }
    }

    pub fn positions(&self) -> Vec<Vec2> {
        self.waypoints.iter().map(|w| w.position).collect()
    }

    pub fn start_time(&self) -> f64 {
        self.waypoints.first().map_or(0.0, |w| w.time)
    }

    pub fn end_time(&self) -> f64 {
        self.waypoints.last().map_or(0.0, |w| w.time)
    }

    pub fn end_position(&self) -> Vec2 {
        self.waypoints.last().map_or(Vec2::zeros(), |w| w.position)
    }

    /// Duration plus tail estimate, counted from the plan start.
    pub fn cost(&self) -> f64 {
        self.end_time() - self.start_time() + self.tail_cost
    }

    /// Time still needed at `now` to finish the mission along this plan.
    pub fn remaining_cost(&self, now: f64) -> f64 {
        (self.end_time() - now).max(0.0) + self.tail_cost
    }

    pub fn is_complete(&self) -> bool {
        self.tail_cost == 0.0
    }

    /// Scheduled position at absolute time `t`.
    pub fn position_at(&self, t: f64) -> Vec2 {
        let w = &self.waypoints;
        match w.len() {
            0 => Vec2::zeros(),
            _ if t <= w[0].time => w[0].position,
            _ if t >= w[w.len() - 1].time => w[w.len() - 1].position,
            _ => {
                let k = w.partition_point(|x| x.time <= t);
                let (a, b) = (&w[k - 1], &w[k]);
                let span = b.time - a.time;
                if span <= 0.0 {
                    return b.position;
                }
                a.position + (b.position - a.position) * ((t - a.time) / span)
            }
        }
    }
}

/// Smallest distance between two scheduled trajectories over `[from, until]`,
/// sampled every `step` seconds plus both endpoints.
pub fn min_separation(a: &Plan, b: &Plan, from: f64, until: f64, step: f64) -> f64 {
    let mut best = f64::INFINITY;
    let mut t = from;
    loop {
        let t_eval = t.min(until);
        best = best.min((a.position_at(t_eval) - b.position_at(t_eval)).norm());
        if t >= until {
            break;
        }
        t += step;
    }
    best
}
