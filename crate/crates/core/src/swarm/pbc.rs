//! Proportional goal seeking with a barrier-certificate safety filter.
//!
//! Safe set per sensed entity: `h = |Δp|^2 - Ds^2 >= 0`, with `Δp` pointing
//! from the entity to this robot. The filter keeps `dh/dt >= -γ h^3`; for
//! robot pairs each side takes half of that budget since neither knows the
//! other's command.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{clamp_norm, Vec2};
use crate::sim::{Neighbor, ObstaclePoint, RobotState};
use crate::swarm::qp::{max_min_slack, qp_solve_2d, HalfPlane, QpSolution};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PbcParams {
    /// Proportional gain (1/s).
    pub k_p: f64,
    /// Safety distance between centers (m).
    pub ds: f64,
    /// Class-K gain on `h^3` (1/(m^4 s)).
    pub gamma: f64,
}

impl Default for PbcParams {
    fn default() -> Self {
        Self {
            k_p: 1.0,
            ds: 0.4,
            gamma: 100.0,
        }
    }
}

impl PbcParams {
    pub fn validate(&self, collision_radius: f64) -> Result<()> {
        if self.ds < 2.0 * collision_radius {
            return Err(Error::Config("barrier Ds must be at least twice the collision radius".into()));
        }
        if !(self.gamma > 0.0 && self.k_p > 0.0) {
            return Err(Error::Config("barrier gamma and k_p must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterOutput {
    pub u: Vec2,
    /// Set when the constraints had no common point and a best-effort command was used.
    pub infeasible: bool,
}

/// `u = -k_p (p - goal)`, clamped to `v_max`.
pub fn p_controller(position: Vec2, goal: Vec2, k_p: f64, v_max: f64) -> Vec2 {
    clamp_norm((goal - position) * k_p, v_max)
}

pub fn barrier_constraints(
    me: &RobotState,
    neighbors: &[Neighbor],
    obstacles: &[ObstaclePoint],
    params: &PbcParams,
) -> Vec<HalfPlane> {
    let ds2 = params.ds * params.ds;
    let mut out = Vec::with_capacity(neighbors.len() + obstacles.len());
    for n in neighbors {
        let dp = -n.rel_position;
        let h = dp.norm_squared() - ds2;
        out.push(HalfPlane::new(dp * -2.0, 0.5 * params.gamma * h * h * h));
    }
    for o in obstacles {
        let dp = me.position - o.point;
        let h = dp.norm_squared() - ds2;
        out.push(HalfPlane::new(dp * -2.0, params.gamma * h * h * h));
    }
    out
}

/// Closest command to `u_des` satisfying every barrier constraint, clamped to `v_max`.
pub fn pbc_filter(
    u_des: Vec2,
    me: &RobotState,
    neighbors: &[Neighbor],
    obstacles: &[ObstaclePoint],
    params: &PbcParams,
    v_max: f64,
) -> FilterOutput {
    let constraints = barrier_constraints(me, neighbors, obstacles, params);
    match qp_solve_2d(u_des, &constraints) {
        QpSolution::Optimal(u) => FilterOutput {
            u: clamp_norm(u, v_max),
            infeasible: false,
        },
        QpSolution::Infeasible => FilterOutput {
            u: max_min_slack(&constraints, v_max),
            infeasible: true,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::vec2;

    fn robot(p: Vec2) -> RobotState {
        RobotState::new(0, p, 0.1, 3.0)
    }

    #[test]
    fn unconstrained_passes_through() {
        let out = pbc_filter(vec2(0.3, 0.1), &robot(vec2(1.0, 1.0)), &[], &[], &PbcParams::default(), 0.5);
        assert_eq!(out.u, vec2(0.3, 0.1));
        assert!(!out.infeasible);
    }

    #[test]
    fn distant_neighbor_is_inactive() {
        let n = Neighbor { id: 1, rel_position: vec2(2.5, 0.0), rel_velocity: Vec2::zeros() };
        let out = pbc_filter(vec2(0.4, 0.0), &robot(vec2(1.0, 1.0)), &[n], &[], &PbcParams::default(), 0.5);
        assert_eq!(out.u, vec2(0.4, 0.0));
    }

    #[test]
    fn head_on_matches_closed_form_projection() {
        // Δp = (2, 0): the neighbor sits 2 m in -x.
        let params = PbcParams { k_p: 1.0, ds: 1.0, gamma: 1.0 };
        let n = Neighbor { id: 1, rel_position: vec2(-2.0, 0.0), rel_velocity: Vec2::zeros() };
        let u_des = vec2(-5.0, 0.0);
        let out = pbc_filter(u_des, &robot(vec2(0.0, 0.0)), &[n], &[], &params, f64::INFINITY);
        let a = vec2(-4.0, 0.0);
        let b = 0.5 * (4.0_f64 - 1.0).powi(3);
        let expected = u_des - a * ((a.dot(&u_des) - b) / a.norm_squared());
        assert!((out.u - expected).norm() < 1e-12);
        assert!((out.u.x - (-3.375)).abs() < 1e-12);
    }

    #[test]
    fn proportional_controller() {
        assert_eq!(p_controller(vec2(1.0, 1.0), vec2(1.0, 1.0), 1.0, 0.5), Vec2::zeros());
        let u = p_controller(vec2(0.0, 0.0), vec2(3.0, 4.0), 1.0, 0.5);
        assert!((u - vec2(0.3, 0.4)).norm() < 1e-15);
        let u = p_controller(vec2(0.0, 0.0), vec2(0.0, 7.0), 1.0, 0.5);
        assert_eq!(u.x, 0.0);
    }

    #[test]
    fn params_validation() {
        assert!(PbcParams { ds: 0.1, ..PbcParams::default() }.validate(0.1).is_err());
        assert!(PbcParams::default().validate(0.1).is_ok());
    }
}
