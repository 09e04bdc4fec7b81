use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{clamp_norm, Vec2};
use crate::sim::{Neighbor, ObstaclePoint, RobotState};

/// Gains for the potential-field controller.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PfParams {
    /// Attractive gain toward the goal (1/s).
    pub k_att: f64,
    /// Repulsive gain (m^3/s).
    pub k_rep: f64,
    /// Repulsion cutoff distance (m).
    pub d0: f64,
    /// Cohesion spring gain (1/s).
    pub k_coh: f64,
    /// Distance beyond which a sensed neighbor pulls (m).
    pub d_coh: f64,
    /// Norm cap on the summed command (m/s).
    pub u_cap: f64,
}

impl Default for PfParams {
    fn default() -> Self {
        Self {
            k_att: 0.3,
            k_rep: 0.02,
            d0: 0.8,
            k_coh: 0.05,
            d_coh: 2.5,
            u_cap: 0.5,
        }
    }
}

impl PfParams {
    pub fn validate(&self, sense_radius: f64) -> Result<()> {
        let gains = [self.k_att, self.k_rep, self.k_coh, self.u_cap];
        if gains.iter().any(|g| !(*g >= 0.0)) {
            return Err(Error::Config("potential-field gains must be non-negative".into()));
        }
        if !(self.d0 > 0.0 && self.d0 <= sense_radius) {
            return Err(Error::Config("potential-field d0 must lie in (0, sense_radius]".into()));
        }
        if self.d_coh > sense_radius {
            return Err(Error::Config("potential-field d_coh exceeds sense_radius".into()));
        }
        Ok(())
    }
}

fn repulsion(away: Vec2, d: f64, params: &PfParams) -> Result<Vec2> {
    if d == 0.0 {
        return Err(Error::SingularInput);
    }
    if d >= params.d0 {
        return Ok(Vec2::zeros());
    }
    let mag = params.k_rep * (1.0 / d - 1.0 / params.d0) / (d * d);
    Ok(away / d * mag)
}

/// Gradient-following command from sensed inputs only: attraction to the
/// goal, inverse-distance repulsion from anything closer than `d0`, and a
/// soft spring toward neighbors farther than `d_coh`. The sum is capped at
/// `u_cap`.
pub fn pf_control(
    me: &RobotState,
    neighbors: &[Neighbor],
    obstacles: &[ObstaclePoint],
    goal: Vec2,
    params: &PfParams,
) -> Result<Vec2> {
    let mut u = -(me.position - goal) * params.k_att;
    for n in neighbors {
        let d = n.rel_position.norm();
        u += repulsion(-n.rel_position, d, params)?;
        if d > params.d_coh {
            u += n.rel_position / d * (params.k_coh * (d - params.d_coh));
        }
    }
    for o in obstacles {
        let away = me.position - o.point;
        u += repulsion(away, away.norm(), params)?;
    }
    Ok(clamp_norm(u, params.u_cap))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::vec2;

    fn robot(p: Vec2) -> RobotState {
        RobotState::new(0, p, 0.1, 3.0)
    }

    #[test]
    fn zero_at_goal() {
        let u = pf_control(&robot(vec2(4.0, 4.0)), &[], &[], vec2(4.0, 4.0), &PfParams::default()).unwrap();
        assert_eq!(u, Vec2::zeros());
    }

    #[test]
    fn pure_attraction_direction_and_magnitude() {
        let params = PfParams {
            k_att: 0.3,
            u_cap: 0.5,
            ..PfParams::default()
        };
        let u = pf_control(&robot(vec2(0.0, 0.0)), &[], &[], vec2(1.0, 0.0), &params).unwrap();
        assert_eq!(u.y, 0.0);
        assert!((u.x - 0.3_f64.min(0.5)).abs() < 1e-15);
        let params = PfParams { k_att: 2.0, ..params };
        let u = pf_control(&robot(vec2(0.0, 0.0)), &[], &[], vec2(1.0, 0.0), &params).unwrap();
        assert!((u.x - 0.5).abs() < 1e-15);
    }

    #[test]
    fn mirrored_pair_gets_mirrored_commands() {
        let params = PfParams::default();
        let goal = vec2(10.0, 0.0);
        let a = robot(vec2(2.0, 0.4));
        let b = RobotState::new(1, vec2(2.0, -0.4), 0.1, 3.0);
        let na = Neighbor { id: 1, rel_position: b.position - a.position, rel_velocity: Vec2::zeros() };
        let nb = Neighbor { id: 0, rel_position: a.position - b.position, rel_velocity: Vec2::zeros() };
        let ua = pf_control(&a, &[na], &[], goal, &params).unwrap();
        let ub = pf_control(&b, &[nb], &[], goal, &params).unwrap();
        assert_eq!(ua.x, ub.x);
        assert_eq!(ua.y, -ub.y);
    }

    #[test]
    fn coincident_source_is_singular() {
        let n = Neighbor { id: 1, rel_position: Vec2::zeros(), rel_velocity: Vec2::zeros() };
        assert_eq!(
            pf_control(&robot(vec2(1.0, 1.0)), &[n], &[], vec2(5.0, 5.0), &PfParams::default()),
            Err(Error::SingularInput)
        );
    }

    #[test]
    fn repulsion_pushes_away_from_close_neighbor() {
        let params = PfParams { k_att: 0.0, ..PfParams::default() };
        let n = Neighbor { id: 1, rel_position: vec2(0.3, 0.0), rel_velocity: Vec2::zeros() };
        let u = pf_control(&robot(vec2(1.0, 1.0)), &[n], &[], vec2(1.0, 1.0), &params).unwrap();
        assert!(u.x < 0.0 && u.y == 0.0);
    }
}
