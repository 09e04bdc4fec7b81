//! Exact 2D projection onto a polyhedron by active-set enumeration.

use serde::{Deserialize, Serialize};

use crate::geom::Vec2;

/// Half-plane `a·u <= b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalfPlane {
    pub a: Vec2,
    pub b: f64,
}

impl HalfPlane {
    pub fn new(a: Vec2, b: f64) -> Self {
        Self { a, b }
    }

    /// `b - a·u`; non-negative when satisfied.
    pub fn slack(&self, u: Vec2) -> f64 {
        self.b - self.a.dot(&u)
    }

    fn tolerance(&self, u: Vec2) -> f64 {
        1e-12 * (1.0 + self.b.abs() + self.a.norm() * u.norm())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QpSolution {
    Optimal(Vec2),
    Infeasible,
}

impl QpSolution {
    pub fn optimal(self) -> Option<Vec2> {
        match self {
            QpSolution::Optimal(u) => Some(u),
            QpSolution::Infeasible => None,
        }
    }
}

fn feasible(constraints: &[HalfPlane], u: Vec2) -> bool {
    constraints.iter().all(|c| c.slack(u) >= -c.tolerance(u))
}

/// Minimizes `|u - u_des|^2` subject to every half-plane.
///
/// In two dimensions the minimizer has at most two active constraints, so
/// enumerating the empty set, every single constraint and every pair is
/// exact. The feasible candidate with the smallest objective wins; ties go
/// to the earliest candidate in enumeration order.
pub fn qp_solve_2d(u_des: Vec2, constraints: &[HalfPlane]) -> QpSolution {
    if feasible(constraints, u_des) {
        return QpSolution::Optimal(u_des);
    }
    let mut best: Option<(f64, Vec2)> = None;
    let mut consider = |u: Vec2| {
        if u.iter().all(|c| c.is_finite()) && feasible(constraints, u) {
            let obj = (u - u_des).norm_squared();
            if best.is_none_or(|(b, _)| obj < b) {
                best = Some((obj, u));
            }
        }
    };
    for c in constraints {
        let n2 = c.a.norm_squared();
        if n2 == 0.0 {
            continue;
        }
        let viol = c.a.dot(&u_des) - c.b;
        if viol > 0.0 {
            consider(u_des - c.a * (viol / n2));
        }
    }
    for (i, ci) in constraints.iter().enumerate() {
        for cj in &constraints[i + 1..] {
            let det = ci.a.x * cj.a.y - ci.a.y * cj.a.x;
            let scale = ci.a.norm() * cj.a.norm();
            if scale == 0.0 || det.abs() <= 1e-12 * scale {
                continue;
            }
            let x = (ci.b * cj.a.y - ci.a.y * cj.b) / det;
            let y = (ci.a.x * cj.b - ci.b * cj.a.x) / det;
            consider(Vec2::new(x, y));
        }
    }
    match best {
        Some((_, u)) => QpSolution::Optimal(u),
        None => QpSolution::Infeasible,
    }
}

/// Point in the disk `|u| <= radius` maximizing the smallest normalized
/// slack `(b - a·u) / |a|`. Used when the constraint set is empty.
pub fn max_min_slack(constraints: &[HalfPlane], radius: f64) -> Vec2 {
    let cs: Vec<HalfPlane> = constraints
        .iter()
        .filter_map(|c| {
            let n = c.a.norm();
            (n > 0.0).then(|| HalfPlane::new(c.a / n, c.b / n))
        })
        .collect();
    if cs.is_empty() {
        return Vec2::zeros();
    }
    let score = |u: Vec2| cs.iter().map(|c| c.slack(u)).fold(f64::INFINITY, f64::min);
    let mut candidates = vec![Vec2::zeros()];
    for c in &cs {
        candidates.push(-c.a * radius);
    }
    // Equal-slack lines (a_i - a_j)·u = b_i - b_j cut with the circle, and
    // three-way equal-slack points inside the disk.
    for i in 0..cs.len() {
        for j in (i + 1)..cs.len() {
            let d = cs[i].a - cs[j].a;
            let e = cs[i].b - cs[j].b;
            let dn2 = d.norm_squared();
            if dn2 < 1e-18 {
                continue;
            }
            let foot = d * (e / dn2);
            let rem = radius * radius - foot.norm_squared();
            if rem >= 0.0 {
                let t = Vec2::new(-d.y, d.x) / dn2.sqrt();
                candidates.push(foot + t * rem.sqrt());
                candidates.push(foot - t * rem.sqrt());
            }
            for k in (j + 1)..cs.len() {
                let d2 = cs[i].a - cs[k].a;
                let e2 = cs[i].b - cs[k].b;
                let det = d.x * d2.y - d.y * d2.x;
                if det.abs() < 1e-12 {
                    continue;
                }
                let u = Vec2::new((e * d2.y - d.y * e2) / det, (d.x * e2 - e * d2.x) / det);
                if u.norm() <= radius {
                    candidates.push(u);
                }
            }
        }
    }
    let mut best = (f64::NEG_INFINITY, Vec2::zeros());
    for u in candidates {
        let u = crate::geom::clamp_norm(u, radius);
        let s = score(u);
        if s > best.0 {
            best = (s, u);
        }
    }
    best.1
}
