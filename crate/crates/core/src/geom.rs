//! Planar geometry: convex obstacles, closest points, signed distances.

use serde::{Deserialize, Serialize};

pub type Vec2 = nalgebra::Vector2<f64>;

#[inline]
pub fn vec2(x: f64, y: f64) -> Vec2 {
    Vec2::new(x, y)
}

/// Scales `v` down so that its norm does not exceed `limit`.
pub fn clamp_norm(v: Vec2, limit: f64) -> Vec2 {
    let n = v.norm();
    if n > limit && n > 0.0 {
        v * (limit / n)
    } else {
        v
    }
}

#[inline]
fn cross(a: Vec2, b: Vec2) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Closest point to `p` on the segment `a`-`b`.
pub fn closest_on_segment(p: Vec2, a: Vec2, b: Vec2) -> Vec2 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return a;
    }
    let t = ((p - a).dot(&ab) / len2).clamp(0.0, 1.0);
    a + ab * t
}

pub fn point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    (p - closest_on_segment(p, a, b)).norm()
}

fn segments_intersect(p1: Vec2, p2: Vec2, q1: Vec2, q2: Vec2) -> bool {
    let d1 = cross(q2 - q1, p1 - q1);
    let d2 = cross(q2 - q1, p2 - q1);
    let d3 = cross(p2 - p1, q1 - p1);
    let d4 = cross(p2 - p1, q2 - p1);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let on = |a: Vec2, b: Vec2, p: Vec2, d: f64| d == 0.0 && point_segment_distance(p, a, b) == 0.0;
    on(q1, q2, p1, d1) || on(q1, q2, p2, d2) || on(p1, p2, q1, d3) || on(p1, p2, q2, d4)
}

/// Axis-aligned rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Vec2,
    pub max: Vec2,
}

impl Aabb {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self {
            min: vec2(x0.min(x1), y0.min(y1)),
            max: vec2(x0.max(x1), y0.max(y1)),
        }
    }

    pub fn contains(&self, p: Vec2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            min: self.min * s,
            max: self.max * s,
        }
    }

    pub fn to_polygon(&self) -> ConvexPolygon {
        ConvexPolygon {
            vertices: vec![
                self.min,
                vec2(self.max.x, self.min.y),
                self.max,
                vec2(self.min.x, self.max.y),
            ],
        }
    }
}

/// Convex polygon with counter-clockwise vertices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexPolygon {
    pub vertices: Vec<Vec2>,
}

impl ConvexPolygon {
    /// Builds a polygon, reordering clockwise input to counter-clockwise.
    /// Returns `None` for fewer than three vertices or a non-convex ring.
    pub fn new(mut vertices: Vec<Vec2>) -> Option<Self> {
        if vertices.len() < 3 {
            return None;
        }
        let area2: f64 = (0..vertices.len())
            .map(|i| cross(vertices[i], vertices[(i + 1) % vertices.len()]))
            .sum();
        if area2 == 0.0 {
            return None;
        }
        if area2 < 0.0 {
            vertices.reverse();
        }
        let n = vertices.len();
        for i in 0..n {
            let a = vertices[i];
            let b = vertices[(i + 1) % n];
            let c = vertices[(i + 2) % n];
            if cross(b - a, c - b) < 0.0 {
                return None;
            }
        }
        Some(Self { vertices })
    }

    fn edges(&self) -> impl Iterator<Item = (Vec2, Vec2)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn contains(&self, p: Vec2) -> bool {
        self.edges().all(|(a, b)| cross(b - a, p - a) >= 0.0)
    }

    /// Closest boundary point, its distance, and the outward normal of the edge it lies on.
    fn boundary_query(&self, p: Vec2) -> (Vec2, f64, Vec2) {
        let mut best = (self.vertices[0], f64::INFINITY, vec2(1.0, 0.0));
        for (a, b) in self.edges() {
            let c = closest_on_segment(p, a, b);
            let d = (p - c).norm();
            if d < best.1 {
                let e = b - a;
                let n = vec2(e.y, -e.x).normalize();
                best = (c, d, n);
            }
        }
        best
    }

    pub fn closest_boundary_point(&self, p: Vec2) -> Vec2 {
        self.boundary_query(p).0
    }

    /// Negative inside, positive outside.
    pub fn signed_distance(&self, p: Vec2) -> f64 {
        let (_, d, _) = self.boundary_query(p);
        if self.contains(p) {
            -d
        } else {
            d
        }
    }

    /// Signed distance together with the unit gradient of the signed distance at `p`.
    pub fn signed_distance_and_normal(&self, p: Vec2) -> (f64, Vec2) {
        let (c, d, edge_normal) = self.boundary_query(p);
        let inside = self.contains(p);
        let normal = if d > 1e-12 {
            if inside {
                (c - p) / d
            } else {
                (p - c) / d
            }
        } else {
            edge_normal
        };
        (if inside { -d } else { d }, normal)
    }

    /// Distance between a segment and the polygon (zero when they touch or overlap).
    pub fn segment_distance(&self, a: Vec2, b: Vec2) -> f64 {
        if self.contains(a) || self.contains(b) {
            return 0.0;
        }
        if self.edges().any(|(p, q)| segments_intersect(a, b, p, q)) {
            return 0.0;
        }
        let ends = self
            .boundary_query(a)
            .1
            .min(self.boundary_query(b).1);
        self.vertices
            .iter()
            .map(|&v| point_segment_distance(v, a, b))
            .fold(ends, f64::min)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            vertices: self.vertices.iter().map(|v| v * s).collect(),
        }
    }

    pub fn bounds(&self) -> Aabb {
        let mut min = self.vertices[0];
        let mut max = self.vertices[0];
        for v in &self.vertices {
            min = min.inf(v);
            max = max.sup(v);
        }
        Aabb { min, max }
    }
}
