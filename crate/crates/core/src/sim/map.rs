//! Static benchmark maps and their on-disk layout format.
//!
//! Layouts are TOML documents:
//!
//! ```toml
//! format_version = 1
//! map_id = "corridor"
//! width = 20.0
//! height = 20.0
//! [spawn]                      # axis-aligned spawn rectangle
//! min = [1.0, 1.0]
//! max = [6.0, 19.0]
//! [goal]                       # goal disk
//! center = [16.0, 10.0]
//! radius = 3.0
//! [[obstacles]]                # zero or more
//! kind = "rect"                # or "polygon" with `vertices = [[x, y], ...]`
//! min = [8.0, 0.0]
//! max = [12.0, 2.0]
//! ```

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Aabb, ConvexPolygon, Vec2};

pub const MAP_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapId {
    EmptyDense,
    EmptySpread,
    Uniform,
    Corridor,
    Concave,
}

impl MapId {
    pub const ALL: [MapId; 5] = [
        MapId::EmptyDense,
        MapId::EmptySpread,
        MapId::Uniform,
        MapId::Corridor,
        MapId::Concave,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MapId::EmptyDense => "empty_dense",
            MapId::EmptySpread => "empty_spread",
            MapId::Uniform => "uniform",
            MapId::Corridor => "corridor",
            MapId::Concave => "concave",
        }
    }

    fn layout_source(self) -> &'static str {
        match self {
            MapId::EmptyDense => include_str!("../../maps/empty_dense.toml"),
            MapId::EmptySpread => include_str!("../../maps/empty_spread.toml"),
            MapId::Uniform => include_str!("../../maps/uniform.toml"),
            MapId::Corridor => include_str!("../../maps/corridor.toml"),
            MapId::Concave => include_str!("../../maps/concave.toml"),
        }
    }
}

impl fmt::Display for MapId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MapId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MapId::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::UnknownMap(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Obstacle {
    Rect { min: Vec2, max: Vec2 },
    Polygon { vertices: Vec<Vec2> },
}

impl Obstacle {
    fn to_polygon(&self) -> Result<ConvexPolygon> {
        match self {
            Obstacle::Rect { min, max } => {
                if max.x <= min.x || max.y <= min.y {
                    return Err(Error::MapLayout("degenerate rectangle".into()));
                }
                Ok(Aabb { min: *min, max: *max }.to_polygon())
            }
            Obstacle::Polygon { vertices } => ConvexPolygon::new(vertices.clone())
                .ok_or_else(|| Error::MapLayout("polygon is not convex".into())),
        }
    }

    fn scaled(&self, s: f64) -> Self {
        match self {
            Obstacle::Rect { min, max } => Obstacle::Rect {
                min: min * s,
                max: max * s,
            },
            Obstacle::Polygon { vertices } => Obstacle::Polygon {
                vertices: vertices.iter().map(|v| v * s).collect(),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GoalDisk {
    pub center: Vec2,
    pub radius: f64,
}

impl GoalDisk {
    pub fn contains(&self, p: Vec2) -> bool {
        (p - self.center).norm() <= self.radius
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct LayoutFile {
    format_version: u32,
    map_id: MapId,
    width: f64,
    height: f64,
    spawn: Aabb,
    goal: GoalDisk,
    #[serde(default)]
    obstacles: Vec<Obstacle>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StaticMap {
    pub map_id: MapId,
    pub width: f64,
    pub height: f64,
    pub spawn_region: Aabb,
    pub goal: GoalDisk,
    pub obstacles: Vec<ConvexPolygon>,
    layout: Vec<Obstacle>,
}

impl StaticMap {
    /// Parses and validates a layout document.
    pub fn from_layout_str(src: &str) -> Result<Self> {
        let file: LayoutFile =
            toml::from_str(src).map_err(|e| Error::MapLayout(e.to_string()))?;
        if file.format_version != MAP_FORMAT_VERSION {
            return Err(Error::MapLayout(format!(
                "unsupported format_version {}",
                file.format_version
            )));
        }
        let obstacles = file
            .obstacles
            .iter()
            .map(Obstacle::to_polygon)
            .collect::<Result<Vec<_>>>()?;
        let map = StaticMap {
            map_id: file.map_id,
            width: file.width,
            height: file.height,
            spawn_region: file.spawn,
            goal: file.goal,
            obstacles,
            layout: file.obstacles,
        };
        map.validate()?;
        Ok(map)
    }

    pub fn to_layout_string(&self) -> String {
        let file = LayoutFile {
            format_version: MAP_FORMAT_VERSION,
            map_id: self.map_id,
            width: self.width,
            height: self.height,
            spawn: self.spawn_region,
            goal: self.goal,
            obstacles: self.layout.clone(),
        };
        toml::to_string(&file).expect("layout serializes")
    }

    fn validate(&self) -> Result<()> {
        if !(self.width > 0.0 && self.height > 0.0) {
            return Err(Error::MapLayout("non-positive map extent".into()));
        }
        let bounds = Aabb::new(0.0, 0.0, self.width, self.height);
        let spawn = self.spawn_region.to_polygon();
        for (i, obs) in self.obstacles.iter().enumerate() {
            let b = obs.bounds();
            if !bounds.contains(b.min) || !bounds.contains(b.max) {
                return Err(Error::MapLayout(format!("obstacle {i} leaves the map")));
            }
            if obs.signed_distance(self.goal.center) < self.goal.radius {
                return Err(Error::MapLayout(format!("obstacle {i} intersects the goal disk")));
            }
            if obs.vertices.iter().any(|&v| spawn.contains(v))
                || spawn.vertices.iter().any(|&v| obs.contains(v))
                || spawn
                    .vertices
                    .iter()
                    .zip(spawn.vertices.iter().cycle().skip(1))
                    .any(|(&a, &b)| obs.segment_distance(a, b) == 0.0)
            {
                return Err(Error::MapLayout(format!("obstacle {i} intersects the spawn region")));
            }
        }
        if !bounds.contains(self.spawn_region.min) || !bounds.contains(self.spawn_region.max) {
            return Err(Error::MapLayout("spawn region leaves the map".into()));
        }
        Ok(())
    }

    pub fn scaled(&self, s: f64) -> Self {
        StaticMap {
            map_id: self.map_id,
            width: self.width * s,
            height: self.height * s,
            spawn_region: self.spawn_region.scaled(s),
            goal: GoalDisk {
                center: self.goal.center * s,
                radius: self.goal.radius * s,
            },
            obstacles: self.obstacles.iter().map(|o| o.scaled(s)).collect(),
            layout: self.layout.iter().map(|o| o.scaled(s)).collect(),
        }
    }

    /// Signed distance from `p` to the nearest obstacle (infinite on an empty map).
    pub fn obstacle_distance(&self, p: Vec2) -> f64 {
        self.obstacles
            .iter()
            .map(|o| o.signed_distance(p))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn in_obstacle(&self, p: Vec2) -> bool {
        self.obstacles.iter().any(|o| o.contains(p))
    }

    /// True when a disk of `radius` swept along `a`-`b` stays inside the map and clear of obstacles.
    pub fn segment_clear(&self, a: Vec2, b: Vec2, radius: f64) -> bool {
        let inside = |p: Vec2| {
            p.x >= radius && p.y >= radius && p.x <= self.width - radius && p.y <= self.height - radius
        };
        inside(a)
            && inside(b)
            && self.obstacles.iter().all(|o| o.segment_distance(a, b) >= radius)
    }

    pub fn free_area_bounds(&self) -> Aabb {
        Aabb::new(0.0, 0.0, self.width, self.height)
    }
}

/// Loads one of the shipped layouts, scaled uniformly (1.0 = 20 x 20 m).
pub fn load_map(map_id: MapId, scale: f64) -> Result<StaticMap> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::Config(format!("map scale must be positive, got {scale}")));
    }
    let map = StaticMap::from_layout_str(map_id.layout_source())?;
    if map.map_id != map_id {
        return Err(Error::MapLayout(format!("layout for {map_id} declares {}", map.map_id)));
    }
    Ok(if scale == 1.0 { map } else { map.scaled(scale) })
}

/// Loads a map by its string id.
pub fn load_map_by_name(name: &str, scale: f64) -> Result<StaticMap> {
    load_map(name.parse()?, scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::vec2;

    #[test]
    fn empty_dense_layout() {
        let m = load_map(MapId::EmptyDense, 1.0).unwrap();
        assert_eq!((m.width, m.height), (20.0, 20.0));
        assert!(m.obstacles.is_empty());
        assert_eq!(m.spawn_region, Aabb::new(1.0, 1.0, 6.0, 8.0));
    }

    #[test]
    fn empty_spread_spawn_region() {
        let m = load_map(MapId::EmptySpread, 1.0).unwrap();
        assert_eq!(m.spawn_region, Aabb::new(1.0, 1.0, 6.0, 19.0));
        assert_eq!(m.goal.radius, 3.0);
    }

    #[test]
    fn scaling_halves_every_coordinate() {
        let full = load_map(MapId::Corridor, 1.0).unwrap();
        let half = load_map(MapId::Corridor, 0.5).unwrap();
        assert_eq!(half.width, 10.0);
        assert_eq!(half.goal.radius, full.goal.radius / 2.0);
        assert_eq!(half.goal.center, full.goal.center / 2.0);
        for (a, b) in full.obstacles.iter().zip(&half.obstacles) {
            for (va, vb) in a.vertices.iter().zip(&b.vertices) {
                assert_eq!(va / 2.0, *vb);
            }
        }
    }

    #[test]
    fn every_shipped_layout_is_valid() {
        for id in MapId::ALL {
            let m = load_map(id, 1.0).unwrap();
            assert_eq!(m.map_id, id);
            let reparsed = StaticMap::from_layout_str(&m.to_layout_string()).unwrap();
            assert_eq!(reparsed, m);
        }
    }

    #[test]
    fn unknown_map_and_bad_scale_are_rejected() {
        assert!(matches!(load_map_by_name("maze", 1.0), Err(Error::UnknownMap(_))));
        assert!(load_map(MapId::Uniform, 0.0).is_err());
    }

    #[test]
    fn obstacle_over_goal_is_rejected() {
        let src = r#"
format_version = 1
map_id = "uniform"
width = 20.0
height = 20.0
[spawn]
min = [1.0, 1.0]
max = [6.0, 19.0]
[goal]
center = [16.0, 10.0]
radius = 3.0
[[obstacles]]
kind = "rect"
min = [15.0, 9.0]
max = [17.0, 11.0]
"#;
        assert!(matches!(StaticMap::from_layout_str(src), Err(Error::MapLayout(_))));
    }

    #[test]
    fn segment_clearance() {
        let m = load_map(MapId::Corridor, 1.0).unwrap();
        assert!(!m.segment_clear(vec2(5.0, 10.0), vec2(15.0, 10.0), 0.1));
        assert!(m.segment_clear(vec2(5.0, 3.0), vec2(15.0, 3.0), 0.1));
        assert!(!m.segment_clear(vec2(5.0, 3.0), vec2(15.0, 3.0), 1.5));
    }
}
