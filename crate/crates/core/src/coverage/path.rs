//! Grid A* used to reach a perturbation target around static obstacles.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::geom::{vec2, Vec2};
use crate::sim::StaticMap;
use crate::swarm::p_controller;

#[derive(Debug, Clone)]
pub struct TransitPlanner {
    map: StaticMap,
    resolution: f64,
    cols: usize,
    rows: usize,
    clearance: f64,
    passable: Vec<bool>,
}

#[derive(Clone, Copy, PartialEq)]
struct Open {
    f: f64,
    idx: usize,
}

impl Eq for Open {}

impl Ord for Open {
    fn cmp(&self, other: &Self) -> Ordering {
        other.f.total_cmp(&self.f).then_with(|| other.idx.cmp(&self.idx))
    }
}

impl PartialOrd for Open {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl TransitPlanner {
    pub fn new(map: &StaticMap, resolution: f64, clearance: f64) -> Self {
        let cols = (map.width / resolution).round().max(1.0) as usize;
        let rows = (map.height / resolution).round().max(1.0) as usize;
        let mut passable = vec![false; cols * rows];
        for (idx, slot) in passable.iter_mut().enumerate() {
            let c = vec2(
                ((idx % cols) as f64 + 0.5) * resolution,
                ((idx / cols) as f64 + 0.5) * resolution,
            );
            *slot = map.segment_clear(c, c, clearance);
        }
        Self {
            map: map.clone(),
            resolution,
            cols,
            rows,
            clearance,
            passable,
        }
    }

    fn center(&self, idx: usize) -> Vec2 {
        vec2(
            ((idx % self.cols) as f64 + 0.5) * self.resolution,
            ((idx / self.cols) as f64 + 0.5) * self.resolution,
        )
    }

    fn nearest_passable(&self, p: Vec2) -> Option<usize> {
        let mut best: Option<(f64, usize)> = None;
        for (i, ok) in self.passable.iter().enumerate() {
            if !ok {
                continue;
            }
            let d = (self.center(i) - p).norm_squared();
            if best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, i));
            }
        }
        best.map(|(_, i)| i)
    }

    fn astar(&self, start: usize, goal: usize) -> Option<Vec<usize>> {
        let n = self.passable.len();
        let mut g = vec![f64::INFINITY; n];
        let mut parent = vec![usize::MAX; n];
        let mut closed = vec![false; n];
        let mut open = BinaryHeap::new();
        let h = |i: usize| (self.center(i) - self.center(goal)).norm();
        g[start] = 0.0;
        open.push(Open { f: h(start), idx: start });
        while let Some(Open { idx, .. }) = open.pop() {
            if closed[idx] {
                continue;
            }
            if idx == goal {
                let mut path = vec![goal];
                let mut cur = goal;
                while cur != start {
                    cur = parent[cur];
                    path.push(cur);
                }
                path.reverse();
                return Some(path);
            }
            closed[idx] = true;
            let (r, c) = ((idx / self.cols) as i64, (idx % self.cols) as i64);
            for dr in -1..=1i64 {
                for dc in -1..=1i64 {
                    if dr == 0 && dc == 0 {
                        continue;
                    }
                    let (nr, nc) = (r + dr, c + dc);
                    if nr < 0 || nc < 0 || nr >= self.rows as i64 || nc >= self.cols as i64 {
                        continue;
                    }
                    let j = nr as usize * self.cols + nc as usize;
                    if !self.passable[j] || closed[j] {
                        continue;
                    }
                    // no corner cutting past blocked cells
                    if dr != 0 && dc != 0 {
                        let a = r as usize * self.cols + nc as usize;
                        let b = nr as usize * self.cols + c as usize;
                        if !self.passable[a] || !self.passable[b] {
                            continue;
                        }
                    }
                    let step = if dr != 0 && dc != 0 { std::f64::consts::SQRT_2 } else { 1.0 };
                    let cand = g[idx] + step * self.resolution;
                    if cand < g[j] {
                        g[j] = cand;
                        parent[j] = idx;
                        open.push(Open { f: cand + h(j), idx: j });
                    }
                }
            }
        }
        None
    }

    /// Waypoints from `from` to `to`, shortened by line of sight. `None` when
    /// the two points are not connected through passable cells.
    pub fn plan(&self, from: Vec2, to: Vec2) -> Option<Transit> {
        if self.map.segment_clear(from, to, self.clearance) {
            return Some(Transit::new(vec![to]));
        }
        let start = self.nearest_passable(from)?;
        let goal = self.nearest_passable(to)?;
        let cells = self.astar(start, goal)?;
        let mut raw: Vec<Vec2> = cells.iter().map(|&i| self.center(i)).collect();
        raw.push(to);
        let mut out = Vec::new();
        let mut anchor = from;
        let mut k = 0;
        while k < raw.len() {
            let mut far = k;
            for j in (k..raw.len()).rev() {
                if self.map.segment_clear(anchor, raw[j], self.clearance) {
                    far = j;
                    break;
                }
            }
            out.push(raw[far]);
            anchor = raw[far];
            k = far + 1;
        }
        Some(Transit::new(out))
    }
}

/// Waypoint follower driven by a proportional controller.
#[derive(Debug, Clone, PartialEq)]
pub struct Transit {
    pub waypoints: Vec<Vec2>,
    pub next: usize,
}

impl Transit {
    pub fn new(waypoints: Vec<Vec2>) -> Self {
        Self { waypoints, next: 0 }
    }

    pub fn target(&self) -> Option<Vec2> {
        self.waypoints.last().copied()
    }

    /// Command toward the current waypoint; `None` once the last one is reached.
    pub fn command(&mut self, p: Vec2, k_p: f64, v_max: f64, capture: f64) -> Option<Vec2> {
        while self.next < self.waypoints.len() && (self.waypoints[self.next] - p).norm() <= capture {
            self.next += 1;
        }
        let wp = *self.waypoints.get(self.next)?;
        Some(p_controller(p, wp, k_p, v_max))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{load_map, MapId};

    #[test]
    fn straight_line_when_clear() {
        let map = load_map(MapId::EmptySpread, 1.0).unwrap();
        let planner = TransitPlanner::new(&map, 0.25, 0.15);
        let t = planner.plan(vec2(2.0, 2.0), vec2(10.0, 10.0)).unwrap();
        assert_eq!(t.waypoints, vec![vec2(10.0, 10.0)]);
    }

    #[test]
    fn routes_around_corridor_wall() {
        let map = load_map(MapId::Corridor, 1.0).unwrap();
        let planner = TransitPlanner::new(&map, 0.25, 0.15);
        let t = planner.plan(vec2(4.0, 12.0), vec2(16.0, 12.0)).unwrap();
        let mut prev = vec2(4.0, 12.0);
        for &w in &t.waypoints {
            assert!(map.segment_clear(prev, w, 0.15), "{prev:?} -> {w:?}");
            prev = w;
        }
        assert!(t.waypoints.len() >= 2);
    }

    #[test]
    fn follower_advances_and_finishes() {
        let mut t = Transit::new(vec![vec2(1.0, 0.0), vec2(2.0, 0.0)]);
        assert!(t.command(vec2(0.0, 0.0), 1.0, 0.5, 0.2).is_some());
        assert_eq!(t.next, 0);
        assert!(t.command(vec2(1.0, 0.05), 1.0, 0.5, 0.2).is_some());
        assert_eq!(t.next, 1);
        assert!(t.command(vec2(2.0, 0.0), 1.0, 0.5, 0.2).is_none());
    }
}
