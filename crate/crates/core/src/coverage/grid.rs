use serde::{Deserialize, Serialize};

use crate::geom::{vec2, Vec2};
use crate::sim::StaticMap;

/// Grid and sensor constants shared by the coverage controllers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CoverageParams {
    /// Cell edge length (m).
    pub resolution: f64,
    /// Cap on the coverage level of a cell.
    pub c_star: f64,
    /// Footprint peak rate `M` (1/s).
    pub peak_rate: f64,
    /// Footprint radius (m).
    pub r_cov: f64,
    /// A cell counts as covered once `C >= c_done * C*`.
    pub c_done: f64,
}

impl Default for CoverageParams {
    fn default() -> Self {
        Self {
            resolution: 0.25,
            c_star: 1.0,
            peak_rate: 1.0,
            r_cov: 2.0,
            c_done: 0.999,
        }
    }
}

/// Quartic bump sensor model `s(d) = M (1 - (d/r)^2)^2` on `d <= r`, zero beyond.
#[inline]
pub fn footprint(d: f64, r_cov: f64, peak_rate: f64) -> f64 {
    if d > r_cov {
        return 0.0;
    }
    let x = 1.0 - (d * d) / (r_cov * r_cov);
    peak_rate * x * x
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageGrid {
    pub resolution: f64,
    pub cols: usize,
    pub rows: usize,
    pub c_star: f64,
    pub c_done: f64,
    /// Row-major levels; row index grows with y.
    pub levels: Vec<f64>,
    /// Cells whose center lies inside an obstacle.
    pub blocked: Vec<bool>,
    free_cells: usize,
    covered_cells: usize,
}

impl CoverageGrid {
    pub fn new(width: f64, height: f64, params: &CoverageParams) -> Self {
        let cols = (width / params.resolution).round().max(1.0) as usize;
        let rows = (height / params.resolution).round().max(1.0) as usize;
        Self {
            resolution: params.resolution,
            cols,
            rows,
            c_star: params.c_star,
            c_done: params.c_done,
            levels: vec![0.0; cols * rows],
            blocked: vec![false; cols * rows],
            free_cells: cols * rows,
            covered_cells: 0,
        }
    }

    /// Grid over `map` with cells under obstacles excluded.
    pub fn for_map(map: &StaticMap, params: &CoverageParams) -> Self {
        let mut g = Self::new(map.width, map.height, params);
        for idx in 0..g.levels.len() {
            if map.in_obstacle(g.center(idx)) {
                g.blocked[idx] = true;
            }
        }
        g.free_cells = g.blocked.iter().filter(|b| !**b).count();
        g
    }

    #[inline]
    pub fn cell_area(&self) -> f64 {
        self.resolution * self.resolution
    }

    #[inline]
    pub fn center(&self, idx: usize) -> Vec2 {
        let (row, col) = (idx / self.cols, idx % self.cols);
        vec2(
            (col as f64 + 0.5) * self.resolution,
            (row as f64 + 0.5) * self.resolution,
        )
    }

    pub fn index_of(&self, p: Vec2) -> Option<usize> {
        if p.x < 0.0 || p.y < 0.0 {
            return None;
        }
        let col = (p.x / self.resolution) as usize;
        let row = (p.y / self.resolution) as usize;
        (col < self.cols && row < self.rows).then(|| row * self.cols + col)
    }

    pub fn free_cells(&self) -> usize {
        self.free_cells
    }

    pub fn free_area(&self) -> f64 {
        self.free_cells as f64 * self.cell_area()
    }

    #[inline]
    pub fn is_covered(&self, idx: usize) -> bool {
        self.levels[idx] >= self.c_done * self.c_star
    }

    pub fn covered_cells(&self) -> usize {
        self.covered_cells
    }

    pub fn coverage_fraction(&self) -> f64 {
        if self.free_cells == 0 {
            1.0
        } else {
            self.covered_cells as f64 / self.free_cells as f64
        }
    }

    pub fn is_complete(&self) -> bool {
        self.covered_cells == self.free_cells
    }

    /// Row-major indices of the cells whose centers lie within `radius` of `p`.
    pub fn cells_within(&self, p: Vec2, radius: f64) -> impl Iterator<Item = usize> + '_ {
        let res = self.resolution;
        let c0 = (((p.x - radius) / res).floor().max(0.0)) as usize;
        let r0 = (((p.y - radius) / res).floor().max(0.0)) as usize;
        let c1 = (((p.x + radius) / res).ceil().max(0.0) as usize).min(self.cols);
        let r1 = (((p.y + radius) / res).ceil().max(0.0) as usize).min(self.rows);
        let r2 = radius * radius;
        (r0..r1.max(r0)).flat_map(move |row| {
            (c0..c1.max(c0)).filter_map(move |col| {
                let idx = row * self.cols + col;
                ((self.center(idx) - p).norm_squared() <= r2).then_some(idx)
            })
        })
    }

    /// Sets a cell level directly (clamped to `[0, C*]`), keeping the covered count consistent.
    pub fn set_level(&mut self, idx: usize, value: f64) {
        let was = self.is_covered(idx);
        self.levels[idx] = value.clamp(0.0, self.c_star);
        let now = self.is_covered(idx);
        if !self.blocked[idx] {
            match (was, now) {
                (false, true) => self.covered_cells += 1,
                (true, false) => self.covered_cells -= 1,
                _ => {}
            }
        }
    }

    /// `C(q) <- min(C*, C(q) + dt * s(|q - p|))` for every robot position.
    pub fn accrue(&mut self, positions: &[Vec2], dt: f64, params: &CoverageParams) {
        let threshold = self.c_done * self.c_star;
        for &p in positions {
            let res = self.resolution;
            let r = params.r_cov;
            let c0 = (((p.x - r) / res).floor().max(0.0)) as usize;
            let r0 = (((p.y - r) / res).floor().max(0.0)) as usize;
            let c1 = (((p.x + r) / res).ceil().max(0.0) as usize).min(self.cols);
            let r1 = (((p.y + r) / res).ceil().max(0.0) as usize).min(self.rows);
            for row in r0..r1.max(r0) {
                for col in c0..c1.max(c0) {
                    let idx = row * self.cols + col;
                    let level = self.levels[idx];
                    if level >= self.c_star || self.blocked[idx] {
                        continue;
                    }
                    let d = (self.center(idx) - p).norm();
                    if d >= r {
                        continue;
                    }
                    let next = (level + dt * footprint(d, r, params.peak_rate)).min(self.c_star);
                    if level < threshold && next >= threshold {
                        self.covered_cells += 1;
                    }
                    self.levels[idx] = next;
                }
            }
        }
    }

    /// `Σ (C* - C(q)) · cell_area` over cells not under obstacles.
    pub fn coverage_error(&self) -> f64 {
        let area = self.cell_area();
        self.levels
            .iter()
            .zip(&self.blocked)
            .filter(|(_, b)| !**b)
            .map(|(c, _)| (self.c_star - c) * area)
            .sum()
    }

    pub fn total_mass(&self) -> f64 {
        self.levels.iter().sum()
    }

    /// Dense plain-text matrix: a `# rows cols resolution c_star` header, then
    /// one line per grid row from the top (largest y) down, blocked cells as `nan`.
    pub fn export_matrix(&self) -> String {
        let mut s = format!(
            "# rows={} cols={} resolution={} c_star={}\n",
            self.rows, self.cols, self.resolution, self.c_star
        );
        for row in (0..self.rows).rev() {
            let line: Vec<String> = (0..self.cols)
                .map(|col| {
                    let idx = row * self.cols + col;
                    if self.blocked[idx] {
                        "nan".to_string()
                    } else {
                        format!("{:.6}", self.levels[idx])
                    }
                })
                .collect();
            s.push_str(&line.join(" "));
            s.push('\n');
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{load_map, MapId};

    #[test]
    fn footprint_values() {
        assert_eq!(footprint(0.0, 2.0, 1.5), 1.5);
        assert_eq!(footprint(2.0, 2.0, 1.5), 0.0);
        assert_eq!(footprint(3.0, 2.0, 1.5), 0.0);
        assert!((footprint(1.0, 2.0, 1.0) - 0.5625).abs() < 1e-15);
    }

    #[test]
    fn far_robot_leaves_grid_unchanged() {
        let params = CoverageParams::default();
        let mut g = CoverageGrid::new(20.0, 20.0, &params);
        let before = g.clone();
        g.accrue(&[vec2(120.0, 120.0)], 0.02, &params);
        assert_eq!(g, before);
    }

    #[test]
    fn accrual_at_center_is_peak_times_dt() {
        let params = CoverageParams::default();
        let mut g = CoverageGrid::new(20.0, 20.0, &params);
        let idx = g.index_of(vec2(5.0, 5.0)).unwrap();
        let c = g.center(idx);
        g.accrue(&[c], 0.02, &params);
        assert_eq!(g.levels[idx], params.peak_rate * 0.02);
    }

    #[test]
    fn saturated_cell_stays_capped() {
        let params = CoverageParams::default();
        let mut g = CoverageGrid::new(20.0, 20.0, &params);
        let idx = g.index_of(vec2(5.0, 5.0)).unwrap();
        g.set_level(idx, params.c_star);
        g.accrue(&[g.center(idx)], 1.0, &params);
        assert_eq!(g.levels[idx], params.c_star);
        assert!(g.levels.iter().all(|&c| c <= params.c_star));
    }

    #[test]
    fn error_on_fresh_full_and_half_grids() {
        let params = CoverageParams::default();
        let map = load_map(MapId::Uniform, 1.0).unwrap();
        let mut g = CoverageGrid::for_map(&map, &params);
        let free = g.free_area();
        assert!(g.free_cells() < g.cols * g.rows);
        assert!((g.coverage_error() - params.c_star * free).abs() < 1e-9);
        for i in 0..g.levels.len() {
            g.set_level(i, 0.5 * params.c_star);
        }
        assert!((g.coverage_error() - params.c_star * free / 2.0).abs() < 1e-9);
        for i in 0..g.levels.len() {
            g.set_level(i, params.c_star);
        }
        assert_eq!(g.coverage_error(), 0.0);
        assert!(g.is_complete());
    }

    #[test]
    fn covered_count_tracks_threshold() {
        let params = CoverageParams::default();
        let mut g = CoverageGrid::new(4.0, 4.0, &params);
        let p = vec2(2.0, 2.0);
        for _ in 0..2000 {
            g.accrue(&[p], 0.02, &params);
        }
        let recount = (0..g.levels.len()).filter(|&i| g.is_covered(i)).count();
        assert_eq!(recount, g.covered_cells());
        assert!(g.covered_cells() > 0);
    }

    #[test]
    fn matrix_export_shape() {
        let params = CoverageParams { resolution: 1.0, ..CoverageParams::default() };
        let g = CoverageGrid::new(3.0, 2.0, &params);
        let txt = g.export_matrix();
        let lines: Vec<_> = txt.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[1].split(' ').count(), 3);
    }
}
