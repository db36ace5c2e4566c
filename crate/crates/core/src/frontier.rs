//! Frontier extraction: known traversable cells that touch unknown space,
//! grouped into 8-connected clusters.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::grid::{Cell, CostMap, GridMeta, Point};

pub const DEFAULT_MIN_CLUSTER_SIZE: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Frontier {
    pub cells: BTreeSet<Cell>,
    pub centroid: Point,
    pub size: usize,
    /// Set by a frontier policy; `None` until scored.
    pub score: Option<f64>,
}

impl Frontier {
    pub fn new(cells: BTreeSet<Cell>, meta: &GridMeta) -> Self {
        let n = cells.len() as f64;
        let (sx, sy) = cells.iter().fold((0.0, 0.0), |(sx, sy), c| {
            let p = meta.grid_to_world(*c);
            (sx + p.x, sy + p.y)
        });
        Self {
            size: cells.len(),
            centroid: Point::new(sx / n, sy / n),
            cells,
            score: None,
        }
    }

    /// Member cell nearest the centroid (smallest `(row, col)` on ties); the
    /// centroid itself may sit on an unknown or lethal cell.
    pub fn target_cell(&self, meta: &GridMeta) -> Cell {
        *self
            .cells
            .iter()
            .min_by(|a, b| {
                let da = meta.grid_to_world(**a).dist(self.centroid);
                let db = meta.grid_to_world(**b).dist(self.centroid);
                da.total_cmp(&db).then(a.cmp(b))
            })
            .expect("frontiers are non-empty")
    }
}

/// Known, non-lethal cells with at least one unknown 8-neighbor.
pub fn extract_frontier_cells(cm: &CostMap) -> BTreeSet<Cell> {
    cm.meta
        .cells()
        .filter(|&c| !cm.is_lethal(c) && !cm.is_unknown(c))
        .filter(|&c| cm.meta.neighbors8(c).any(|n| cm.is_unknown(n)))
        .collect()
}

/// 8-connected components of `cells` with at least `min_cluster_size`
/// members, largest first, then by centroid `(x, y)`.
pub fn cluster(cells: &BTreeSet<Cell>, min_cluster_size: usize, meta: &GridMeta) -> Vec<Frontier> {
    let min_cluster_size = min_cluster_size.max(1);
    let mut remaining = cells.clone();
    let mut out = Vec::new();
    while let Some(seed) = remaining.pop_first() {
        let mut comp = BTreeSet::from([seed]);
        let mut stack = vec![seed];
        while let Some(c) = stack.pop() {
            for n in meta.neighbors8(c) {
                if remaining.remove(&n) {
                    comp.insert(n);
                    stack.push(n);
                }
            }
        }
        if comp.len() >= min_cluster_size {
            out.push(Frontier::new(comp, meta));
        }
    }
    out.sort_by(|a, b| {
        b.size
            .cmp(&a.size)
            .then(a.centroid.x.total_cmp(&b.centroid.x))
            .then(a.centroid.y.total_cmp(&b.centroid.y))
    });
    out
}

/// Extract and cluster in one call.
pub fn frontiers(cm: &CostMap, min_cluster_size: usize) -> Vec<Frontier> {
    cluster(&extract_frontier_cells(cm), min_cluster_size, &cm.meta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{COST_LETHAL, COST_UNKNOWN};

    fn meta(w: usize, h: usize) -> GridMeta {
        GridMeta::new(w, h, 0.1, Point::new(0.0, 0.0)).unwrap()
    }

    #[test]
    fn fully_known_has_none() {
        let cm = CostMap::new(meta(8, 8), 0);
        assert!(extract_frontier_cells(&cm).is_empty());
    }

    #[test]
    fn single_free_cell_in_unknown() {
        let mut cm = CostMap::unknown(meta(8, 8));
        cm.set(Cell::new(3, 4), 0);
        assert_eq!(extract_frontier_cells(&cm), BTreeSet::from([Cell::new(3, 4)]));
    }

    #[test]
    fn half_explored_room() {
        let mut cm = CostMap::new(meta(10, 6), 0);
        cm.fill_rect(0, 5, 5, 9, COST_UNKNOWN);
        cm.set(Cell::new(2, 4), COST_LETHAL);
        let expected: BTreeSet<Cell> = (0..6).filter(|&r| r != 2).map(|r| Cell::new(r, 4)).collect();
        assert_eq!(extract_frontier_cells(&cm), expected);
    }

    #[test]
    fn cluster_examples() {
        let m = meta(20, 20);
        let line: BTreeSet<Cell> = (0..10).map(|c| Cell::new(5, c)).collect();
        let fs = cluster(&line, 3, &m);
        assert_eq!(fs.len(), 1);
        assert_eq!(fs[0].size, 10);
        assert!(fs[0].score.is_none());

        let pairs = BTreeSet::from([Cell::new(0, 0), Cell::new(0, 1), Cell::new(10, 10), Cell::new(11, 11)]);
        assert!(cluster(&pairs, 3, &m).is_empty());
        assert_eq!(cluster(&pairs, 2, &m).len(), 2);
    }

    #[test]
    fn ordering_and_centroid() {
        let m = meta(20, 20);
        let mut cells: BTreeSet<Cell> = (0..4).map(|c| Cell::new(10, c + 10)).collect();
        cells.extend((0..4).map(|c| Cell::new(2, c)));
        cells.extend((0..6).map(|r| Cell::new(r + 10, 2)));
        let fs = cluster(&cells, 1, &m);
        assert_eq!(fs.iter().map(|f| f.size).collect::<Vec<_>>(), vec![6, 4, 4]);
        assert!(fs[1].centroid.x < fs[2].centroid.x);
        assert!((fs[1].centroid.x - 0.2).abs() < 1e-12);
        assert!((fs[1].centroid.y - 0.25).abs() < 1e-12);
    }

    #[test]
    fn target_is_member_nearest_centroid() {
        let m = meta(20, 20);
        // L-shape whose centroid is off the member cells
        let cells: BTreeSet<Cell> = (0..5).map(|c| Cell::new(0, c)).chain((1..5).map(|r| Cell::new(r, 0))).collect();
        let f = Frontier::new(cells, &m);
        let t = f.target_cell(&m);
        assert!(f.cells.contains(&t));
        let best = f
            .cells
            .iter()
            .map(|c| m.grid_to_world(*c).dist(f.centroid))
            .fold(f64::INFINITY, f64::min);
        assert!((m.grid_to_world(t).dist(f.centroid) - best).abs() < 1e-12);
    }
}
