//! Deterministic map fixtures shared by the benchmarks.

use navsim_core::grid::{Cell, CostMap, GridMeta, Mask, Point, COST_FREE, COST_LETHAL, COST_UNKNOWN};
use navsim_core::worlds;

/// A 4x4 grid of 20-cell rooms joined by doorways, `size` cells square.
pub fn rooms(size: usize) -> CostMap {
    let meta = GridMeta::new(size, size, 0.05, Point::new(0.0, 0.0)).expect("valid grid");
    let mut cm = CostMap::new(meta, COST_FREE);
    let step = size / 4;
    for k in 0..=4 {
        let line = (k * step).min(size - 1);
        cm.fill_rect(line, 0, line, size - 1, COST_LETHAL);
        cm.fill_rect(0, line, size - 1, line, COST_LETHAL);
    }
    for i in 0..4 {
        for j in 0..4 {
            let mid = i * step + step / 2;
            let wall = j * step;
            if j > 0 {
                cm.fill_rect(mid - 2, wall, mid + 2, wall, COST_FREE);
                cm.fill_rect(wall, mid - 2, wall, mid + 2, COST_FREE);
            }
        }
    }
    cm
}

/// `rooms` with every room right of the middle column still unknown.
pub fn half_explored(size: usize) -> CostMap {
    let mut cm = rooms(size);
    cm.fill_rect(0, size / 2 + 1, size - 1, size - 1, COST_UNKNOWN);
    cm
}

pub fn free_mask(cm: &CostMap) -> Mask {
    cm.cost.map(|v| *v == COST_FREE)
}

/// Centers of the bottom-left and top-right rooms.
pub fn corners(size: usize) -> (Cell, Cell) {
    let step = size / 4;
    (Cell::new(step / 2, step / 2), Cell::new(3 * step + step / 2, 3 * step + step / 2))
}

/// The first bundled world and its scenario.
pub fn world() -> (CostMap, navsim_core::sim::Scenario) {
    worlds::generate(&worlds::BUNDLED[0])
}
