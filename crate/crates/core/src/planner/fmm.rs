//! Fast Marching on the cost grid.
//!
//! Solves `|∇T| = 1 + cost/100` (slowness in seconds per meter, so `T` on
//! free space is metric distance) outward from a goal cell. Each update
//! takes the smaller of the first-order upwind solutions on the axis
//! stencil and on the 45°-rotated diagonal stencil, which removes most of
//! the diagonal bias of the plain 4-neighbor scheme. Cells within
//! [`EXACT_INIT_RADIUS`] of the goal that share its cost and see it directly
//! start from their exact distance.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use crate::grid::{Cell, CostMap, Grid, GridMeta, NEIGHBORS_8};

use super::los::line_of_sight;
use super::PlanError;

/// Radius, in cells, of the exactly initialized disk around the goal.
pub const EXACT_INIT_RADIUS: f64 = 3.0;

/// Arrival times from a goal; `+inf` where the front never reached.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrivalField {
    pub meta: GridMeta,
    pub goal: Cell,
    pub time: Grid<f64>,
}

impl ArrivalField {
    pub fn at(&self, cell: Cell) -> f64 {
        self.time[cell]
    }

    pub fn is_reached(&self, cell: Cell) -> bool {
        self.meta.contains(cell) && self.time[cell].is_finite()
    }
}

#[derive(Clone, Copy, PartialEq)]
struct Trial {
    time: f64,
    cell: Cell,
}

impl Eq for Trial {}

impl Ord for Trial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time
            .total_cmp(&other.time)
            .then_with(|| self.cell.cmp(&other.cell))
    }
}

impl PartialOrd for Trial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Two-sided upwind solve: smallest `t` with `(t-a)^2 + (t-b)^2 = f^2`,
/// falling back to the one-sided `min(a, b) + f`.
fn upwind(a: f64, b: f64, f: f64) -> f64 {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    if !lo.is_finite() {
        return f64::INFINITY;
    }
    if hi.is_finite() && hi - lo < f {
        let d = hi - lo;
        0.5 * (lo + hi + (2.0 * f * f - d * d).sqrt())
    } else {
        lo + f
    }
}

pub fn fmm_field(cm: &CostMap, goal: Cell) -> Result<ArrivalField, PlanError> {
    let meta = cm.meta;
    if !cm.is_traversable(goal) {
        return Err(PlanError::GoalNotTraversable(goal));
    }
    let (w, h) = (meta.width, meta.height);
    let mut time = Grid::new(w, h, f64::INFINITY);
    let mut known = Grid::new(w, h, false);
    let mut heap = BinaryHeap::new();
    let passable = Grid::from_fn(w, h, |c| !cm.is_lethal(c));

    time[goal] = 0.0;
    heap.push(Reverse(Trial { time: 0.0, cell: goal }));
    let r = EXACT_INIT_RADIUS.floor() as isize;
    let goal_cost = cm.get(goal);
    let goal_step = meta.resolution * cm.cost_factor(goal);
    for dr in -r..=r {
        for dc in -r..=r {
            let Some(c) = goal.offset(dr, dc) else { continue };
            let d = c.dist(goal);
            if c == goal || !meta.contains(c) || d > EXACT_INIT_RADIUS + 1e-9 {
                continue;
            }
            if cm.get(c) == goal_cost && line_of_sight(goal, c, &passable) {
                time[c] = d * goal_step;
                heap.push(Reverse(Trial { time: time[c], cell: c }));
            }
        }
    }

    let diag = std::f64::consts::SQRT_2;
    while let Some(Reverse(Trial { time: t, cell })) = heap.pop() {
        if known[cell] || t > time[cell] {
            continue;
        }
        known[cell] = true;
        for &(dr, dc) in &NEIGHBORS_8 {
            let Some(n) = cell.offset(dr, dc) else { continue };
            if !meta.contains(n) || known[n] || !passable[n] {
                continue;
            }
            let val = |dr: isize, dc: isize| -> f64 {
                match n.offset(dr, dc) {
                    Some(c) if meta.contains(c) && known[c] => time[c],
                    _ => f64::INFINITY,
                }
            };
            let step = meta.resolution * cm.cost_factor(n);
            let axis = upwind(val(0, -1).min(val(0, 1)), val(-1, 0).min(val(1, 0)), step);
            let rotated = upwind(
                val(-1, -1).min(val(1, 1)),
                val(-1, 1).min(val(1, -1)),
                step * diag,
            );
            let cand = axis.min(rotated);
            if cand < time[n] {
                time[n] = cand;
                heap.push(Reverse(Trial { time: cand, cell: n }));
            }
        }
    }
    Ok(ArrivalField { meta, goal, time })
}

/// Steepest descent over 8-neighbors from `start` down to the goal.
/// Ties between equally low neighbors go to the first in `(row, col)` order.
pub fn fmm_path(field: &ArrivalField, start: Cell) -> Result<Vec<Cell>, PlanError> {
    if !field.is_reached(start) {
        return Err(PlanError::Unreached(start));
    }
    let mut path = vec![start];
    let mut cur = start;
    while field.time[cur] > 0.0 {
        let mut best: Option<(f64, Cell)> = None;
        for n in field.meta.neighbors8(cur) {
            let t = field.time[n];
            if t < field.time[cur] && best.is_none_or(|(bt, bc)| t < bt || (t == bt && n < bc)) {
                best = Some((t, n));
            }
        }
        match best {
            Some((_, n)) => {
                path.push(n);
                cur = n;
            }
            None => return Err(PlanError::DescentStuck(cur)),
        }
    }
    Ok(path)
}
