//! Medial-axis planner.
//!
//! The robot drives in a straight line to the nearest visible skeleton
//! cell, follows the skeleton, and leaves it in a straight line from the
//! skeleton cell nearest the goal. The skeleton run keeps the robot as far
//! from obstacles as the thinned free space allows.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::grid::{Cell, CostMap, Grid, Mask, Point, Pose};
use crate::skeleton::{thin, SkeletonSet};

use super::los::{bresenham, line_of_sight};
use super::{PlanError, PlanProblem, PlannedPath};

/// Closest skeleton cell visible from `p`; ties go to the smaller
/// `(row, col)`.
pub fn attach_point(p: Cell, sk: &SkeletonSet, mask: &Mask) -> Result<Cell, PlanError> {
    let mut candidates: Vec<(usize, Cell)> = sk.cells().map(|c| (c.dist2(p), c)).collect();
    candidates.sort_unstable();
    candidates
        .into_iter()
        .map(|(_, c)| c)
        .find(|&c| line_of_sight(p, c, mask))
        .ok_or(PlanError::NoVisibleSkeleton(p))
}

/// Cheapest 8-connected route along the skeleton. Stepping onto a cell
/// costs its metric step length times `1 + cost/100`.
pub fn skeleton_path(entry: Cell, exit: Cell, sk: &SkeletonSet, cm: &CostMap) -> Result<Vec<Cell>, PlanError> {
    let meta = cm.meta;
    let mut dist = Grid::new(meta.width, meta.height, f64::INFINITY);
    let mut prev: Grid<Option<Cell>> = Grid::new(meta.width, meta.height, None);
    let mut heap = BinaryHeap::new();
    dist[entry] = 0.0;
    heap.push(Reverse((Key(0.0), entry)));
    while let Some(Reverse((Key(d), c))) = heap.pop() {
        if d > dist[c] {
            continue;
        }
        if c == exit {
            break;
        }
        for n in meta.neighbors8(c) {
            if !sk.contains(n) {
                continue;
            }
            let step = if n.row != c.row && n.col != c.col {
                meta.resolution * std::f64::consts::SQRT_2
            } else {
                meta.resolution
            };
            let nd = d + step * cm.cost_factor(n);
            if nd < dist[n] {
                dist[n] = nd;
                prev[n] = Some(c);
                heap.push(Reverse((Key(nd), n)));
            }
        }
    }
    if !dist[exit].is_finite() {
        return Err(PlanError::SkeletonDisconnected(entry, exit));
    }
    let mut path = vec![exit];
    let mut cur = exit;
    while let Some(p) = prev[cur] {
        path.push(p);
        cur = p;
    }
    path.reverse();
    Ok(path)
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Key(f64);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Plan from the robot pose to a metric goal through the medial axis of the
/// robot's traversable component.
pub fn plan_medial(robot: &Pose, goal: Point, cm: &CostMap) -> Result<PlannedPath, PlanError> {
    let problem = PlanProblem::new(cm, robot.position(), goal)?;
    let sk = thin(&problem.reach);
    plan_on_skeleton(&problem, &sk, cm)
}

/// The three-segment assembly for an already thinned problem.
pub fn plan_on_skeleton(problem: &PlanProblem, sk: &SkeletonSet, cm: &CostMap) -> Result<PlannedPath, PlanError> {
    let entry = attach_point(problem.start, sk, &problem.reach)?;
    let exit = attach_point(problem.goal, sk, &problem.reach)?;
    let axis = skeleton_path(entry, exit, sk, cm)?;
    Ok(PlannedPath::from_segments(
        bresenham(problem.start, entry),
        axis,
        bresenham(exit, problem.goal),
        &cm.meta,
        &problem.clearance,
    ))
}
