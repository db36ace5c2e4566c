//! Global planners over a [`CostMap`]: the medial-axis safety planner and
//! the Fast Marching shortest-path planner.

pub mod fmm;
pub mod los;
pub mod medial;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{reachable_component, traversable_mask, Cell, CostMap, Grid, GridError, GridMeta, Mask, Point, Pose};
use crate::skeleton::clearance_field;

pub use fmm::{fmm_field, fmm_path, ArrivalField};
pub use los::{bresenham, line_of_sight, supercover};
pub use medial::{attach_point, plan_medial, skeleton_path};

/// Occupied goal cells snap to the nearest reachable cell within this
/// distance, the same as the success radius.
pub const GOAL_SNAP_RADIUS: f64 = 1.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("start cell {0:?} is not traversable")]
    StartNotTraversable(Cell),
    #[error("goal cell {0:?} is not traversable")]
    GoalNotTraversable(Cell),
    #[error("goal is not reachable from the start")]
    GoalUnreachable,
    #[error("no skeleton cell visible from {0:?}")]
    NoVisibleSkeleton(Cell),
    #[error("skeleton cells {0:?} and {1:?} are not connected")]
    SkeletonDisconnected(Cell, Cell),
    #[error("cell {0:?} was never reached by the wavefront")]
    Unreached(Cell),
    #[error("steepest descent stuck at {0:?}")]
    DescentStuck(Cell),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlannerKind {
    /// Medial-axis planner, falling back to FMM when no skeleton route exists.
    #[default]
    Medial,
    Fmm,
}

impl std::str::FromStr for PlannerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "medial" => Ok(Self::Medial),
            "fmm" => Ok(Self::Fmm),
            other => Err(format!("unknown planner `{other}` (expected medial|fmm)")),
        }
    }
}

/// A three-segment path: straight entry onto the skeleton, a run along it,
/// and a straight exit to the goal. Segments share their joint cells.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannedPath {
    pub entry: Vec<Cell>,
    pub axis: Vec<Cell>,
    pub exit: Vec<Cell>,
    pub total_cells: usize,
    pub metric_length: f64,
    /// Smallest clearance (cells) over every path cell.
    pub min_clearance: f64,
    /// Smallest clearance (cells) over the axis segment only.
    pub axis_min_clearance: f64,
}

impl PlannedPath {
    pub fn from_segments(
        entry: Vec<Cell>,
        axis: Vec<Cell>,
        exit: Vec<Cell>,
        meta: &GridMeta,
        clearance: &Grid<f64>,
    ) -> Self {
        let mut p = Self {
            entry,
            axis,
            exit,
            total_cells: 0,
            metric_length: 0.0,
            min_clearance: 0.0,
            axis_min_clearance: 0.0,
        };
        let cells = p.cells();
        p.total_cells = cells.len();
        p.metric_length = path_length(&cells, meta.resolution);
        p.min_clearance = cells.iter().map(|c| clearance[*c]).fold(f64::INFINITY, f64::min);
        p.axis_min_clearance = p.axis.iter().map(|c| clearance[*c]).fold(f64::INFINITY, f64::min);
        p
    }

    /// A plain cell sequence (FMM output) stored as the axis with
    /// single-cell entry and exit segments.
    pub fn from_cells(cells: Vec<Cell>, meta: &GridMeta, clearance: &Grid<f64>) -> Self {
        let first = vec![cells[0]];
        let last = vec![*cells.last().expect("non-empty path")];
        Self::from_segments(first, cells, last, meta, clearance)
    }

    /// Concatenated cells with the shared joints appearing once.
    pub fn cells(&self) -> Vec<Cell> {
        let mut out = self.entry.clone();
        out.extend(self.axis.iter().skip(1));
        out.extend(self.exit.iter().skip(1));
        out
    }

    pub fn start(&self) -> Cell {
        self.entry[0]
    }

    pub fn goal(&self) -> Cell {
        *self.exit.last().expect("non-empty exit segment")
    }

    pub fn waypoints(&self, meta: &GridMeta) -> Vec<Point> {
        self.cells().into_iter().map(|c| meta.grid_to_world(c)).collect()
    }
}

/// Metric length of an 8-connected cell sequence.
pub fn path_length(cells: &[Cell], resolution: f64) -> f64 {
    cells
        .windows(2)
        .map(|w| {
            if w[0].row != w[1].row && w[0].col != w[1].col {
                resolution * std::f64::consts::SQRT_2
            } else {
                resolution
            }
        })
        .sum()
}

/// Start and goal resolved onto the robot's traversable component.
#[derive(Debug, Clone)]
pub struct PlanProblem {
    pub start: Cell,
    pub goal: Cell,
    /// Traversable cells connected to the start.
    pub reach: Mask,
    pub clearance: Grid<f64>,
}

impl PlanProblem {
    pub fn new(cm: &CostMap, start: Point, goal: Point) -> Result<Self, PlanError> {
        let meta = cm.meta;
        let start = meta.world_to_grid(start)?;
        let goal_raw = meta.world_to_grid(goal)?;
        let mask = traversable_mask(cm);
        let reach = reachable_component(&mask, start).map_err(|_| PlanError::StartNotTraversable(start))?;
        let goal = if reach[goal_raw] {
            goal_raw
        } else if mask[goal_raw] {
            return Err(PlanError::GoalUnreachable);
        } else {
            cm.nearest_within(goal_raw, GOAL_SNAP_RADIUS, |c| reach[c])
                .ok_or(PlanError::GoalUnreachable)?
        };
        let clearance = clearance_field(&reach);
        Ok(Self {
            start,
            goal,
            reach,
            clearance,
        })
    }
}

/// FMM planner: arrival field from the goal, descent from the start.
pub fn plan_fmm(robot: &Pose, goal: Point, cm: &CostMap) -> Result<PlannedPath, PlanError> {
    let problem = PlanProblem::new(cm, robot.position(), goal)?;
    let field = fmm_field(cm, problem.goal)?;
    let cells = match fmm_path(&field, problem.start) {
        Err(PlanError::Unreached(_)) => return Err(PlanError::GoalUnreachable),
        r => r?,
    };
    Ok(PlannedPath::from_cells(cells, &cm.meta, &problem.clearance))
}

/// Plan with the chosen planner. The medial planner falls back to FMM when
/// no skeleton route exists.
pub fn plan(robot: &Pose, goal: Point, cm: &CostMap, kind: PlannerKind) -> Result<PlannedPath, PlanError> {
    match kind {
        PlannerKind::Fmm => plan_fmm(robot, goal, cm),
        PlannerKind::Medial => match plan_medial(robot, goal, cm) {
            Err(PlanError::NoVisibleSkeleton(_) | PlanError::SkeletonDisconnected(..)) => plan_fmm(robot, goal, cm),
            r => r,
        },
    }
}
