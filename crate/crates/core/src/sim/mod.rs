//! Deterministic grid-world simulator: ground truth, discrete actions and a
//! ray-cast depth sensor.

pub mod episode;
pub mod scenario;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{normalize_angle, trace_ray, Cell, CostMap, DepthScan, GridError, Point, Pose, Ray};
use crate::perception::VisibleObject;

pub use episode::{oracle_shortest, run_episode, run_episode_observed, EpisodeError, EpisodeResult, Outcome, PolicyBundle, StepView};
pub use scenario::{PerceptionSpec, Scenario, ScenarioError, ValidatorMode};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("episode is over; the agent has stopped")]
    EpisodeOver,
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("invalid world: {0}")]
    InvalidWorld(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectKind {
    /// A physical object: occupies its cell for the depth sensor.
    #[default]
    Object,
    /// A room or area label; visible but transparent.
    Region,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldObject {
    pub label: String,
    pub position: Point,
    #[serde(default)]
    pub kind: ObjectKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct World {
    pub name: String,
    pub truth: CostMap,
    pub objects: Vec<WorldObject>,
    object_cells: BTreeSet<Cell>,
}

impl World {
    pub fn new(name: impl Into<String>, truth: CostMap, objects: Vec<WorldObject>) -> Result<Self, SimError> {
        let mut object_cells = BTreeSet::new();
        for o in &objects {
            let cell = truth.meta.world_to_grid(o.position)?;
            if !truth.is_traversable(cell) || truth.is_unknown(cell) {
                return Err(SimError::InvalidWorld(format!(
                    "{} at ({}, {}) is not on known traversable ground",
                    o.label, o.position.x, o.position.y
                )));
            }
            if o.kind == ObjectKind::Object {
                object_cells.insert(cell);
            }
        }
        Ok(Self {
            name: name.into(),
            truth,
            objects,
            object_cells,
        })
    }

    pub fn objects_labeled<'a>(&'a self, label: &'a str) -> impl Iterator<Item = &'a WorldObject> + 'a {
        self.objects.iter().filter(move |o| o.label == label)
    }

    pub fn is_object_cell(&self, cell: Cell) -> bool {
        self.object_cells.contains(&cell)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub step_size: f64,
    pub turn_deg: f64,
    pub fov_deg: f64,
    pub ray_spacing_deg: f64,
    pub max_range: f64,
    pub success_radius: f64,
    /// The agent stops once this close to the point it believes is the goal.
    pub stop_radius: f64,
    /// Actions executed between observations.
    pub observe_every: u32,
    pub min_frontier_size: usize,
    /// Pure-pursuit lookahead along the planned path, meters.
    pub lookahead: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            step_size: 0.25,
            turn_deg: 30.0,
            fov_deg: 90.0,
            ray_spacing_deg: 1.0,
            max_range: 5.0,
            success_radius: 1.0,
            stop_radius: 0.8,
            observe_every: 4,
            min_frontier_size: crate::frontier::DEFAULT_MIN_CLUSTER_SIZE,
            lookahead: 0.5,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), String> {
        let positive = [
            ("step_size", self.step_size),
            ("turn_deg", self.turn_deg),
            ("fov_deg", self.fov_deg),
            ("ray_spacing_deg", self.ray_spacing_deg),
            ("max_range", self.max_range),
            ("success_radius", self.success_radius),
            ("stop_radius", self.stop_radius),
            ("lookahead", self.lookahead),
        ];
        for (name, v) in positive {
            if !v.is_finite() || v <= 0.0 {
                return Err(format!("{name} must be positive, got {v}"));
            }
        }
        if self.fov_deg >= 360.0 {
            return Err(format!("fov_deg must be below 360, got {}", self.fov_deg));
        }
        if self.observe_every == 0 || self.min_frontier_size == 0 {
            return Err("observe_every and min_frontier_size must be at least 1".into());
        }
        Ok(())
    }

    pub fn fov(&self) -> f64 {
        self.fov_deg.to_radians()
    }

    pub fn turn(&self) -> f64 {
        self.turn_deg.to_radians()
    }

    /// Ray bearings from the right edge of the view to the left.
    pub fn bearings(&self) -> Vec<f64> {
        let n = (self.fov_deg / self.ray_spacing_deg).round() as usize;
        (0..=n)
            .map(|i| (-self.fov_deg / 2.0 + i as f64 * self.fov_deg / n as f64).to_radians())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Forward,
    RotateLeft,
    RotateRight,
    Stop,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    pub pose: Pose,
    /// Meters actually moved.
    pub traveled: f64,
    pub steps: u32,
    pub stopped: bool,
    /// Ground-truth cell that stopped the last forward action, if any.
    pub bumped: Option<Cell>,
}

impl AgentState {
    pub fn new(pose: Pose) -> Self {
        Self {
            pose,
            traveled: 0.0,
            steps: 0,
            stopped: false,
            bumped: None,
        }
    }
}

/// First ground-truth cell that blocks a straight move of `dist` meters,
/// or `Ok(None)` if the move is clear.
fn sweep_blocker(truth: &CostMap, pose: &Pose, dist: f64) -> Result<Option<Cell>, ()> {
    let end = Point::new(pose.x + dist * pose.theta.cos(), pose.y + dist * pose.theta.sin());
    let end_cell = truth.meta.world_to_grid(end).map_err(|_| ())?;
    let blocker = trace_ray(&truth.meta, pose.position(), pose.theta, dist)
        .into_iter()
        .filter(|s| !s.is_grazing() && s.t_enter < dist)
        .map(|s| s.cell)
        .chain(std::iter::once(end_cell))
        .find(|&c| truth.is_lethal(c));
    Ok(blocker)
}

/// Whether a straight move is free of cells that `cm` marks lethal.
pub fn sweep_is_clear(cm: &CostMap, pose: &Pose, dist: f64) -> bool {
    matches!(sweep_blocker(cm, pose, dist), Ok(None))
}

pub fn step(world: &World, st: &AgentState, action: Action, cfg: &SimConfig) -> Result<AgentState, SimError> {
    if st.stopped {
        return Err(SimError::EpisodeOver);
    }
    let mut next = st.clone();
    next.steps += 1;
    next.bumped = None;
    let p = st.pose;
    match action {
        Action::RotateLeft => next.pose = Pose::new(p.x, p.y, p.theta + cfg.turn()),
        Action::RotateRight => next.pose = Pose::new(p.x, p.y, p.theta - cfg.turn()),
        Action::Stop => next.stopped = true,
        Action::Forward => match sweep_blocker(&world.truth, &p, cfg.step_size) {
            Ok(None) => {
                next.pose = Pose::new(
                    p.x + cfg.step_size * p.theta.cos(),
                    p.y + cfg.step_size * p.theta.sin(),
                    p.theta,
                );
                next.traveled += cfg.step_size;
            }
            Ok(Some(cell)) => next.bumped = Some(cell),
            // leaving the map: nothing to remember, just refuse
            Err(()) => {}
        },
    }
    Ok(next)
}

/// Cast the depth scan against ground truth and list the visible objects.
pub fn observe(world: &World, pose: &Pose, cfg: &SimConfig) -> Result<(DepthScan, Vec<VisibleObject>), SimError> {
    let meta = world.truth.meta;
    let own = meta.world_to_grid(pose.position())?;
    let rays = cfg
        .bearings()
        .into_iter()
        .map(|bearing| Ray {
            bearing,
            range: cast(world, pose, own, pose.theta + bearing, cfg.max_range),
        })
        .collect();
    let scan = DepthScan {
        fov: cfg.fov(),
        max_range: cfg.max_range,
        rays,
    };
    let mut visible = Vec::new();
    for o in &world.objects {
        let d = pose.position().dist(o.position);
        if d > cfg.max_range || d < 1e-9 {
            continue;
        }
        let angle = (o.position.y - pose.y).atan2(o.position.x - pose.x);
        let bearing = normalize_angle(angle - pose.theta);
        if bearing.abs() > cfg.fov() / 2.0 + 1e-9 {
            continue;
        }
        if line_is_open(world, pose, own, angle, d, meta.world_to_grid(o.position)?) {
            visible.push(VisibleObject {
                label: o.label.clone(),
                bearing,
                range: d,
            });
        }
    }
    Ok((scan, visible))
}

/// Range of one ray: the entry distance of the first lethal cell, or the
/// middle of the first object cell crossed, else `max_range`.
fn cast(world: &World, pose: &Pose, own: Cell, angle: f64, max_range: f64) -> f64 {
    for s in trace_ray(&world.truth.meta, pose.position(), angle, max_range) {
        if s.is_grazing() || s.t_enter >= max_range {
            continue;
        }
        if world.truth.is_lethal(s.cell) {
            return s.t_enter;
        }
        if s.cell != own && world.is_object_cell(s.cell) {
            let mid = (s.t_enter + s.t_exit) / 2.0;
            if mid < max_range {
                return mid;
            }
        }
    }
    max_range
}

fn line_is_open(world: &World, pose: &Pose, own: Cell, angle: f64, d: f64, target: Cell) -> bool {
    for s in trace_ray(&world.truth.meta, pose.position(), angle, d) {
        if s.cell == target {
            return true;
        }
        if s.is_grazing() {
            continue;
        }
        if world.truth.is_lethal(s.cell) || (s.cell != own && world.is_object_cell(s.cell)) {
            return false;
        }
    }
    true
}
