//! Layered 2D grid world model.
//!
//! A [`CostMap`] stores one byte of traversal cost per cell. The encoding is
//! fixed across the crate:
//!
//! | value     | meaning                                   |
//! |-----------|-------------------------------------------|
//! | 0         | free                                      |
//! | 1..=252   | traversable with cost                     |
//! | 253, 254  | lethal (the default lethal set)           |
//! | 255       | unknown, traversable at a high cost       |
//!
//! Grid coordinates are `(row, col)` where `col` grows with metric `x` and
//! `row` grows with metric `y`. Everything that needs a deterministic order
//! uses the derived `(row, col)` ordering of [`Cell`].

use std::collections::{BTreeMap, VecDeque};
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const COST_FREE: u8 = 0;
pub const COST_INSCRIBED: u8 = 253;
pub const COST_LETHAL: u8 = 254;
pub const COST_UNKNOWN: u8 = 255;

/// Cost used by planners when they step onto an unknown (255) cell.
pub const UNKNOWN_TRAVERSAL_COST: f64 = 200.0;

/// 8-connectivity, used for components, frontier adjacency and skeleton paths.
pub const NEIGHBORS_8: [(isize, isize); 8] = [
    (-1, -1),
    (-1, 0),
    (-1, 1),
    (0, -1),
    (0, 1),
    (1, -1),
    (1, 0),
    (1, 1),
];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("invalid grid metadata: {0}")]
    InvalidMeta(String),
    #[error("point ({x:.3}, {y:.3}) is outside the map")]
    OutOfBounds { x: f64, y: f64 },
    #[error("seed cell {0:?} is not traversable")]
    SeedNotTraversable(Cell),
    #[error("pose ({x:.3}, {y:.3}) is outside the map")]
    PoseOutOfBounds { x: f64, y: f64 },
    #[error("cost layer has {got} cells, expected {expected}")]
    SizeMismatch { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Cell {
    pub row: usize,
    pub col: usize,
}

impl Cell {
    pub const fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }

    /// Offset by `(drow, dcol)`, or `None` if the result would be negative.
    pub fn offset(self, drow: isize, dcol: isize) -> Option<Cell> {
        let row = self.row.checked_add_signed(drow)?;
        let col = self.col.checked_add_signed(dcol)?;
        Some(Cell { row, col })
    }

    pub fn is_adjacent8(self, other: Cell) -> bool {
        self != other && self.row.abs_diff(other.row) <= 1 && self.col.abs_diff(other.col) <= 1
    }

    /// Squared Euclidean distance in cell units.
    pub fn dist2(self, other: Cell) -> usize {
        let dr = self.row.abs_diff(other.row);
        let dc = self.col.abs_diff(other.col);
        dr * dr + dc * dc
    }

    pub fn dist(self, other: Cell) -> f64 {
        (self.dist2(other) as f64).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Normalize an angle to `(-pi, pi]`.
pub fn normalize_angle(theta: f64) -> f64 {
    let mut t = theta % (2.0 * PI);
    if t <= -PI {
        t += 2.0 * PI;
    } else if t > PI {
        t -= 2.0 * PI;
    }
    t
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self {
            x,
            y,
            theta: normalize_angle(theta),
        }
    }

    pub fn position(&self) -> Point {
        Point::new(self.x, self.y)
    }
}

/// Size and georeferencing of a grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridMeta {
    pub width: usize,
    pub height: usize,
    /// Meters per cell.
    pub resolution: f64,
    /// Metric coordinates of the outer corner of cell (0, 0).
    pub origin: Point,
}

impl GridMeta {
    pub fn new(width: usize, height: usize, resolution: f64, origin: Point) -> Result<Self, GridError> {
        if width == 0 || height == 0 {
            return Err(GridError::InvalidMeta(format!("empty grid {width}x{height}")));
        }
        if !(resolution.is_finite() && resolution > 0.0) {
            return Err(GridError::InvalidMeta(format!("resolution {resolution} must be > 0")));
        }
        if !(origin.x.is_finite() && origin.y.is_finite()) {
            return Err(GridError::InvalidMeta("non-finite origin".into()));
        }
        Ok(Self {
            width,
            height,
            resolution,
            origin,
        })
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, cell: Cell) -> bool {
        cell.row < self.height && cell.col < self.width
    }

    /// Metric point to the cell containing it.
    pub fn world_to_grid(&self, p: Point) -> Result<Cell, GridError> {
        // A tiny epsilon keeps exact multiples of the resolution (1.0 / 0.05)
        // from flooring one cell short.
        let fx = ((p.x - self.origin.x) / self.resolution + 1e-9).floor();
        let fy = ((p.y - self.origin.y) / self.resolution + 1e-9).floor();
        if !(fx.is_finite() && fy.is_finite())
            || fx < 0.0
            || fy < 0.0
            || fx >= self.width as f64
            || fy >= self.height as f64
        {
            return Err(GridError::OutOfBounds { x: p.x, y: p.y });
        }
        Ok(Cell::new(fy as usize, fx as usize))
    }

    /// Metric center of a cell.
    pub fn grid_to_world(&self, cell: Cell) -> Point {
        Point::new(
            self.origin.x + (cell.col as f64 + 0.5) * self.resolution,
            self.origin.y + (cell.row as f64 + 0.5) * self.resolution,
        )
    }

    /// In-bounds 8-neighbors in `(row, col)` order.
    pub fn neighbors8(&self, cell: Cell) -> impl Iterator<Item = Cell> + '_ {
        NEIGHBORS_8
            .iter()
            .filter_map(move |&(dr, dc)| cell.offset(dr, dc))
            .filter(move |c| self.contains(*c))
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> {
        let (w, h) = (self.width, self.height);
        (0..h).flat_map(move |row| (0..w).map(move |col| Cell::new(row, col)))
    }
}

/// Dense row-major 2D array addressed by [`Cell`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Grid<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

pub type Mask = Grid<bool>;

impl<T: Clone> Grid<T> {
    pub fn new(width: usize, height: usize, fill: T) -> Self {
        Self {
            width,
            height,
            data: vec![fill; width * height],
        }
    }
}

impl<T> Grid<T> {
    pub fn from_vec(width: usize, height: usize, data: Vec<T>) -> Result<Self, GridError> {
        if data.len() != width * height {
            return Err(GridError::SizeMismatch {
                expected: width * height,
                got: data.len(),
            });
        }
        Ok(Self { width, height, data })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(Cell) -> T) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for row in 0..height {
            for col in 0..width {
                data.push(f(Cell::new(row, col)));
            }
        }
        Self { width, height, data }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn contains(&self, cell: Cell) -> bool {
        cell.row < self.height && cell.col < self.width
    }

    pub fn get(&self, cell: Cell) -> Option<&T> {
        if self.contains(cell) {
            Some(&self.data[cell.row * self.width + cell.col])
        } else {
            None
        }
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> {
        let (w, h) = (self.width, self.height);
        (0..h).flat_map(move |row| (0..w).map(move |col| Cell::new(row, col)))
    }

    pub fn iter(&self) -> impl Iterator<Item = (Cell, &T)> {
        let w = self.width;
        self.data
            .iter()
            .enumerate()
            .map(move |(i, v)| (Cell::new(i / w, i % w), v))
    }

    pub fn map<U>(&self, f: impl Fn(&T) -> U) -> Grid<U> {
        Grid {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn neighbors8(&self, cell: Cell) -> impl Iterator<Item = Cell> + '_ {
        NEIGHBORS_8
            .iter()
            .filter_map(move |&(dr, dc)| cell.offset(dr, dc))
            .filter(move |c| self.contains(*c))
    }
}

impl<T> std::ops::Index<Cell> for Grid<T> {
    type Output = T;

    fn index(&self, cell: Cell) -> &T {
        assert!(self.contains(cell), "cell {cell:?} out of {}x{} grid", self.width, self.height);
        &self.data[cell.row * self.width + cell.col]
    }
}

impl<T> std::ops::IndexMut<Cell> for Grid<T> {
    fn index_mut(&mut self, cell: Cell) -> &mut T {
        assert!(self.contains(cell), "cell {cell:?} out of {}x{} grid", self.width, self.height);
        &mut self.data[cell.row * self.width + cell.col]
    }
}

impl Mask {
    pub fn count(&self) -> usize {
        self.data.iter().filter(|v| **v).count()
    }

    pub fn true_cells(&self) -> impl Iterator<Item = Cell> + '_ {
        self.iter().filter(|(_, v)| **v).map(|(c, _)| c)
    }

    pub fn is(&self, cell: Cell) -> bool {
        self.get(cell).copied().unwrap_or(false)
    }

    /// Parse a mask from rows of `#` (true) and `.` (false).
    pub fn from_ascii(text: &str) -> Self {
        let rows: Vec<&str> = text.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.chars().count());
        Grid::from_fn(width, height, |c| rows[c.row].as_bytes().get(c.col) == Some(&b'#'))
    }

    pub fn to_ascii(&self) -> String {
        let mut out = String::with_capacity((self.width + 1) * self.height);
        for row in 0..self.height {
            for col in 0..self.width {
                out.push(if self[Cell::new(row, col)] { '#' } else { '.' });
            }
            out.push('\n');
        }
        out
    }
}

/// Set of cost values treated as untraversable.
#[derive(Clone, Copy, PartialEq, Eq)]
pub struct LethalSet([bool; 256]);

impl LethalSet {
    pub fn empty() -> Self {
        Self([false; 256])
    }

    /// `min..=254`; unknown (255) is never lethal.
    pub fn from_min(min: u8) -> Self {
        let mut set = Self::empty();
        for v in min..COST_UNKNOWN {
            set.0[v as usize] = true;
        }
        set
    }

    pub fn contains(&self, cost: u8) -> bool {
        self.0[cost as usize]
    }

    pub fn insert(&mut self, cost: u8) {
        self.0[cost as usize] = true;
    }

    pub fn remove(&mut self, cost: u8) {
        self.0[cost as usize] = false;
    }

    /// Smallest lethal value, if any.
    pub fn min(&self) -> Option<u8> {
        (0..=255u8).find(|v| self.contains(*v))
    }
}

impl Default for LethalSet {
    fn default() -> Self {
        Self::from_min(COST_INSCRIBED)
    }
}

impl std::fmt::Debug for LethalSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_set()
            .entries((0..=255u8).filter(|v| self.contains(*v)))
            .finish()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostMap {
    pub meta: GridMeta,
    pub cost: Grid<u8>,
    pub lethal: LethalSet,
}

impl CostMap {
    pub fn new(meta: GridMeta, fill: u8) -> Self {
        Self {
            meta,
            cost: Grid::new(meta.width, meta.height, fill),
            lethal: LethalSet::default(),
        }
    }

    /// All-unknown map, the starting belief of an agent.
    pub fn unknown(meta: GridMeta) -> Self {
        Self::new(meta, COST_UNKNOWN)
    }

    pub fn from_grid(meta: GridMeta, cost: Grid<u8>, lethal: LethalSet) -> Result<Self, GridError> {
        if cost.width() != meta.width || cost.height() != meta.height {
            return Err(GridError::SizeMismatch {
                expected: meta.len(),
                got: cost.width() * cost.height(),
            });
        }
        Ok(Self { meta, cost, lethal })
    }

    pub fn get(&self, cell: Cell) -> u8 {
        self.cost[cell]
    }

    pub fn set(&mut self, cell: Cell, value: u8) {
        self.cost[cell] = value;
    }

    pub fn is_lethal(&self, cell: Cell) -> bool {
        self.lethal.contains(self.cost[cell])
    }

    pub fn is_unknown(&self, cell: Cell) -> bool {
        self.cost[cell] == COST_UNKNOWN
    }

    pub fn is_traversable(&self, cell: Cell) -> bool {
        self.meta.contains(cell) && !self.is_lethal(cell)
    }

    /// Cost a planner pays for entering `cell`; unknown cells are charged
    /// [`UNKNOWN_TRAVERSAL_COST`].
    pub fn traversal_cost(&self, cell: Cell) -> f64 {
        match self.cost[cell] {
            COST_UNKNOWN => UNKNOWN_TRAVERSAL_COST,
            c => f64::from(c),
        }
    }

    /// Multiplier applied to metric step length: `1 + cost / 100`.
    pub fn cost_factor(&self, cell: Cell) -> f64 {
        1.0 + self.traversal_cost(cell) / 100.0
    }

    pub fn unknown_count(&self) -> usize {
        self.cost.as_slice().iter().filter(|v| **v == COST_UNKNOWN).count()
    }

    /// Fill a rectangle of cells (inclusive bounds, clipped to the map).
    pub fn fill_rect(&mut self, r0: usize, c0: usize, r1: usize, c1: usize, value: u8) {
        for row in r0..=r1.min(self.meta.height - 1) {
            for col in c0..=c1.min(self.meta.width - 1) {
                self.cost[Cell::new(row, col)] = value;
            }
        }
    }

    /// Nearest cell to `from` (by Euclidean cell distance, ties by
    /// `(row, col)`) within `radius_m` for which `accept` holds.
    pub fn nearest_within(&self, from: Cell, radius_m: f64, accept: impl Fn(Cell) -> bool) -> Option<Cell> {
        let r = (radius_m / self.meta.resolution).floor() as isize;
        let r2 = (radius_m / self.meta.resolution).powi(2) + 1e-9;
        let mut best: Option<(usize, Cell)> = None;
        for dr in -r..=r {
            for dc in -r..=r {
                let Some(c) = from.offset(dr, dc) else { continue };
                if !self.meta.contains(c) || (c.dist2(from) as f64) > r2 || !accept(c) {
                    continue;
                }
                let key = (c.dist2(from), c);
                if best.is_none_or(|b| key < (b.0, b.1)) {
                    best = Some(key);
                }
            }
        }
        best.map(|(_, c)| c)
    }
}

/// Non-lethal cells, before any connectivity restriction.
pub fn traversable_mask(cm: &CostMap) -> Mask {
    cm.cost.map(|v| !cm.lethal.contains(*v))
}

/// The 8-connected component of `mask` containing `seed`.
pub fn reachable_component(mask: &Mask, seed: Cell) -> Result<Mask, GridError> {
    if !mask.is(seed) {
        return Err(GridError::SeedNotTraversable(seed));
    }
    let mut out = Grid::new(mask.width(), mask.height(), false);
    let mut queue = VecDeque::from([seed]);
    out[seed] = true;
    while let Some(c) = queue.pop_front() {
        for n in mask.neighbors8(c) {
            if mask[n] && !out[n] {
                out[n] = true;
                queue.push_back(n);
            }
        }
    }
    Ok(out)
}

/// Label every 8-connected component of `mask`. Returns the label grid
/// (0 = background, components numbered from 1 in scan order) and the count.
pub fn label_components(mask: &Mask) -> (Grid<u32>, u32) {
    let mut labels = Grid::new(mask.width(), mask.height(), 0u32);
    let mut next = 0;
    for start in mask.cells() {
        if !mask[start] || labels[start] != 0 {
            continue;
        }
        next += 1;
        labels[start] = next;
        let mut queue = VecDeque::from([start]);
        while let Some(c) = queue.pop_front() {
            for n in mask.neighbors8(c) {
                if mask[n] && labels[n] == 0 {
                    labels[n] = next;
                    queue.push_back(n);
                }
            }
        }
    }
    (labels, next)
}

/// One depth ray in the agent frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ray {
    /// Radians, counter-clockwise from the heading.
    pub bearing: f64,
    /// Meters; any value `>= max_range` means nothing was hit.
    pub range: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthScan {
    /// Horizontal field of view in radians, centered on the heading.
    pub fov: f64,
    pub max_range: f64,
    pub rays: Vec<Ray>,
}

impl DepthScan {
    pub fn is_hit(&self, ray: &Ray) -> bool {
        ray.range < self.max_range
    }

    /// Index of the ray whose bearing is closest to `bearing` (lowest index on ties).
    pub fn nearest_ray(&self, bearing: f64) -> Option<usize> {
        self.rays
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| {
                (a.bearing - bearing)
                    .abs()
                    .total_cmp(&(b.bearing - bearing).abs())
            })
            .map(|(i, _)| i)
    }
}

/// A cell crossed by a ray, with the entry and exit distances along it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayStep {
    pub cell: Cell,
    pub t_enter: f64,
    pub t_exit: f64,
}

impl RayStep {
    /// Rays that only graze a cell corner cross it with zero length; such
    /// cells neither block nor get carved.
    pub fn is_grazing(&self) -> bool {
        self.t_exit - self.t_enter < 1e-9
    }
}

/// Cells crossed by the ray from `origin` along `angle` (radians, world
/// frame), in order, until `max_t` meters or the map edge. Grid traversal
/// in the style of Amanatides & Woo; shared by the simulator's ray caster
/// and the belief update so both see the same cell sequence.
pub fn trace_ray(meta: &GridMeta, origin: Point, angle: f64, max_t: f64) -> Vec<RayStep> {
    let mut out = Vec::new();
    let Ok(mut cell) = meta.world_to_grid(origin) else {
        return out;
    };
    let (dx, dy) = (angle.cos(), angle.sin());
    let res = meta.resolution;
    let lx = (origin.x - meta.origin.x) / res;
    let ly = (origin.y - meta.origin.y) / res;
    let (step_x, mut t_max_x, t_delta_x) = axis_setup(lx, cell.col, dx, res);
    let (step_y, mut t_max_y, t_delta_y) = axis_setup(ly, cell.row, dy, res);
    let mut t = 0.0;
    loop {
        let t_exit = t_max_x.min(t_max_y);
        out.push(RayStep {
            cell,
            t_enter: t,
            t_exit,
        });
        if t_exit >= max_t {
            break;
        }
        let next = if t_max_x <= t_max_y {
            t_max_x += t_delta_x;
            cell.offset(0, step_x)
        } else {
            t_max_y += t_delta_y;
            cell.offset(step_y, 0)
        };
        match next {
            Some(c) if meta.contains(c) => cell = c,
            _ => break,
        }
        t = t_exit;
    }
    out
}

fn axis_setup(local: f64, index: usize, dir: f64, res: f64) -> (isize, f64, f64) {
    if dir > 1e-12 {
        let boundary = index as f64 + 1.0;
        (1, (boundary - local) * res / dir, res / dir)
    } else if dir < -1e-12 {
        let boundary = index as f64;
        (-1, (local - boundary) * res / -dir, res / -dir)
    } else {
        (0, f64::INFINITY, f64::INFINITY)
    }
}

/// Per-cell label layer with confidences.
#[derive(Debug, Clone, PartialEq)]
pub struct SemanticMap {
    pub meta: GridMeta,
    labels: BTreeMap<Cell, BTreeMap<String, f64>>,
}

impl SemanticMap {
    pub fn new(meta: GridMeta) -> Self {
        Self {
            meta,
            labels: BTreeMap::new(),
        }
    }

    /// Record `label` at `cell`, keeping the maximum confidence seen.
    pub fn write(&mut self, cell: Cell, label: &str, confidence: f64) -> Result<(), GridError> {
        if !self.meta.contains(cell) {
            let p = self.meta.grid_to_world(cell);
            return Err(GridError::OutOfBounds { x: p.x, y: p.y });
        }
        let confidence = if confidence.is_nan() { 0.0 } else { confidence.clamp(0.0, 1.0) };
        let entry = self
            .labels
            .entry(cell)
            .or_default()
            .entry(label.to_string())
            .or_insert(confidence);
        if confidence > *entry {
            *entry = confidence;
        }
        Ok(())
    }

    pub fn labels_at(&self, cell: Cell) -> Option<&BTreeMap<String, f64>> {
        self.labels.get(&cell)
    }

    pub fn confidence(&self, cell: Cell, label: &str) -> Option<f64> {
        self.labels.get(&cell)?.get(label).copied()
    }

    /// `(cell, label, confidence)` for every labeled cell, in cell order.
    pub fn iter(&self) -> impl Iterator<Item = (Cell, &str, f64)> {
        self.labels
            .iter()
            .flat_map(|(c, m)| m.iter().map(move |(l, v)| (*c, l.as_str(), *v)))
    }

    pub fn labeled_cells(&self) -> usize {
        self.labels.len()
    }
}

/// Minimal detection shape consumed by the semantic update; the perception
/// module's `Detection` converts into it.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelHit<'a> {
    pub label: &'a str,
    /// Horizontal image position of the detection center in `[0, 1]`,
    /// 0 at the left edge.
    pub image_x: f64,
    pub confidence: f64,
}

/// Rays are traced this far past their endpoint so that an endpoint lying
/// exactly on a cell boundary resolves to the cell it enters.
const ENDPOINT_SLACK: f64 = 1e-9;

/// Metric endpoint and cell that a detection at `image_x` projects to.
pub fn project_detection(meta: &GridMeta, scan: &DepthScan, pose: &Pose, image_x: f64) -> Option<(Point, Cell)> {
    let bearing = (0.5 - image_x) * scan.fov;
    let ray = scan.rays[scan.nearest_ray(bearing)?];
    let angle = pose.theta + ray.bearing;
    if scan.is_hit(&ray) {
        let hit = trace_ray(meta, pose.position(), angle, ray.range + ENDPOINT_SLACK)
            .into_iter()
            .find(|s| !s.is_grazing() && s.t_enter <= ray.range && ray.range < s.t_exit)?;
        let p = Point::new(pose.x + ray.range * angle.cos(), pose.y + ray.range * angle.sin());
        Some((p, hit.cell))
    } else {
        let p = Point::new(
            pose.x + scan.max_range * angle.cos(),
            pose.y + scan.max_range * angle.sin(),
        );
        meta.world_to_grid(p).ok().map(|c| (p, c))
    }
}

/// Carve the depth scan into the cost map and write detection labels into
/// the semantic map.
///
/// Cells crossed before a ray's endpoint become free unless already lethal;
/// the endpoint cell of a hit becomes [`COST_LETHAL`]. Max-range rays carve
/// up to the range limit and leave everything beyond untouched.
pub fn update_semantic(
    sm: &mut SemanticMap,
    cm: &mut CostMap,
    scan: &DepthScan,
    pose: &Pose,
    dets: &[LabelHit<'_>],
) -> Result<(), GridError> {
    let meta = cm.meta;
    if meta.world_to_grid(pose.position()).is_err() {
        return Err(GridError::PoseOutOfBounds { x: pose.x, y: pose.y });
    }
    for ray in &scan.rays {
        let hit = scan.is_hit(ray);
        let end = if hit { ray.range } else { scan.max_range };
        let angle = pose.theta + ray.bearing;
        for step in trace_ray(&meta, pose.position(), angle, end + ENDPOINT_SLACK) {
            if step.is_grazing() {
                continue;
            }
            if hit && step.t_enter <= end && end < step.t_exit {
                cm.set(step.cell, COST_LETHAL);
                break;
            }
            if step.t_enter >= end {
                break;
            }
            if !cm.is_lethal(step.cell) {
                cm.set(step.cell, COST_FREE);
            }
        }
    }
    for det in dets {
        if let Some((_, cell)) = project_detection(&meta, scan, pose, det.image_x) {
            sm.write(cell, det.label, det.confidence)?;
        }
    }
    Ok(())
}
