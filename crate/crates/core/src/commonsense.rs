//! Commonsense frontier selection from a goal/context co-occurrence table.
//!
//! A frontier scores `w_s * best - w_d * distance`, where `best` is the
//! largest `affinity(goal, label) * confidence` over semantic labels within
//! the influence radius of its centroid.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frontier::Frontier;
use crate::grid::{Pose, SemanticMap};

const DEFAULT_TABLE: &str = include_str!("../data/cooccurrence.csv");

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("no frontiers to choose from")]
    NoFrontiers,
    #[error("{frontiers} frontiers but {scores} scores")]
    LengthMismatch { frontiers: usize, scores: usize },
    #[error("invalid policy config: {0}")]
    InvalidConfig(String),
    #[error("co-occurrence table line {line}: {message}")]
    Table { line: u64, message: String },
    #[error("reading co-occurrence table: {0}")]
    Io(#[from] std::io::Error),
}

/// Affinity in `[0, 1]` for each `(goal, context label)` pair. Missing
/// pairs have affinity 0.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CoOccurrenceTable {
    entries: BTreeMap<(String, String), f64>,
}

impl CoOccurrenceTable {
    /// The table bundled with the crate.
    pub fn builtin() -> Self {
        Self::parse(DEFAULT_TABLE).expect("bundled table is valid")
    }

    pub fn load(path: &Path) -> Result<Self, PolicyError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Parse `goal,context,affinity` lines; `#` starts a comment line.
    pub fn parse(text: &str) -> Result<Self, PolicyError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .flexible(true)
            .from_reader(text.as_bytes());
        let mut table = Self::default();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| PolicyError::Table {
                line: e.position().map_or(0, |p| p.line()),
                message: e.to_string(),
            })?;
            let line = rec.position().map_or(0, |p| p.line());
            let err = |message: String| PolicyError::Table { line, message };
            if rec.len() != 3 {
                return Err(err(format!("expected 3 fields, found {}", rec.len())));
            }
            let affinity: f64 = rec[2].parse().map_err(|_| err(format!("bad affinity `{}`", &rec[2])))?;
            table.insert(&rec[0], &rec[1], affinity).map_err(|_| err(format!("affinity {affinity} outside [0, 1]")))?;
        }
        Ok(table)
    }

    pub fn insert(&mut self, goal: &str, context: &str, affinity: f64) -> Result<(), PolicyError> {
        if !(0.0..=1.0).contains(&affinity) {
            return Err(PolicyError::InvalidConfig(format!("affinity {affinity} outside [0, 1]")));
        }
        self.entries.insert((goal.to_string(), context.to_string()), affinity);
        Ok(())
    }

    pub fn affinity(&self, goal: &str, context: &str) -> f64 {
        self.entries
            .get(&(goal.to_string(), context.to_string()))
            .copied()
            .unwrap_or(0.0)
    }

    /// Context labels with nonzero affinity to `goal`, sorted.
    pub fn contexts_for(&self, goal: &str) -> Vec<String> {
        self.entries
            .iter()
            .filter(|((g, _), a)| g == goal && **a > 0.0)
            .map(|((_, c), _)| c.clone())
            .collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PolicyConfig {
    pub semantic_weight: f64,
    pub distance_weight: f64,
    /// Meters around the frontier centroid in which labels count.
    pub influence_radius: f64,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        Self {
            semantic_weight: 1.0,
            distance_weight: 0.2,
            influence_radius: 3.0,
        }
    }
}

impl PolicyConfig {
    pub fn validate(&self) -> Result<(), PolicyError> {
        for (name, v) in [
            ("semantic_weight", self.semantic_weight),
            ("distance_weight", self.distance_weight),
            ("influence_radius", self.influence_radius),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(PolicyError::InvalidConfig(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

pub fn score_frontier(
    f: &Frontier,
    sm: &SemanticMap,
    goal: &str,
    table: &CoOccurrenceTable,
    cfg: &PolicyConfig,
    robot: &Pose,
) -> f64 {
    let semantic = sm
        .iter()
        .filter(|(c, _, _)| sm.meta.grid_to_world(*c).dist(f.centroid) <= cfg.influence_radius)
        .map(|(_, label, conf)| table.affinity(goal, label) * conf)
        .fold(0.0, f64::max);
    cfg.semantic_weight * semantic - cfg.distance_weight * robot.position().dist(f.centroid)
}

/// Index of the best frontier: highest score, then larger size, then
/// smaller centroid `(x, y)`.
pub fn select_frontier(frontiers: &[Frontier], scores: &[f64]) -> Result<usize, PolicyError> {
    if frontiers.len() != scores.len() {
        return Err(PolicyError::LengthMismatch {
            frontiers: frontiers.len(),
            scores: scores.len(),
        });
    }
    (0..frontiers.len())
        .max_by(|&i, &j| {
            let (a, b) = (&frontiers[i], &frontiers[j]);
            scores[i]
                .total_cmp(&scores[j])
                .then(a.size.cmp(&b.size))
                .then(b.centroid.x.total_cmp(&a.centroid.x))
                .then(b.centroid.y.total_cmp(&a.centroid.y))
                .then(j.cmp(&i))
        })
        .ok_or(PolicyError::NoFrontiers)
}

/// Scores and picks frontiers. Implementations must be deterministic.
pub trait FrontierPolicy: Send + Sync {
    fn score(&self, f: &Frontier, sm: &SemanticMap, goal: &str, robot: &Pose) -> f64;

    /// Scores every frontier in place and returns the chosen index.
    fn choose(&self, frontiers: &mut [Frontier], sm: &SemanticMap, goal: &str, robot: &Pose) -> Result<usize, PolicyError> {
        let scores: Vec<f64> = frontiers.iter().map(|f| self.score(f, sm, goal, robot)).collect();
        for (f, s) in frontiers.iter_mut().zip(&scores) {
            f.score = Some(*s);
        }
        select_frontier(frontiers, &scores)
    }
}

/// The table-driven policy.
#[derive(Debug, Clone)]
pub struct CommonsensePolicy {
    pub table: CoOccurrenceTable,
    pub config: PolicyConfig,
}

impl CommonsensePolicy {
    pub fn new(table: CoOccurrenceTable, config: PolicyConfig) -> Result<Self, PolicyError> {
        config.validate()?;
        Ok(Self { table, config })
    }
}

impl FrontierPolicy for CommonsensePolicy {
    fn score(&self, f: &Frontier, sm: &SemanticMap, goal: &str, robot: &Pose) -> f64 {
        score_frontier(f, sm, goal, &self.table, &self.config, robot)
    }
}
