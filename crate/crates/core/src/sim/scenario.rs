//! Scenario files: JSON describing a world, a start pose, the goal category
//! and how the episode's perception and planning stack is built.
//!
//! ```json
//! {
//!   "name": "den_remote",
//!   "map": "den_remote.pgm",
//!   "start": [1.5, 2.0, 0.0],
//!   "goal_category": "remote",
//!   "objects": [{"label": "remote", "position": {"x": 4.05, "y": 3.05}}],
//!   "seeds": {"episode": 7},
//!   "perception": {"mode": "mock", "params": {"tpr": 1.0, "fpr": 0.0}},
//!   "planner": "medial",
//!   "max_steps": 500
//! }
//! ```
//!
//! Relative `map` and transcript paths resolve against the scenario file's
//! directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::commonsense::{CoOccurrenceTable, CommonsensePolicy, PolicyConfig, PolicyError};
use crate::grid::{CostMap, Pose};
use crate::mapio::{load_map, MapIoError};
use crate::perception::{
    DoublyRightConfig, FixedValidator, Initiator, MockConfig, MockInitiator, MockValidator, PerceptionError, ReplayInitiator,
    ReplayValidator, Transcript, Validator, WireClient,
};
use crate::planner::PlannerKind;

use super::episode::PolicyBundle;
use super::{SimConfig, SimError, World, WorldObject};

pub const DEFAULT_MAX_STEPS: u32 = 500;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Map(#[from] MapIoError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Perception(#[from] PerceptionError),
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValidatorMode {
    /// Stochastic mock driven by the scenario's mock parameters.
    #[default]
    Mock,
    Agree,
    Disagree,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum PerceptionSpec {
    Mock {
        #[serde(default)]
        params: MockConfig,
        #[serde(default)]
        validator: ValidatorMode,
    },
    Replay {
        transcript: PathBuf,
    },
    Wire {
        endpoint: String,
    },
}

impl Default for PerceptionSpec {
    fn default() -> Self {
        Self::Mock {
            params: MockConfig::default(),
            validator: ValidatorMode::Mock,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Seeds {
    #[serde(default)]
    pub episode: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub map: PathBuf,
    /// `[x, y, theta]` in meters and radians.
    pub start: [f64; 3],
    pub goal_category: String,
    pub objects: Vec<WorldObject>,
    #[serde(default)]
    pub seeds: Seeds,
    #[serde(default)]
    pub perception: PerceptionSpec,
    #[serde(default)]
    pub planner: PlannerKind,
    #[serde(default = "default_max_steps")]
    pub max_steps: u32,
    #[serde(default)]
    pub sim: SimConfig,
    #[serde(default)]
    pub policy: PolicyConfig,
    #[serde(default)]
    pub doubly_right: DoublyRightConfig,
    /// Directory that relative paths resolve against; set by [`Scenario::load`].
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_max_steps() -> u32 {
    DEFAULT_MAX_STEPS
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut s: Self = serde_json::from_str(&text).map_err(|source| ScenarioError::Json {
            path: path.to_path_buf(),
            source,
        })?;
        s.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        s.validate()?;
        Ok(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.goal_category.trim().is_empty() {
            return Err(ScenarioError::Invalid("goal_category is empty".into()));
        }
        if !self.start.iter().all(|v| v.is_finite()) {
            return Err(ScenarioError::Invalid("start pose is not finite".into()));
        }
        if !self.objects.iter().any(|o| o.label == self.goal_category) {
            return Err(ScenarioError::Invalid(format!("no `{}` object in the world", self.goal_category)));
        }
        self.sim.validate().map_err(ScenarioError::Invalid)?;
        self.policy.validate()?;
        if let PerceptionSpec::Mock { params, .. } = &self.perception {
            params.validate().map_err(ScenarioError::Invalid)?;
        }
        Ok(())
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn start_pose(&self) -> Pose {
        Pose::new(self.start[0], self.start[1], self.start[2])
    }

    pub fn load_world(&self) -> Result<World, ScenarioError> {
        let truth = load_map(&self.resolve(&self.map))?;
        self.world_from(truth)
    }

    pub fn world_from(&self, truth: CostMap) -> Result<World, ScenarioError> {
        let world = World::new(self.name.clone(), truth, self.objects.clone())?;
        let start = world.truth.meta.world_to_grid(self.start_pose().position()).map_err(SimError::from)?;
        if !world.truth.is_traversable(start) || world.truth.is_unknown(start) {
            return Err(ScenarioError::Invalid(format!("start cell {start:?} is not free ground")));
        }
        Ok(world)
    }

    /// Build the perception backends and frontier policy for one episode.
    pub fn bundle(&self, seed: u64, table: &CoOccurrenceTable) -> Result<PolicyBundle, ScenarioError> {
        let (initiator, validator): (Box<dyn Initiator>, Box<dyn Validator>) = match &self.perception {
            PerceptionSpec::Mock { params, validator } => {
                let v: Box<dyn Validator> = match validator {
                    ValidatorMode::Mock => Box::new(MockValidator::new(*params, seed)),
                    ValidatorMode::Agree => Box::new(FixedValidator::agree()),
                    ValidatorMode::Disagree => Box::new(FixedValidator::disagree()),
                };
                (Box::new(MockInitiator::new(*params, seed)), v)
            }
            PerceptionSpec::Replay { transcript } => {
                let t = Transcript::load(&self.resolve(transcript))?;
                (Box::new(ReplayInitiator::new(&t)), Box::new(ReplayValidator::new(&t)))
            }
            PerceptionSpec::Wire { endpoint } => (Box::new(WireClient::new(endpoint)), Box::new(WireClient::new(endpoint))),
        };
        Ok(PolicyBundle {
            initiator,
            validator,
            policy: Box::new(CommonsensePolicy::new(table.clone(), self.policy)?),
            context_labels: table.contexts_for(&self.goal_category),
            planner: self.planner,
            doubly_right: self.doubly_right,
        })
    }
}
