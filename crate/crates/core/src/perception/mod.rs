//! Dual-verification perception: an initiator detector proposes detections
//! and a validator confirms or rejects them before the goal flag is raised.

pub mod mock;
pub mod replay;
pub mod wire;

use base64::Engine;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{DepthScan, LabelHit, Pose};

pub use mock::{FixedValidator, MockConfig, MockInitiator, MockValidator};
pub use replay::{Exchange, ReplayInitiator, ReplayValidator, Transcript};
pub use wire::WireClient;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PerceptionError {
    #[error("perception backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error("prompt set needs at least one object prompt")]
    EmptyPrompts,
    #[error("invalid detection: {0}")]
    InvalidDetection(String),
    #[error("replay transcript exhausted or out of order: {0}")]
    Replay(String),
}

/// Camera frame payload: an opaque identifier or the encoded image bytes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ImageRef {
    Id(String),
    Bytes(Vec<u8>),
}

impl ImageRef {
    /// The string sent in the wire protocol's `image` field.
    pub fn to_wire(&self) -> String {
        match self {
            Self::Id(s) => s.clone(),
            Self::Bytes(b) => base64::engine::general_purpose::STANDARD.encode(b),
        }
    }
}

/// Ground truth about an object in view, used by the mock backends in
/// place of a rendered image.
#[derive(Debug, Clone, PartialEq)]
pub struct VisibleObject {
    pub label: String,
    /// Radians relative to the heading, counter-clockwise.
    pub bearing: f64,
    pub range: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub image: ImageRef,
    pub depth: DepthScan,
    pub pose: Pose,
    pub step: u64,
    pub visible: Vec<VisibleObject>,
}

impl Observation {
    /// Horizontal image coordinate in `[0, 1]` of an agent-frame bearing;
    /// 0 is the left edge.
    pub fn image_x(&self, bearing: f64) -> f64 {
        0.5 - bearing / self.depth.fov
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptSet {
    pub object_prompts: Vec<String>,
    pub validation_prompt: String,
}

impl PromptSet {
    pub fn new(object_prompts: Vec<String>, validation_prompt: impl Into<String>) -> Result<Self, PerceptionError> {
        let p = Self {
            object_prompts,
            validation_prompt: validation_prompt.into(),
        };
        p.validate()?;
        Ok(p)
    }

    /// Prompts for a single goal category.
    pub fn for_goal(goal: &str) -> Self {
        Self {
            object_prompts: vec![goal.to_string()],
            validation_prompt: format!("Is there a {goal} inside the marked boxes?"),
        }
    }

    pub fn validate(&self) -> Result<(), PerceptionError> {
        if self.object_prompts.is_empty() {
            return Err(PerceptionError::EmptyPrompts);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub label: String,
    /// Normalized `[x, y, w, h]`, origin at the top-left image corner.
    pub bbox: [f64; 4],
    pub confidence: f64,
}

impl Detection {
    pub fn validate(&self) -> Result<(), PerceptionError> {
        let [x, y, w, h] = self.bbox;
        let inside = [x, y, w, h].iter().all(|v| v.is_finite() && *v >= 0.0) && x + w <= 1.0 + 1e-9 && y + h <= 1.0 + 1e-9;
        if !inside {
            return Err(PerceptionError::InvalidDetection(format!("bbox {:?} leaves the unit square", self.bbox)));
        }
        if !(0.0..=1.0).contains(&self.confidence) {
            return Err(PerceptionError::InvalidDetection(format!("confidence {}", self.confidence)));
        }
        Ok(())
    }

    /// Horizontal center of the box.
    pub fn center_x(&self) -> f64 {
        self.bbox[0] + self.bbox[2] / 2.0
    }

    pub fn as_label_hit(&self) -> LabelHit<'_> {
        LabelHit {
            label: &self.label,
            image_x: self.center_x(),
            confidence: self.confidence,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Agree,
    Disagree,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub decision: Decision,
    pub rationale: Option<String>,
}

impl Verdict {
    pub fn agree() -> Self {
        Self {
            decision: Decision::Agree,
            rationale: None,
        }
    }

    pub fn disagree() -> Self {
        Self {
            decision: Decision::Disagree,
            rationale: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationOutcome {
    pub goal: bool,
    pub accepted: Vec<Detection>,
    pub attempts: u32,
}

/// Object detector proposing candidate detections.
pub trait Initiator: Send {
    fn detect(&mut self, obs: &Observation, prompts: &[String]) -> Result<Vec<Detection>, PerceptionError>;
}

/// Second opinion on a set of detections.
pub trait Validator: Send {
    fn validate(&mut self, obs: &Observation, dets: &[Detection], prompt: &str) -> Result<Verdict, PerceptionError>;
}

impl<T: Initiator + ?Sized> Initiator for Box<T> {
    fn detect(&mut self, obs: &Observation, prompts: &[String]) -> Result<Vec<Detection>, PerceptionError> {
        (**self).detect(obs, prompts)
    }
}

impl<T: Validator + ?Sized> Validator for Box<T> {
    fn validate(&mut self, obs: &Observation, dets: &[Detection], prompt: &str) -> Result<Verdict, PerceptionError> {
        (**self).validate(obs, dets, prompt)
    }
}

pub fn initiate(obs: &Observation, prompts: &PromptSet, backend: &mut dyn Initiator) -> Result<Vec<Detection>, PerceptionError> {
    prompts.validate()?;
    let dets = backend.detect(obs, &prompts.object_prompts)?;
    for d in &dets {
        d.validate()?;
    }
    Ok(dets)
}

pub fn validate(obs: &Observation, dets: &[Detection], prompt: &str, backend: &mut dyn Validator) -> Result<Verdict, PerceptionError> {
    backend.validate(obs, dets, prompt)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DoublyRightConfig {
    pub max_reassessments: u32,
    /// Consult the validator even when the initiator found nothing, and
    /// raise the goal flag if it agrees. Off by default: an empty detection
    /// set cannot certify that the target is present.
    pub validate_empty: bool,
}

impl Default for DoublyRightConfig {
    fn default() -> Self {
        Self {
            max_reassessments: 2,
            validate_empty: false,
        }
    }
}

/// Detect, validate, and re-detect on disagreement, at most
/// `max_reassessments` extra times.
pub fn doubly_right(
    obs: &Observation,
    prompts: &PromptSet,
    init: &mut dyn Initiator,
    val: &mut dyn Validator,
    cfg: &DoublyRightConfig,
) -> Result<VerificationOutcome, PerceptionError> {
    let limit = cfg.max_reassessments + 1;
    for attempt in 1..=limit {
        let dets = initiate(obs, prompts, init)?;
        if dets.is_empty() && !cfg.validate_empty {
            return Ok(VerificationOutcome {
                goal: false,
                accepted: Vec::new(),
                attempts: attempt,
            });
        }
        if validate(obs, &dets, &prompts.validation_prompt, val)?.decision == Decision::Agree {
            return Ok(VerificationOutcome {
                goal: true,
                accepted: dets,
                attempts: attempt,
            });
        }
    }
    Ok(VerificationOutcome {
        goal: false,
        accepted: Vec::new(),
        attempts: limit,
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub fn obs_with(visible: Vec<VisibleObject>) -> Observation {
        Observation {
            image: ImageRef::Id("test/0".into()),
            depth: DepthScan {
                fov: std::f64::consts::FRAC_PI_2,
                max_range: 5.0,
                rays: Vec::new(),
            },
            pose: Pose::new(0.0, 0.0, 0.0),
            step: 0,
            visible,
        }
    }

    pub fn det(label: &str, cx: f64) -> Detection {
        Detection {
            label: label.into(),
            bbox: [cx - 0.05, 0.4, 0.1, 0.2],
            confidence: 0.8,
        }
    }

    struct Script(Vec<Vec<Detection>>);

    impl Initiator for Script {
        fn detect(&mut self, _: &Observation, _: &[String]) -> Result<Vec<Detection>, PerceptionError> {
            Ok(if self.0.is_empty() { Vec::new() } else { self.0.remove(0) })
        }
    }

    #[test]
    fn detection_validation() {
        assert!(det("mug", 0.5).validate().is_ok());
        assert!(det("mug", 0.99).validate().is_err());
        let mut d = det("mug", 0.5);
        d.confidence = 1.2;
        assert!(d.validate().is_err());
        assert!((det("mug", 0.3).center_x() - 0.3).abs() < 1e-12);
    }

    #[test]
    fn prompts_need_objects() {
        assert_eq!(PromptSet::new(vec![], "?"), Err(PerceptionError::EmptyPrompts));
        assert!(PromptSet::new(vec!["mug".into()], "?").is_ok());
    }

    #[test]
    fn agree_first_time() {
        let obs = obs_with(vec![]);
        let mut init = Script(vec![vec![det("mug", 0.5)]]);
        let out = doubly_right(&obs, &PromptSet::for_goal("mug"), &mut init, &mut FixedValidator::agree(), &DoublyRightConfig::default()).unwrap();
        assert!(out.goal);
        assert_eq!(out.attempts, 1);
        assert_eq!(out.accepted.len(), 1);
    }

    #[test]
    fn empty_short_circuits() {
        let obs = obs_with(vec![]);
        let out = doubly_right(&obs, &PromptSet::for_goal("mug"), &mut Script(vec![]), &mut FixedValidator::agree(), &DoublyRightConfig::default()).unwrap();
        assert_eq!(out, VerificationOutcome { goal: false, accepted: vec![], attempts: 1 });
        let literal = DoublyRightConfig {
            validate_empty: true,
            ..Default::default()
        };
        let out = doubly_right(&obs, &PromptSet::for_goal("mug"), &mut Script(vec![]), &mut FixedValidator::agree(), &literal).unwrap();
        assert!(out.goal && out.accepted.is_empty());
    }

    #[test]
    fn disagreement_exhausts_attempts() {
        let obs = obs_with(vec![]);
        let mut init = Script(vec![vec![det("mug", 0.5)]; 10]);
        let cfg = DoublyRightConfig {
            max_reassessments: 3,
            ..Default::default()
        };
        let out = doubly_right(&obs, &PromptSet::for_goal("mug"), &mut init, &mut FixedValidator::disagree(), &cfg).unwrap();
        assert_eq!(out, VerificationOutcome { goal: false, accepted: vec![], attempts: 4 });
    }

    #[test]
    fn reassessment_can_recover() {
        // first proposal rejected, second one empty: stop at attempt 2
        struct Once(bool);
        impl Validator for Once {
            fn validate(&mut self, _: &Observation, _: &[Detection], _: &str) -> Result<Verdict, PerceptionError> {
                let first = !self.0;
                self.0 = true;
                Ok(if first { Verdict::disagree() } else { Verdict::agree() })
            }
        }
        let obs = obs_with(vec![]);
        let mut init = Script(vec![vec![det("mug", 0.2)], vec![]]);
        let out = doubly_right(&obs, &PromptSet::for_goal("mug"), &mut init, &mut Once(false), &DoublyRightConfig::default()).unwrap();
        assert_eq!(out.attempts, 2);
        assert!(!out.goal);
        let mut init = Script(vec![vec![det("mug", 0.2)], vec![det("mug", 0.6)]]);
        let out = doubly_right(&obs, &PromptSet::for_goal("mug"), &mut init, &mut Once(false), &DoublyRightConfig::default()).unwrap();
        assert!(out.goal);
        assert_eq!(out.accepted, vec![det("mug", 0.6)]);
    }

    #[test]
    fn image_ref_wire_form() {
        assert_eq!(ImageRef::Id("a/1".into()).to_wire(), "a/1");
        assert_eq!(ImageRef::Bytes(b"hi".to_vec()).to_wire(), "aGk=");
    }
}
