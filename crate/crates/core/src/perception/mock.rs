//! Seeded stochastic backends driven by the observation's ground-truth
//! visible-object list.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Decision, Detection, Initiator, Observation, PerceptionError, Validator, Verdict, VisibleObject};

/// A detection within this image-width fraction of a visible object with
/// the same label counts as a true detection.
pub const MATCH_TOLERANCE: f64 = 0.1;

const STREAM_INITIATOR: u64 = 1;
const STREAM_VALIDATOR: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MockConfig {
    /// Probability of detecting each visible prompted object.
    pub tpr: f64,
    /// Probability of a spurious detection for each prompt with nothing
    /// matching in view.
    pub fpr: f64,
    /// Probability that the validator rejects a false detection.
    pub catch_rate: f64,
    /// Probability that the validator accepts a true detection.
    pub accept_rate: f64,
}

impl Default for MockConfig {
    fn default() -> Self {
        Self {
            tpr: 1.0,
            fpr: 0.0,
            catch_rate: 1.0,
            accept_rate: 1.0,
        }
    }
}

impl MockConfig {
    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in [
            ("tpr", self.tpr),
            ("fpr", self.fpr),
            ("catch_rate", self.catch_rate),
            ("accept_rate", self.accept_rate),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(format!("{name} must lie in [0, 1], got {v}"));
            }
        }
        Ok(())
    }
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn true_match<'a>(obs: &'a Observation, det: &Detection) -> Option<&'a VisibleObject> {
    obs.visible
        .iter()
        .find(|v| v.label == det.label && (obs.image_x(v.bearing) - det.center_x()).abs() <= MATCH_TOLERANCE)
}

pub struct MockInitiator {
    cfg: MockConfig,
    rng: ChaCha8Rng,
}

impl MockInitiator {
    pub fn new(cfg: MockConfig, seed: u64) -> Self {
        Self {
            cfg,
            rng: stream(seed, STREAM_INITIATOR),
        }
    }
}

fn bbox_at(cx: f64, range: f64) -> [f64; 4] {
    let cx = cx.clamp(0.01, 0.99);
    let w = (0.3 / range.max(0.3)).min(0.3).min(2.0 * cx).min(2.0 * (1.0 - cx));
    let h = (2.0 * w).min(0.8);
    [cx - w / 2.0, 0.5 - h / 2.0, w, h]
}

impl Initiator for MockInitiator {
    fn detect(&mut self, obs: &Observation, prompts: &[String]) -> Result<Vec<Detection>, PerceptionError> {
        let mut out = Vec::new();
        let mut seen: Vec<&str> = Vec::new();
        for prompt in prompts {
            if seen.contains(&prompt.as_str()) {
                continue;
            }
            seen.push(prompt);
            let mut any = false;
            for v in obs.visible.iter().filter(|v| &v.label == prompt) {
                any = true;
                if self.rng.random_bool(self.cfg.tpr) {
                    out.push(Detection {
                        label: prompt.clone(),
                        bbox: bbox_at(obs.image_x(v.bearing), v.range),
                        confidence: 0.9,
                    });
                }
            }
            if !any && self.rng.random_bool(self.cfg.fpr) {
                let cx = self.rng.random_range(0.05..0.95);
                out.push(Detection {
                    label: prompt.clone(),
                    bbox: bbox_at(cx, 2.0),
                    confidence: self.rng.random_range(0.5..0.9),
                });
            }
        }
        Ok(out)
    }
}

pub struct MockValidator {
    cfg: MockConfig,
    rng: ChaCha8Rng,
}

impl MockValidator {
    pub fn new(cfg: MockConfig, seed: u64) -> Self {
        Self {
            cfg,
            rng: stream(seed, STREAM_VALIDATOR),
        }
    }
}

impl Validator for MockValidator {
    /// Disagrees if it rejects any detection. Every detection draws once,
    /// so the stream advances the same way whatever the outcome.
    fn validate(&mut self, obs: &Observation, dets: &[Detection], _prompt: &str) -> Result<Verdict, PerceptionError> {
        let mut rejected = 0;
        for d in dets {
            let reject = if true_match(obs, d).is_some() {
                !self.rng.random_bool(self.cfg.accept_rate)
            } else {
                self.rng.random_bool(self.cfg.catch_rate)
            };
            rejected += usize::from(reject);
        }
        Ok(if rejected == 0 {
            Verdict::agree()
        } else {
            Verdict {
                decision: Decision::Disagree,
                rationale: Some(format!("{rejected} of {} detections rejected", dets.len())),
            }
        })
    }
}

/// Validator that always returns the same decision.
#[derive(Debug, Clone, Copy)]
pub struct FixedValidator(pub Decision);

impl FixedValidator {
    pub fn agree() -> Self {
        Self(Decision::Agree)
    }

    pub fn disagree() -> Self {
        Self(Decision::Disagree)
    }
}

impl Validator for FixedValidator {
    fn validate(&mut self, _: &Observation, _: &[Detection], _: &str) -> Result<Verdict, PerceptionError> {
        Ok(Verdict {
            decision: self.0,
            rationale: None,
        })
    }
}
