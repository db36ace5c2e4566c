//! Scripted backends that replay a recorded wire transcript.

use std::collections::VecDeque;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::wire::{detect_request, validate_request, DetectResponse, ValidateResponse};
use super::{Detection, Initiator, Observation, PerceptionError, Validator, Verdict};

pub const DETECT: &str = "/detect";
pub const VALIDATE: &str = "/validate";

/// One request/response pair. A `null` request matches anything.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exchange {
    pub endpoint: String,
    #[serde(default)]
    pub request: serde_json::Value,
    pub response: serde_json::Value,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub exchanges: Vec<Exchange>,
}

impl Transcript {
    pub fn load(path: &Path) -> Result<Self, PerceptionError> {
        let text = std::fs::read_to_string(path).map_err(|e| PerceptionError::Replay(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| PerceptionError::Replay(format!("{}: {e}", path.display())))
    }

    fn queue(&self, endpoint: &str) -> VecDeque<Exchange> {
        self.exchanges.iter().filter(|e| e.endpoint == endpoint).cloned().collect()
    }
}

fn next<Req: Serialize, Resp: for<'de> Deserialize<'de>>(
    queue: &mut VecDeque<Exchange>,
    endpoint: &str,
    req: &Req,
) -> Result<Resp, PerceptionError> {
    let ex = queue
        .pop_front()
        .ok_or_else(|| PerceptionError::Replay(format!("no {endpoint} exchange left")))?;
    if !ex.request.is_null() {
        let sent = serde_json::to_value(req).map_err(|e| PerceptionError::Replay(e.to_string()))?;
        if sent != ex.request {
            return Err(PerceptionError::Replay(format!("{endpoint} request {sent} does not match recorded {}", ex.request)));
        }
    }
    serde_json::from_value(ex.response).map_err(|e| PerceptionError::Replay(format!("{endpoint} response: {e}")))
}

pub struct ReplayInitiator {
    queue: VecDeque<Exchange>,
}

impl ReplayInitiator {
    pub fn new(t: &Transcript) -> Self {
        Self { queue: t.queue(DETECT) }
    }
}

impl Initiator for ReplayInitiator {
    fn detect(&mut self, obs: &Observation, prompts: &[String]) -> Result<Vec<Detection>, PerceptionError> {
        let resp: DetectResponse = next(&mut self.queue, DETECT, &detect_request(obs, prompts))?;
        Ok(resp.detections)
    }
}

pub struct ReplayValidator {
    queue: VecDeque<Exchange>,
}

impl ReplayValidator {
    pub fn new(t: &Transcript) -> Self {
        Self { queue: t.queue(VALIDATE) }
    }
}

impl Validator for ReplayValidator {
    fn validate(&mut self, obs: &Observation, dets: &[Detection], prompt: &str) -> Result<Verdict, PerceptionError> {
        let resp: ValidateResponse = next(&mut self.queue, VALIDATE, &validate_request(obs, dets, prompt))?;
        Ok(resp.into())
    }
}
