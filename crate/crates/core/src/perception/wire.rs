//! HTTP client for the two-endpoint perception protocol.
//!
//! `POST /detect` takes `{image, prompts}` and answers `{detections}`;
//! `POST /validate` takes `{image, detections, prompt}` and answers
//! `{decision, rationale}`. Any transport failure, timeout or non-2xx
//! status is reported as [`PerceptionError::BackendUnavailable`].

use std::time::Duration;

use serde::{Deserialize, Serialize};
use ureq::Agent;

use super::{Decision, Detection, Initiator, Observation, PerceptionError, Validator, Verdict};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(10);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectRequest {
    pub image: String,
    pub prompts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectResponse {
    pub detections: Vec<Detection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidateRequest {
    pub image: String,
    pub detections: Vec<Detection>,
    pub prompt: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidateResponse {
    pub decision: Decision,
    #[serde(default)]
    pub rationale: String,
}

impl From<ValidateResponse> for Verdict {
    fn from(r: ValidateResponse) -> Self {
        Self {
            decision: r.decision,
            rationale: (!r.rationale.is_empty()).then_some(r.rationale),
        }
    }
}

pub fn detect_request(obs: &Observation, prompts: &[String]) -> DetectRequest {
    DetectRequest {
        image: obs.image.to_wire(),
        prompts: prompts.to_vec(),
    }
}

pub fn validate_request(obs: &Observation, dets: &[Detection], prompt: &str) -> ValidateRequest {
    ValidateRequest {
        image: obs.image.to_wire(),
        detections: dets.to_vec(),
        prompt: prompt.to_string(),
    }
}

/// Blocking client; one instance can serve as both initiator and validator.
#[derive(Debug, Clone)]
pub struct WireClient {
    base: String,
    agent: Agent,
}

impl WireClient {
    pub fn new(endpoint: &str) -> Self {
        Self::with_timeout(endpoint, DEFAULT_TIMEOUT)
    }

    pub fn with_timeout(endpoint: &str, timeout: Duration) -> Self {
        let config = Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(true)
            .build();
        Self {
            base: endpoint.trim_end_matches('/').to_string(),
            agent: Agent::new_with_config(config),
        }
    }

    fn post<Req: Serialize, Resp: for<'de> Deserialize<'de>>(&self, path: &str, body: &Req) -> Result<Resp, PerceptionError> {
        let url = format!("{}{path}", self.base);
        let unavailable = |e: ureq::Error| PerceptionError::BackendUnavailable(format!("POST {url}: {e}"));
        let mut resp = self.agent.post(&url).send_json(body).map_err(unavailable)?;
        resp.body_mut().read_json().map_err(unavailable)
    }
}

impl Initiator for WireClient {
    fn detect(&mut self, obs: &Observation, prompts: &[String]) -> Result<Vec<Detection>, PerceptionError> {
        let resp: DetectResponse = self.post("/detect", &detect_request(obs, prompts))?;
        Ok(resp.detections)
    }
}

impl Validator for WireClient {
    fn validate(&mut self, obs: &Observation, dets: &[Detection], prompt: &str) -> Result<Verdict, PerceptionError> {
        let resp: ValidateResponse = self.post("/validate", &validate_request(obs, dets, prompt))?;
        Ok(resp.into())
    }
}
