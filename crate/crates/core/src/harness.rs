//! Batch episode runner, SR/SPL metrics and result tables.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::commonsense::CoOccurrenceTable;
use crate::planner::PlannerKind;
use crate::sim::{run_episode, EpisodeError, EpisodeResult, Outcome, PerceptionSpec, Scenario, ScenarioError, ValidatorMode};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("no episode results")]
    EmptyResults,
    #[error("episode {index} has shortest path length {value}, expected > 0")]
    InvalidShortest { index: usize, value: f64 },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

/// The per-episode quantities SR and SPL are computed from.
pub trait Scored {
    fn success(&self) -> bool;
    fn traveled(&self) -> f64;
    fn shortest(&self) -> f64;
}

impl Scored for EpisodeResult {
    fn success(&self) -> bool {
        self.success
    }
    fn traveled(&self) -> f64 {
        self.traveled
    }
    fn shortest(&self) -> f64 {
        self.shortest
    }
}

/// Success rate as a percentage.
pub fn compute_sr<T: Scored>(results: &[T]) -> Result<f64, HarnessError> {
    if results.is_empty() {
        return Err(HarnessError::EmptyResults);
    }
    let hits = results.iter().filter(|r| r.success()).count();
    Ok(100.0 * hits as f64 / results.len() as f64)
}

/// Success weighted by path length, as a percentage:
/// `100 / N * sum(S_i * l_i / max(p_i, l_i))`.
pub fn compute_spl<T: Scored>(results: &[T]) -> Result<f64, HarnessError> {
    if results.is_empty() {
        return Err(HarnessError::EmptyResults);
    }
    let mut sum = 0.0;
    for (index, r) in results.iter().enumerate() {
        let l = r.shortest();
        if l.is_nan() || l <= 0.0 {
            return Err(HarnessError::InvalidShortest { index, value: l });
        }
        if r.success() {
            sum += l / r.traveled().max(l);
        }
    }
    Ok(100.0 * sum / results.len() as f64)
}

/// One row of the results CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub world: String,
    pub goal: String,
    pub success: bool,
    pub traveled: f64,
    pub shortest: f64,
    pub steps: u32,
    pub false_goal_events: u32,
    pub seed: u64,
    pub outcome: Outcome,
    /// Why the scenario could not be run; not written to the CSV.
    #[serde(skip)]
    pub error: Option<String>,
}

impl Scored for ResultRow {
    fn success(&self) -> bool {
        self.success
    }
    fn traveled(&self) -> f64 {
        self.traveled
    }
    fn shortest(&self) -> f64 {
        self.shortest
    }
}

impl From<&EpisodeResult> for ResultRow {
    fn from(r: &EpisodeResult) -> Self {
        Self {
            world: r.world_name.clone(),
            goal: r.goal_category.clone(),
            success: r.success,
            traveled: r.traveled,
            shortest: r.shortest,
            steps: r.steps,
            false_goal_events: r.false_goal_events,
            seed: r.seed,
            outcome: r.outcome,
            error: None,
        }
    }
}

impl ResultRow {
    fn failed(world: String, goal: String, seed: u64, error: String) -> Self {
        Self {
            world,
            goal,
            success: false,
            traveled: 0.0,
            shortest: f64::NAN,
            steps: 0,
            false_goal_events: 0,
            seed,
            outcome: Outcome::Error,
            error: Some(error),
        }
    }
}

/// Settings applied on top of every scenario in a suite.
#[derive(Debug, Clone, Default)]
pub struct SuiteOverrides {
    pub seed: Option<u64>,
    pub planner: Option<PlannerKind>,
    /// Replaces the scenario's perception setup.
    pub perception: Option<PerceptionSpec>,
    /// Validator behaviour for mock perception; ignored for other modes.
    pub validator: Option<ValidatorMode>,
    pub max_steps: Option<u32>,
    /// Co-occurrence table; the built-in one when unset.
    pub table: Option<CoOccurrenceTable>,
}

impl SuiteOverrides {
    pub fn apply(&self, s: &mut Scenario) {
        if let Some(seed) = self.seed {
            s.seeds.episode = seed;
        }
        if let Some(p) = self.planner {
            s.planner = p;
        }
        if let Some(p) = &self.perception {
            s.perception = p.clone();
        }
        if let (Some(v), PerceptionSpec::Mock { validator, .. }) = (self.validator, &mut s.perception) {
            *validator = v;
        }
        if let Some(m) = self.max_steps {
            s.max_steps = m;
        }
    }
}

/// Load, configure and run one scenario.
pub fn run_scenario(s: &Scenario, table: &CoOccurrenceTable) -> Result<EpisodeResult, ScenarioError> {
    let world = s.load_world()?;
    let seed = s.seeds.episode;
    let mut bundle = s.bundle(seed, table)?;
    run_episode(&world, s, &mut bundle, seed).map_err(|e| match e {
        EpisodeError::Perception(p) => ScenarioError::Perception(p),
        EpisodeError::Sim(p) => ScenarioError::Sim(p),
    })
}

/// Run every scenario file in parallel. Rows come back in input order;
/// a scenario that cannot be loaded or run yields an `error` row.
pub fn run_suite(paths: &[PathBuf], overrides: &SuiteOverrides) -> Vec<ResultRow> {
    let builtin;
    let table = match &overrides.table {
        Some(t) => t,
        None => {
            builtin = CoOccurrenceTable::builtin();
            &builtin
        }
    };
    paths
        .par_iter()
        .map(|path| {
            let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            let mut s = match Scenario::load(path) {
                Ok(s) => s,
                Err(e) => return ResultRow::failed(stem, String::new(), overrides.seed.unwrap_or(0), e.to_string()),
            };
            overrides.apply(&mut s);
            match run_scenario(&s, table) {
                Ok(r) => ResultRow::from(&r),
                Err(e) => ResultRow::failed(s.name.clone(), s.goal_category.clone(), s.seeds.episode, e.to_string()),
            }
        })
        .collect()
}

pub fn write_results_csv(path: &Path, rows: &[ResultRow]) -> Result<(), HarnessError> {
    let csv_err = |source| HarnessError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush().map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_results_csv(path: &Path) -> Result<Vec<ResultRow>, HarnessError> {
    let csv_err = |source| HarnessError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    r.deserialize().collect::<Result<Vec<ResultRow>, _>>().map_err(csv_err)
}

/// SR and SPL for one goal category, or for the whole suite.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub goal: String,
    pub episodes: usize,
    pub sr: f64,
    /// `None` when some episode has no valid shortest path length.
    pub spl: Option<f64>,
}

/// Per-goal rows sorted by goal name, followed by an `average` row over
/// all episodes.
pub fn summarize<T: Scored + Clone>(rows: &[T], goal_of: impl Fn(&T) -> &str) -> Result<Vec<SummaryRow>, HarnessError> {
    if rows.is_empty() {
        return Err(HarnessError::EmptyResults);
    }
    let mut groups: BTreeMap<&str, Vec<T>> = BTreeMap::new();
    for r in rows {
        groups.entry(goal_of(r)).or_default().push(r.clone());
    }
    let line = |goal: &str, rs: &[T]| -> Result<SummaryRow, HarnessError> {
        Ok(SummaryRow {
            goal: goal.to_string(),
            episodes: rs.len(),
            sr: compute_sr(rs)?,
            spl: compute_spl(rs).ok(),
        })
    };
    let mut out = groups.iter().map(|(g, rs)| line(g, rs)).collect::<Result<Vec<_>, _>>()?;
    out.push(line("average", rows)?);
    Ok(out)
}

pub fn summarize_rows(rows: &[ResultRow]) -> Result<Vec<SummaryRow>, HarnessError> {
    summarize(rows, |r| r.goal.as_str())
}

/// Fixed-width table of a summary.
pub fn format_summary(summary: &[SummaryRow]) -> String {
    let width = summary.iter().map(|r| r.goal.len()).max().unwrap_or(0).max(4);
    let mut s = String::new();
    let _ = writeln!(s, "{:<width$}  {:>8}  {:>6}  {:>6}", "goal", "episodes", "SR", "SPL");
    for r in summary {
        let spl = r.spl.map_or_else(|| "n/a".to_string(), |v| format!("{v:.1}"));
        let _ = writeln!(s, "{:<width$}  {:>8}  {:>6.1}  {:>6}", r.goal, r.episodes, r.sr, spl);
    }
    s
}

/// Scenario files (`*.json`) in a directory, sorted by name.
pub fn scenario_files(dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    let io_err = |source| HarnessError::Io {
        path: dir.to_path_buf(),
        source,
    };
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(io_err)? {
        let p = entry.map_err(io_err)?.path();
        if p.extension().is_some_and(|e| e == "json") {
            out.push(p);
        }
    }
    out.sort();
    Ok(out)
}
