//! One navigation episode: look around, then alternate observation,
//! verification, frontier selection, planning and a few path-following
//! actions until the agent stops or runs out of steps.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::commonsense::FrontierPolicy;
use crate::frontier::{cluster, extract_frontier_cells, Frontier};
use crate::grid::{normalize_angle, Cell, project_detection, update_semantic, CostMap, Point, Pose, SemanticMap, COST_FREE, COST_LETHAL};
use crate::perception::{doubly_right, initiate, DoublyRightConfig, ImageRef, Initiator, Observation, PerceptionError, PromptSet, Validator};
use crate::planner::{fmm_field, plan, PlannedPath, PlannerKind};

use super::{observe, step, sweep_is_clear, Action, AgentState, Scenario, SimConfig, SimError, World};

/// A frontier goal counts as reached within this distance.
const FRONTIER_REACHED: f64 = 0.3;
/// Frontiers whose target lies this close to a blacklisted point are skipped.
const BLACKLIST_RADIUS: f64 = 0.5;
/// A new frontier must beat the current one by this much to replace it.
const SWITCH_MARGIN: f64 = 0.3;
/// Decision cycles without getting closer before a frontier goal is dropped.
const STALL_CYCLES: u32 = 4;
/// Smallest change in distance that counts as progress.
const PROGRESS_EPS: f64 = 0.05;
/// Frontier cells this close after a look-around are given up on.
const RESIDUE_RADIUS: f64 = 1.0;
/// A fresh goal detection this close to the committed target refines it.
const TRACK_RADIUS: f64 = 1.0;
/// Decision cycles in a row without an action before giving up.
const MAX_IDLE_CYCLES: u32 = 25;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EpisodeError {
    #[error(transparent)]
    Perception(#[from] PerceptionError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Perception backends, frontier policy and planner choice for one episode.
pub struct PolicyBundle {
    pub initiator: Box<dyn Initiator>,
    pub validator: Box<dyn Validator>,
    pub policy: Box<dyn FrontierPolicy>,
    /// Labels the initiator is also prompted for, to fill the semantic map.
    pub context_labels: Vec<String>,
    pub planner: PlannerKind,
    pub doubly_right: DoublyRightConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    /// The agent issued stop.
    Stopped,
    MaxSteps,
    /// No frontiers left to explore.
    Exhausted,
    /// The agent could not make progress.
    Stuck,
    /// The scenario could not be run.
    Error,
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Self::Stopped => "stopped",
            Self::MaxSteps => "max_steps",
            Self::Exhausted => "exhausted",
            Self::Stuck => "stuck",
            Self::Error => "error",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeResult {
    pub world_name: String,
    pub goal_category: String,
    pub seed: u64,
    pub success: bool,
    /// Meters traveled.
    pub traveled: f64,
    /// Shortest ground-truth path length from the start into the success
    /// region, meters; infinite when the goal cannot be reached.
    pub shortest: f64,
    pub steps: u32,
    pub false_goal_events: u32,
    pub outcome: Outcome,
    pub trace: Vec<Pose>,
}

/// Shortest path length on ground truth from `start` to any cell within
/// `radius` of an object labeled `goal`, using the arrival times of a
/// wavefront started at the start cell.
pub fn oracle_shortest(world: &World, start: Point, goal: &str, radius: f64) -> Result<f64, SimError> {
    let meta = world.truth.meta;
    let start_cell = meta.world_to_grid(start)?;
    let field = fmm_field(&world.truth, start_cell).map_err(|e| SimError::InvalidWorld(e.to_string()))?;
    let targets: Vec<Point> = world.objects_labeled(goal).map(|o| o.position).collect();
    Ok(meta
        .cells()
        .filter(|&c| field.is_reached(c))
        .filter(|&c| targets.iter().any(|t| meta.grid_to_world(c).dist(*t) <= radius))
        .map(|c| field.at(c))
        .fold(f64::INFINITY, f64::min))
}

/// What the agent knows after an action or an observation.
pub struct StepView<'a> {
    pub state: &'a AgentState,
    pub belief: &'a CostMap,
}

struct Agent<'a> {
    world: &'a World,
    on_step: &'a mut dyn FnMut(&StepView<'_>),
    cfg: SimConfig,
    max_steps: u32,
    state: AgentState,
    belief: CostMap,
    semantic: SemanticMap,
    trace: Vec<Pose>,
    goal: String,
    prompts: PromptSet,
    target: Option<Point>,
    frontier_goal: Option<Point>,
    blacklist: Vec<Point>,
    /// Cells the controller could not move into although the belief allows it.
    impassable: BTreeSet<Cell>,
    /// Frontier cells a full look-around from close by did not resolve.
    dead_frontier: BTreeSet<Cell>,
    false_goal_events: u32,
    progress: Option<Progress>,
}

/// Closest approach to the current goal and cycles since it improved.
struct Progress {
    goal: Point,
    best: f64,
    stall: u32,
}

impl<'a> Agent<'a> {
    fn act(&mut self, action: Action) -> Result<(), SimError> {
        self.state = step(self.world, &self.state, action, &self.cfg)?;
        if let Some(cell) = self.state.bumped {
            self.belief.set(cell, COST_LETHAL);
        }
        self.trace.push(self.state.pose);
        self.report();
        Ok(())
    }

    fn report(&mut self) {
        (self.on_step)(&StepView {
            state: &self.state,
            belief: &self.belief,
        });
    }

    fn out_of_steps(&self) -> bool {
        self.state.steps >= self.max_steps
    }

    fn observe(&mut self, b: &mut PolicyBundle) -> Result<Observation, EpisodeError> {
        let pose = self.state.pose;
        let (depth, visible) = observe(self.world, &pose, &self.cfg)?;
        let obs = Observation {
            image: ImageRef::Id(format!("{}/{}", self.world.name, self.state.steps)),
            depth,
            pose,
            step: u64::from(self.state.steps),
            visible,
        };
        let dets = if b.context_labels.is_empty() {
            Vec::new()
        } else {
            let ctx = PromptSet {
                object_prompts: b.context_labels.clone(),
                validation_prompt: String::new(),
            };
            initiate(&obs, &ctx, b.initiator.as_mut())?
        };
        let hits: Vec<_> = dets.iter().map(|d| d.as_label_hit()).collect();
        update_semantic(&mut self.semantic, &mut self.belief, &obs.depth, &pose, &hits).map_err(SimError::from)?;
        // the agent stands on its own cell, whatever the sensor made of it
        let own = self.belief.meta.world_to_grid(pose.position()).expect("pose in bounds");
        if self.belief.is_lethal(own) {
            self.belief.set(own, COST_FREE);
        }
        self.report();
        Ok(obs)
    }

    /// Run the dual check and commit to a target point on success.
    fn verify(&mut self, obs: &Observation, b: &mut PolicyBundle) -> Result<(), EpisodeError> {
        let out = doubly_right(obs, &self.prompts, b.initiator.as_mut(), b.validator.as_mut(), &b.doubly_right)?;
        if !out.goal {
            return Ok(());
        }
        let best = out
            .accepted
            .iter()
            .fold(None, |acc: Option<&crate::perception::Detection>, d| match acc {
                Some(a) if a.confidence >= d.confidence => Some(a),
                _ => Some(d),
            });
        let point = match best {
            Some(d) => project_detection(&self.belief.meta, &obs.depth, &obs.pose, d.center_x()).map(|(p, cell)| {
                self.semantic.write(cell, &d.label, d.confidence).expect("projected cell is on the map");
                p
            }),
            // goal raised with nothing accepted: the agent believes it is there
            None => Some(obs.pose.position()),
        };
        if let Some(p) = point {
            let genuine = self
                .world
                .objects_labeled(&self.goal)
                .any(|o| o.position.dist(p) <= self.cfg.success_radius);
            if !genuine {
                self.false_goal_events += 1;
            }
            self.target = Some(p);
        }
        Ok(())
    }

    /// Re-detect the committed goal while approaching it and move the
    /// target to the closest fresh projection; closer views project more
    /// accurately.
    fn refine_target(&mut self, obs: &Observation, b: &mut PolicyBundle) -> Result<(), EpisodeError> {
        let Some(target) = self.target else {
            return Ok(());
        };
        let dets = initiate(obs, &self.prompts, b.initiator.as_mut())?;
        let best = dets
            .iter()
            .filter(|d| d.label == self.goal)
            .filter_map(|d| project_detection(&self.belief.meta, &obs.depth, &obs.pose, d.center_x()))
            .map(|(p, _)| p)
            .filter(|p| p.dist(target) <= TRACK_RADIUS)
            .min_by(|a, b| a.dist(target).total_cmp(&b.dist(target)).then(a.x.total_cmp(&b.x)).then(a.y.total_cmp(&b.y)));
        if let Some(p) = best {
            self.target = Some(p);
        }
        Ok(())
    }

    /// Turn a full circle in place, observing at every heading, until a
    /// target is committed to.
    fn look_around(&mut self, b: &mut PolicyBundle) -> Result<(), EpisodeError> {
        let full_turn = (360.0 / self.cfg.turn_deg).round() as u32;
        for _ in 0..full_turn {
            let obs = self.observe(b)?;
            self.verify(&obs, b)?;
            if self.target.is_some() || self.out_of_steps() {
                break;
            }
            self.act(Action::RotateLeft)?;
        }
        Ok(())
    }

    /// Retire the current frontier goal and look around from it. Frontier
    /// cells still close by after a full turn are out of the sensor's reach
    /// and are dropped for good.
    fn frontier_reached(&mut self, b: &mut PolicyBundle) -> Result<(), EpisodeError> {
        if let Some(g) = self.frontier_goal.take() {
            self.blacklist.push(g);
        }
        self.look_around(b)?;
        let meta = self.belief.meta;
        let here = self.state.pose.position();
        let residue: Vec<Cell> = extract_frontier_cells(&self.belief)
            .into_iter()
            .filter(|c| meta.grid_to_world(*c).dist(here) <= RESIDUE_RADIUS)
            .collect();
        self.dead_frontier.extend(residue);
        Ok(())
    }

    /// Track progress toward `goal`; true once the closest approach has not
    /// improved for [`STALL_CYCLES`] decision cycles.
    fn stalled_on(&mut self, goal: Point) -> bool {
        let d = self.state.pose.position().dist(goal);
        match &mut self.progress {
            Some(p) if p.goal.dist(goal) <= FRONTIER_REACHED => {
                if d < p.best - PROGRESS_EPS {
                    p.best = d;
                    p.stall = 0;
                } else {
                    p.stall += 1;
                }
                p.stall >= STALL_CYCLES
            }
            _ => {
                self.progress = Some(Progress { goal, best: d, stall: 0 });
                false
            }
        }
    }

    fn blacklisted(&self, p: Point) -> bool {
        self.blacklist.iter().any(|b| b.dist(p) <= BLACKLIST_RADIUS)
    }

    /// Keep the current frontier goal unless it vanished or a clearly
    /// better frontier appeared.
    fn pick_frontier(&mut self, policy: &dyn FrontierPolicy) -> Option<Point> {
        let meta = self.belief.meta;
        let pose = self.state.pose;
        let mut cells = extract_frontier_cells(&self.belief);
        cells.retain(|c| !self.dead_frontier.contains(c));
        let mut fs: Vec<Frontier> = cluster(&cells, self.cfg.min_frontier_size, &meta)
            .into_iter()
            .filter(|f| !self.blacklisted(meta.grid_to_world(f.target_cell(&meta))))
            .collect();
        if fs.is_empty() {
            self.frontier_goal = None;
            return None;
        }
        let best = policy.choose(&mut fs, &self.semantic, &self.goal, &pose).ok()?;
        let best_score = fs[best].score.unwrap_or(f64::NEG_INFINITY);
        let current = self.frontier_goal.and_then(|g| {
            fs.iter()
                .filter(|f| f.cells.iter().any(|c| meta.grid_to_world(*c).dist(g) <= FRONTIER_REACHED))
                .filter_map(|f| f.score)
                .reduce(f64::max)
        });
        match current {
            Some(s) if best_score <= s + SWITCH_MARGIN => {}
            _ => self.frontier_goal = Some(meta.grid_to_world(fs[best].target_cell(&meta))),
        }
        self.frontier_goal
    }

    /// Next action toward the path's lookahead point.
    fn follow(&self, path: &PlannedPath) -> Steer {
        let pts = path.waypoints(&self.belief.meta);
        let pose = self.state.pose;
        let here = pose.position();
        let Some(&last) = pts.last() else {
            return Steer::Arrived;
        };
        if here.dist(last) <= self.cfg.step_size / 2.0 + 0.05 {
            return Steer::Arrived;
        }
        let nearest = (0..pts.len())
            .min_by(|&i, &j| here.dist(pts[i]).total_cmp(&here.dist(pts[j])))
            .unwrap_or(0);
        let look = pts[nearest..]
            .iter()
            .copied()
            .find(|p| here.dist(*p) >= self.cfg.lookahead)
            .unwrap_or(last);
        let desired = (look.y - here.y).atan2(look.x - here.x);
        let turns = (360.0 / self.cfg.turn_deg).round() as i32;
        let mut options: Vec<(f64, i32)> = (-(turns - 1) / 2..=turns / 2)
            .map(|k| {
                let heading = pose.theta + f64::from(k) * self.cfg.turn();
                (normalize_angle(heading - desired).abs(), k)
            })
            .collect();
        options.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.abs().cmp(&b.1.abs())).then(a.1.cmp(&b.1)));
        for (err, k) in options {
            if err > std::f64::consts::FRAC_PI_2 + 1e-9 {
                break;
            }
            let heading = Pose::new(pose.x, pose.y, pose.theta + f64::from(k) * self.cfg.turn());
            if sweep_is_clear(&self.belief, &heading, self.cfg.step_size) {
                return Steer::Act(match k {
                    0 => Action::Forward,
                    k if k > 0 => Action::RotateLeft,
                    _ => Action::RotateRight,
                });
            }
        }
        // the path squeezes between known obstacles where no straight
        // move can follow it
        let own = self.belief.meta.world_to_grid(here).expect("pose in bounds");
        let cells = path.cells();
        let next = cells.iter().skip_while(|&&c| c != own).find(|&&c| c != own).or_else(|| cells.iter().find(|&&c| c != own));
        Steer::Blocked(next.copied())
    }

    /// The belief with the cells the controller found unreachable marked
    /// lethal.
    fn planning_map(&self) -> CostMap {
        let mut cm = self.belief.clone();
        for &c in &self.impassable {
            cm.set(c, COST_LETHAL);
        }
        cm
    }

    /// Where to drive for a target: the target itself, or the nearest free
    /// cell within stopping distance when the target cell is an obstacle.
    fn approach_point(&self, cm: &CostMap, target: Point) -> Point {
        let meta = cm.meta;
        let Ok(cell) = meta.world_to_grid(target) else {
            return target;
        };
        if cm.is_traversable(cell) {
            return target;
        }
        cm.nearest_within(cell, self.cfg.stop_radius * 0.75, |c| cm.get(c) == COST_FREE)
            .map_or(target, |c| meta.grid_to_world(c))
    }
}

enum Steer {
    Act(Action),
    Arrived,
    /// No heading near the path direction is clear; carries the next path
    /// cell.
    Blocked(Option<Cell>),
}

/// Run one episode. Perception backend failures abort it.
pub fn run_episode(world: &World, scenario: &Scenario, bundle: &mut PolicyBundle, seed: u64) -> Result<EpisodeResult, EpisodeError> {
    run_episode_observed(world, scenario, bundle, seed, &mut |_| {})
}

/// [`run_episode`], calling `on_step` after every action and every
/// observation.
pub fn run_episode_observed(
    world: &World,
    scenario: &Scenario,
    bundle: &mut PolicyBundle,
    seed: u64,
    on_step: &mut dyn FnMut(&StepView<'_>),
) -> Result<EpisodeResult, EpisodeError> {
    let cfg = scenario.sim;
    let start = scenario.start_pose();
    let shortest = oracle_shortest(world, start.position(), &scenario.goal_category, cfg.success_radius)?;
    let mut agent = Agent {
        world,
        on_step,
        cfg,
        max_steps: scenario.max_steps,
        state: AgentState::new(start),
        belief: CostMap::unknown(world.truth.meta),
        semantic: SemanticMap::new(world.truth.meta),
        trace: vec![start],
        goal: scenario.goal_category.clone(),
        prompts: PromptSet::for_goal(&scenario.goal_category),
        target: None,
        frontier_goal: None,
        blacklist: Vec::new(),
        impassable: BTreeSet::new(),
        dead_frontier: BTreeSet::new(),
        false_goal_events: 0,
        progress: None,
    };
    let outcome = drive(&mut agent, bundle)?;
    let success = agent.state.stopped
        && world
            .objects_labeled(&scenario.goal_category)
            .any(|o| o.position.dist(agent.state.pose.position()) <= cfg.success_radius);
    Ok(EpisodeResult {
        world_name: world.name.clone(),
        goal_category: scenario.goal_category.clone(),
        seed,
        success,
        traveled: agent.state.traveled,
        shortest,
        steps: agent.state.steps,
        false_goal_events: agent.false_goal_events,
        outcome,
        trace: agent.trace,
    })
}

fn drive(agent: &mut Agent<'_>, b: &mut PolicyBundle) -> Result<Outcome, EpisodeError> {
    agent.look_around(b)?;
    let mut idle = 0;
    loop {
        if agent.out_of_steps() {
            return Ok(Outcome::MaxSteps);
        }
        if idle >= MAX_IDLE_CYCLES {
            return Ok(Outcome::Stuck);
        }
        idle += 1;
        let obs = agent.observe(b)?;
        if agent.target.is_none() {
            agent.verify(&obs, b)?;
        } else {
            agent.refine_target(&obs, b)?;
        }
        let goal = match agent.target {
            Some(t) if agent.state.pose.position().dist(t) <= agent.cfg.stop_radius => {
                agent.act(Action::Stop)?;
                return Ok(Outcome::Stopped);
            }
            Some(t) => agent.approach_point(&agent.planning_map(), t),
            None if agent.frontier_goal.is_some_and(|g| agent.state.pose.position().dist(g) <= FRONTIER_REACHED) => {
                agent.frontier_reached(b)?;
                continue;
            }
            None => match agent.pick_frontier(b.policy.as_ref()) {
                Some(g) => g,
                None => return Ok(Outcome::Exhausted),
            },
        };
        if agent.target.is_none() && agent.stalled_on(goal) {
            agent.blacklist.push(goal);
            agent.frontier_goal = None;
            continue;
        }
        let planned = plan(&agent.state.pose, goal, &agent.planning_map(), b.planner);
        let path = match planned {
            Ok(p) => p,
            Err(_) if agent.target.is_some() => {
                // unreachable as believed: drop it and keep looking
                agent.target = None;
                continue;
            }
            Err(_) => {
                agent.blacklist.push(goal);
                agent.frontier_goal = None;
                continue;
            }
        };
        for _ in 0..agent.cfg.observe_every {
            if agent.out_of_steps() {
                break;
            }
            if let Some(t) = agent.target {
                if agent.state.pose.position().dist(t) <= agent.cfg.stop_radius {
                    break;
                }
            }
            match agent.follow(&path) {
                Steer::Act(a) => {
                    agent.act(a)?;
                    idle = 0;
                    if agent.state.bumped.is_some() {
                        break;
                    }
                }
                Steer::Blocked(next) => {
                    agent.impassable.extend(next);
                    break;
                }
                Steer::Arrived => {
                    if agent.target.is_some() {
                        agent.act(Action::Stop)?;
                        return Ok(Outcome::Stopped);
                    }
                    agent.frontier_reached(b)?;
                    break;
                }
            }
        }
    }
}
