//! Three-stage navigation loop: plan, per-stage policies, stage switching
//! and the final deterministic controller.

mod control;
mod reasoner;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use control::{
    greedy_action, localize_controller, localize_step, navigate_segment, segment_action,
    ARRIVAL_RADIUS,
};
pub use reasoner::{
    Advice, ConstantReasoner, Consultation, EndpointConfig, ExternalReasoner, Reasoner,
    ReasonerRequest, ReasonerResponse, ScriptedReasoner,
};

use crate::geometry::{ImageDims, Pose, WorldPoint};
use crate::hsg::{HsgParams, SceneGraph};
use crate::perception::{project_detections, NoiseModel, PerceivedObject, Sensor};
use crate::query::{
    render_instruction, retrieve_target_with, target_confirmed, Retrieval, MAX_TRIAL,
};
use crate::scm::{nav_rationale, search_rationale, CognitiveMap, CoverageGrid};
use crate::world::{find_landmark, Action, EpisodeState, GoalSpec, LandmarkPrior, Scenario};

pub const NAV_THRESHOLD: f64 = 50.0;
pub const COVERAGE_THRESHOLD: f64 = 0.8;
pub const SEARCH_INVOCATIONS: usize = 6;
pub const ACTION_BUDGET: usize = 10;
pub const SUCCESS_RADIUS: f64 = 20.0;
pub const ALTITUDE: f64 = 50.0;

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("goal has no anchor landmark")]
    NoAnchor,
    #[error("unknown anchor landmark `{0}`")]
    UnknownAnchor(String),
    #[error("invalid agent config: {0}")]
    Config(String),
    #[error("map render failed: {0}")]
    Render(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Navigate,
    Search,
    Localize,
}

impl Strategy {
    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Navigate => "navigate",
            Strategy::Search => "search",
            Strategy::Localize => "localize",
        }
    }
}

/// Machine-checkable completion condition of a subgoal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DesiredState {
    NearAnchor {
        max_distance: f64,
    },
    Explored {
        min_coverage: f64,
        max_invocations: usize,
    },
    Stopped {
        success_radius: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubGoal {
    pub goal_text: String,
    pub desired_state: DesiredState,
    pub strategy: Strategy,
    pub anchor_landmark: String,
}

/// Components switched off for ablation runs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ablation {
    /// No map memory: coverage only reflects the current view, no rationale text.
    #[serde(default)]
    pub no_scm: bool,
    /// No scene graph: the final approach targets the anchor centroid.
    #[serde(default)]
    pub no_hsg: bool,
    /// No search stage: navigate, then localize directly.
    #[serde(default)]
    pub no_stages: bool,
}

impl Ablation {
    pub fn label(&self) -> String {
        let mut parts = Vec::new();
        if self.no_scm {
            parts.push("scm");
        }
        if self.no_hsg {
            parts.push("hsg");
        }
        if self.no_stages {
            parts.push("stages");
        }
        if parts.is_empty() {
            "none".into()
        } else {
            parts.join("+")
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentConfig {
    pub noise: NoiseModel,
    pub hsg: HsgParams,
    pub altitude: f64,
    pub nav_threshold: f64,
    pub coverage_threshold: f64,
    pub search_invocations: usize,
    pub action_budget: usize,
    pub max_trial: usize,
    pub ablation: Ablation,
}

impl Default for AgentConfig {
    fn default() -> Self {
        AgentConfig {
            noise: NoiseModel::default(),
            hsg: HsgParams::default(),
            altitude: ALTITUDE,
            nav_threshold: NAV_THRESHOLD,
            coverage_threshold: COVERAGE_THRESHOLD,
            search_invocations: SEARCH_INVOCATIONS,
            action_budget: ACTION_BUDGET,
            max_trial: MAX_TRIAL,
            ablation: Ablation::default(),
        }
    }
}

impl AgentConfig {
    pub fn noiseless() -> Self {
        AgentConfig {
            noise: NoiseModel::noiseless(),
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), AgentError> {
        let bad = |m: String| Err(AgentError::Config(m));
        self.noise.validate().map_err(AgentError::Config)?;
        self.hsg.validate().map_err(AgentError::Config)?;
        if !(crate::world::ALTITUDE_FLOOR..=crate::world::ALTITUDE_CEILING).contains(&self.altitude)
        {
            return bad(format!("altitude {} outside [5, 120]", self.altitude));
        }
        if !(self.nav_threshold > 0.0 && self.nav_threshold.is_finite()) {
            return bad(format!(
                "nav_threshold {} must be positive",
                self.nav_threshold
            ));
        }
        if !(0.0..=1.0).contains(&self.coverage_threshold) {
            return bad(format!(
                "coverage_threshold {} outside [0, 1]",
                self.coverage_threshold
            ));
        }
        if self.action_budget == 0 {
            return bad("action_budget must be positive".into());
        }
        if self.max_trial > MAX_TRIAL {
            return bad(format!("max_trial {} above {}", self.max_trial, MAX_TRIAL));
        }
        Ok(())
    }
}

/// Fixed decomposition: reach the anchor, sweep its neighborhood, close in
/// on the retrieved target.
pub fn plan(
    goal: &GoalSpec,
    priors: &[LandmarkPrior],
    config: &AgentConfig,
) -> Result<Vec<SubGoal>, AgentError> {
    let anchor = goal
        .anchor_landmark
        .as_deref()
        .ok_or(AgentError::NoAnchor)?;
    let lm =
        find_landmark(priors, anchor).ok_or_else(|| AgentError::UnknownAnchor(anchor.into()))?;
    let name = lm.name.clone();
    let target = render_instruction(goal);
    let mut out = vec![SubGoal {
        goal_text: format!("Fly toward {name}"),
        desired_state: DesiredState::NearAnchor {
            max_distance: config.nav_threshold,
        },
        strategy: Strategy::Navigate,
        anchor_landmark: name.clone(),
    }];
    if !config.ablation.no_stages {
        out.push(SubGoal {
            goal_text: format!("Explore around {name} looking for {target}"),
            desired_state: DesiredState::Explored {
                min_coverage: config.coverage_threshold,
                max_invocations: config.search_invocations,
            },
            strategy: Strategy::Search,
            anchor_landmark: name.clone(),
        });
    }
    out.push(SubGoal {
        goal_text: format!("Locate {target} and stop"),
        desired_state: DesiredState::Stopped {
            success_radius: SUCCESS_RADIUS,
        },
        strategy: Strategy::Localize,
        anchor_landmark: name,
    });
    Ok(out)
}

/// Snapshot the switch conditions look at.
#[derive(Debug, Clone, Copy)]
pub struct Progress<'a> {
    pub pose: &'a Pose,
    pub anchor: &'a WorldPoint,
    pub coverage: f64,
    pub search_invocations: usize,
    /// A reasoner segment is still executing.
    pub segment_open: bool,
    pub stop_search: bool,
    /// The strict query already answers from the scene graph.
    pub target_confirmed: bool,
    pub stop_issued: bool,
}

pub fn check_transition(subgoal: &SubGoal, p: &Progress<'_>) -> bool {
    match &subgoal.desired_state {
        DesiredState::NearAnchor { max_distance } => {
            p.pose.position().distance(p.anchor) <= *max_distance
        }
        DesiredState::Explored {
            min_coverage,
            max_invocations,
        } => {
            (p.coverage >= *min_coverage && p.target_confirmed)
                || p.stop_search
                || (p.search_invocations >= *max_invocations && !p.segment_open)
        }
        DesiredState::Stopped { .. } => p.stop_issued,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub action: Action,
    pub pose: Pose,
    pub stage: Strategy,
    pub hsg_objects: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvocationRecord {
    pub step: usize,
    pub stage: Strategy,
    pub request_digest: String,
    pub rationale: String,
    pub response: ReasonerResponse,
    pub fallback_used: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeTrace {
    pub episode_id: String,
    pub scenario_seed: u64,
    pub run_seed: u64,
    pub reasoner: String,
    pub ablation: Ablation,
    pub instruction: String,
    pub goal: GoalSpec,
    /// Ground truth, for scoring only.
    pub target_position: WorldPoint,
    pub start: Pose,
    pub subgoals: Vec<SubGoal>,
    pub steps: Vec<StepRecord>,
    pub invocations: Vec<InvocationRecord>,
    pub final_pose: Pose,
    pub stop_issued: bool,
    pub stage_reached: Strategy,
    pub coverage: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub retrieval: Option<Retrieval>,
    pub fallback_used: bool,
    pub reasoner_fallback: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl EpisodeTrace {
    pub fn actions(&self) -> Vec<Action> {
        self.steps.iter().map(|s| s.action).collect()
    }

    /// Start pose followed by the pose after every step.
    pub fn trajectory(&self) -> Vec<Pose> {
        std::iter::once(self.start)
            .chain(self.steps.iter().map(|s| s.pose))
            .collect()
    }
}

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Perception seed for one step of one episode.
pub fn frame_seed(scenario_seed: u64, run_seed: u64, step: usize) -> u64 {
    mix(mix(mix(scenario_seed) ^ run_seed) ^ step as u64)
}

struct Memory<'a> {
    scenario: &'a Scenario,
    sensor: Sensor,
    ablation: Ablation,
    map: Option<CognitiveMap>,
    hsg: SceneGraph,
    coverage: CoverageGrid,
    backlog: Vec<PerceivedObject>,
    run_seed: u64,
}

impl Memory<'_> {
    fn observe(&mut self, pose: &Pose, step: usize, stage: Strategy) {
        let frame = self.sensor.observe(
            self.scenario,
            pose,
            frame_seed(self.scenario.seed, self.run_seed, step),
        );
        let objs = project_detections(&frame);
        match &mut self.map {
            Some(m) => m.update(&objs, pose, step),
            None => self.coverage.covered.iter_mut().for_each(|c| *c = false),
        }
        self.coverage.mark(&frame.footprint);
        if self.ablation.no_hsg {
            return;
        }
        if stage == Strategy::Search {
            self.hsg.integrate(&objs);
        } else if stage == Strategy::Navigate {
            self.backlog.extend(objs);
        }
    }

    /// Observations held back while navigating enter the graph once the
    /// agent starts looking closely.
    fn flush_backlog(&mut self) {
        if !self.ablation.no_hsg && !self.backlog.is_empty() {
            let pending = std::mem::take(&mut self.backlog);
            self.hsg.integrate(&pending);
        }
    }
}

fn failed_trace(
    scenario: &Scenario,
    reasoner: &dyn Reasoner,
    config: &AgentConfig,
    run_seed: u64,
    error: String,
) -> EpisodeTrace {
    let goal = scenario.goal.agent_view();
    EpisodeTrace {
        episode_id: format!("s{}-r{}", scenario.seed, run_seed),
        scenario_seed: scenario.seed,
        run_seed,
        reasoner: reasoner.name().to_string(),
        ablation: config.ablation,
        instruction: render_instruction(&goal),
        goal,
        target_position: scenario
            .target_position()
            .unwrap_or(scenario.start.position()),
        start: scenario.start,
        subgoals: Vec::new(),
        steps: Vec::new(),
        invocations: Vec::new(),
        final_pose: scenario.start,
        stop_issued: false,
        stage_reached: Strategy::Navigate,
        coverage: 0.0,
        retrieval: None,
        fallback_used: false,
        reasoner_fallback: false,
        error: Some(error),
    }
}

/// One full episode. Deterministic for a deterministic reasoner.
pub fn run_episode(
    scenario: &Scenario,
    reasoner: &dyn Reasoner,
    config: &AgentConfig,
    run_seed: u64,
) -> EpisodeTrace {
    let fail = |e: String| failed_trace(scenario, reasoner, config, run_seed, e);
    if let Err(e) = config.validate() {
        return fail(e.to_string());
    }
    let goal = scenario.goal.agent_view();
    let subgoals = match plan(&goal, &scenario.landmarks, config) {
        Ok(p) => p,
        Err(e) => return fail(e.to_string()),
    };
    let anchor = find_landmark(&scenario.landmarks, &subgoals[0].anchor_landmark)
        .expect("plan checked the anchor")
        .clone();
    let anchor_c = anchor.contour.centroid();
    let map = if config.ablation.no_scm {
        None
    } else {
        match CognitiveMap::new(&scenario.landmarks, &scenario.bounds) {
            Ok(m) => Some(m),
            Err(e) => return fail(e.to_string()),
        }
    };
    let hsg = match SceneGraph::new(&scenario.landmarks, &scenario.bounds, config.hsg) {
        Ok(g) => g,
        Err(e) => return fail(e.to_string()),
    };
    let mut mem = Memory {
        scenario,
        sensor: Sensor::new(config.noise),
        ablation: config.ablation,
        map,
        hsg,
        coverage: CoverageGrid::for_anchor(&anchor, &scenario.bounds),
        backlog: Vec::new(),
        run_seed,
    };
    let dims = ImageDims::default();
    let episode_id = format!("s{}-r{}", scenario.seed, run_seed);
    let start = Pose {
        z: config.altitude,
        ..scenario.start
    };
    let mut state = EpisodeState::new(start);
    mem.observe(&start, 0, subgoals[0].strategy);

    let budget = config.action_budget;
    let mut stage = 0;
    let mut steps = Vec::new();
    let mut invocations: Vec<InvocationRecord> = Vec::new();
    let mut advice: Option<Advice> = None;
    let mut segment_used = 0;
    let mut segment_open = false;
    let mut search_calls = 0;
    let mut stop_search = false;
    let mut hold_left = false;
    let mut retrieval: Option<Retrieval> = None;
    let mut target: Option<WorldPoint> = None;
    let mut fallback_used = false;

    while !state.done {
        // stage switches
        while stage + 1 < subgoals.len() {
            let coverage = mem.coverage.coverage();
            let confirmed = subgoals[stage].strategy == Strategy::Search
                && coverage >= config.coverage_threshold
                && (config.ablation.no_hsg || target_confirmed(&mem.hsg, &goal));
            let progress = Progress {
                pose: &state.pose,
                anchor: &anchor_c,
                coverage,
                search_invocations: search_calls,
                segment_open,
                stop_search,
                target_confirmed: confirmed,
                stop_issued: state.stop_issued,
            };
            if !check_transition(&subgoals[stage], &progress) {
                break;
            }
            stage += 1;
            segment_open = false;
            advice = None;
            if subgoals[stage].strategy != Strategy::Navigate {
                mem.flush_backlog();
            }
        }
        let strategy = subgoals[stage].strategy;

        let action = match strategy {
            Strategy::Navigate | Strategy::Search => {
                // a search waypoint is moot once its cell has been seen
                if let (Strategy::Search, Some(Advice::Waypoint(w))) = (strategy, &advice) {
                    if mem.coverage.is_covered_at(w) {
                        segment_open = false;
                    }
                }
                let next = if segment_open && segment_used < budget {
                    advice.as_ref().and_then(|a| segment_action(&state.pose, a))
                } else {
                    None
                };
                if let Some(a) = next {
                    segment_used += 1;
                    a
                } else {
                    segment_open = false;
                    // the n-th call waits for step budget * n
                    let slot_free = state.step_count >= budget * invocations.len();
                    let may_call =
                        strategy == Strategy::Navigate || search_calls < config.search_invocations;
                    if slot_free && may_call {
                        let rationale = match (&mem.map, strategy) {
                            (None, _) => String::new(),
                            (Some(_), Strategy::Navigate) => nav_rationale(&state.pose, &anchor),
                            (Some(_), _) => search_rationale(&state.pose, &mem.coverage, dims),
                        };
                        let req = ReasonerRequest {
                            episode_id: &episode_id,
                            subgoal: &subgoals[stage],
                            rationale: rationale.clone(),
                            pose: state.pose,
                            action_budget: budget,
                            anchor: anchor_c,
                            coverage: &mem.coverage,
                            map: mem.map.as_ref(),
                        };
                        let c = reasoner.consult(&req);
                        invocations.push(InvocationRecord {
                            step: state.step_count,
                            stage: strategy,
                            request_digest: req.digest(),
                            rationale,
                            response: c.response.clone(),
                            fallback_used: c.fallback_used,
                            error: c.error,
                        });
                        if strategy == Strategy::Search {
                            search_calls += 1;
                        }
                        match c.response.advice {
                            Advice::StopSearch => {
                                if strategy == Strategy::Search {
                                    stop_search = true;
                                }
                            }
                            a => {
                                advice = Some(a);
                                segment_open = true;
                                segment_used = 0;
                            }
                        }
                        continue;
                    }
                    // no reasoner slot: hover in place by yawing back and forth
                    hold_left = !hold_left;
                    if hold_left {
                        Action::TurnLeft
                    } else {
                        Action::TurnRight
                    }
                }
            }
            Strategy::Localize => {
                let t = *target.get_or_insert_with(|| {
                    if config.ablation.no_hsg {
                        fallback_used = true;
                        anchor_c
                    } else {
                        let r =
                            retrieve_target_with(&mem.hsg, &goal, &state.pose, config.max_trial);
                        fallback_used = r.fallback_used;
                        let p = r.position;
                        retrieval = Some(r);
                        p
                    }
                });
                if state.remaining() == 1 {
                    Action::Stop
                } else {
                    localize_step(&state.pose, &t)
                }
            }
        };

        state
            .step(action)
            .expect("loop only steps running episodes");
        let pose = state.pose;
        if action != Action::Stop {
            mem.observe(&pose, state.step_count, strategy);
        }
        steps.push(StepRecord {
            step: state.step_count,
            action,
            pose,
            stage: strategy,
            hsg_objects: mem.hsg.object_count(),
        });
    }

    let reasoner_fallback = invocations.iter().any(|i| i.fallback_used);
    EpisodeTrace {
        episode_id,
        scenario_seed: scenario.seed,
        run_seed,
        reasoner: reasoner.name().to_string(),
        ablation: config.ablation,
        instruction: render_instruction(&goal),
        goal,
        target_position: scenario.target_position().unwrap_or(start.position()),
        start,
        subgoals: subgoals.clone(),
        steps,
        invocations,
        final_pose: state.pose,
        stop_issued: state.stop_issued,
        stage_reached: subgoals[stage].strategy,
        coverage: mem.coverage.coverage(),
        retrieval,
        fallback_used,
        reasoner_fallback,
        error: None,
    }
}
