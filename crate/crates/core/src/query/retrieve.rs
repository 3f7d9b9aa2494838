use serde::{Deserialize, Serialize};

use super::chain::{compile_chain, relax_chain, OpChain};
use super::exec::{execute_with_flag, TraceRecord};
use crate::geometry::{Pose, WorldPoint};
use crate::hsg::{NodeId, SceneGraph};
use crate::world::GoalSpec;

/// Number of relaxation levels tried after the strict chain comes back empty.
pub const MAX_TRIAL: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Retrieval {
    pub position: WorldPoint,
    pub node: Option<NodeId>,
    /// 0 for the strict chain, otherwise the relaxation level that answered.
    pub level: usize,
    pub fallback_used: bool,
    pub failed: bool,
    pub trace: Vec<TraceRecord>,
    pub log: Vec<String>,
}

/// Highest confidence, then nearest to the pose, then lowest id. Object
/// nodes beat landmarks regardless of confidence.
pub fn select_best(g: &SceneGraph, ids: &[NodeId], pose: &Pose) -> Option<NodeId> {
    let here = pose.position();
    ids.iter()
        .filter_map(|id| g.node(*id))
        .max_by(|a, b| {
            a.is_object()
                .cmp(&b.is_object())
                .then(a.confidence.total_cmp(&b.confidence))
                .then(b.distance_to(&here).total_cmp(&a.distance_to(&here)))
                .then(b.id.cmp(&a.id))
        })
        .map(|n| n.id)
}

fn describe(g: &SceneGraph, id: NodeId) -> String {
    let n = g.node(id).expect("selected from graph");
    let label = match (&n.name, n.object_type) {
        (Some(name), _) => format!("{name} (geo)"),
        (None, Some(c)) => match n.color {
            Some(col) => format!("{} {} {}", col.as_str(), c.as_str(), n.id),
            None => format!("{} {}", c.as_str(), n.id),
        },
        _ => n.id.to_string(),
    };
    format!(
        "{label} at ({:.1}, {:.1}), confidence {:.2}",
        n.position.x, n.position.y, n.confidence
    )
}

fn anchor_point(g: &SceneGraph, goal: &GoalSpec) -> WorldPoint {
    goal.anchor_landmark
        .as_deref()
        .and_then(|a| g.node_by_name(a))
        .or_else(|| g.nodes().first())
        .map(|n| n.position)
        .unwrap_or_else(|| WorldPoint::new(0.0, 0.0))
}

fn run(
    g: &SceneGraph,
    chain: &OpChain,
    level: usize,
    trace: &mut Vec<TraceRecord>,
    log: &mut Vec<String>,
) -> Vec<NodeId> {
    let r = execute_with_flag(g, chain, level > 0);
    for t in &r.trace {
        log.push(format!(
            "  {} -> {} of {} nodes",
            serde_json::to_string(&t.op).unwrap_or_default(),
            t.output_count,
            t.input_count
        ));
    }
    trace.extend(r.trace);
    r.candidates
}

/// True when the strict chain already names at least one object node.
pub fn target_confirmed(g: &SceneGraph, goal: &GoalSpec) -> bool {
    compile_chain(goal).is_ok_and(|c| {
        execute_with_flag(g, &c, false)
            .candidates
            .iter()
            .any(|id| g.node(*id).is_some_and(|n| n.is_object()))
    })
}

/// Compile the goal, execute it, and relax level by level until some
/// candidate appears. Falls back to the anchor centroid when nothing does.
pub fn retrieve_target(g: &SceneGraph, goal: &GoalSpec, pose: &Pose) -> Retrieval {
    retrieve_target_with(g, goal, pose, MAX_TRIAL)
}

/// [`retrieve_target`] with at most `max_trial` relaxation levels.
pub fn retrieve_target_with(
    g: &SceneGraph,
    goal: &GoalSpec,
    pose: &Pose,
    max_trial: usize,
) -> Retrieval {
    let mut trace = Vec::new();
    let mut log = Vec::new();
    let fail = |trace, mut log: Vec<String>, msg: String| {
        log.push(msg);
        let p = anchor_point(g, goal);
        log.push(format!("Fallback to anchor at ({:.1}, {:.1})", p.x, p.y));
        Retrieval {
            position: p,
            node: None,
            level: 0,
            fallback_used: true,
            failed: true,
            trace,
            log,
        }
    };
    let strict = match compile_chain(goal) {
        Ok(c) => c,
        Err(e) => return fail(trace, log, format!("Query failed: {e}")),
    };
    log.push("Executing query chain:".to_string());
    let mut found = run(g, &strict, 0, &mut trace, &mut log);
    let mut level = 0;
    log.push(format!("Query completed: {} node(s) found", found.len()));
    while found.is_empty() && level < max_trial.min(MAX_TRIAL) {
        level += 1;
        let relaxed = relax_chain(&strict, level).expect("level within ladder");
        log.push(format!("Relaxing constraints, level {level}:"));
        found = run(g, &relaxed, level, &mut trace, &mut log);
        log.push(format!("Query completed: {} node(s) found", found.len()));
    }
    match select_best(g, &found, pose) {
        Some(id) => {
            log.push(format!("Selected {}", describe(g, id)));
            Retrieval {
                position: g.node(id).expect("selected").position,
                node: Some(id),
                level,
                fallback_used: level > 0,
                failed: false,
                trace,
                log,
            }
        }
        None => fail(
            trace,
            log,
            "No candidate at any relaxation level".to_string(),
        ),
    }
}
