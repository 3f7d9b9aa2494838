use super::Advice;
use crate::geometry::{Pose, WorldPoint};
use crate::world::{apply_action, Action, EpisodeState};

/// Waypoints closer than half a step count as reached.
pub const ARRIVAL_RADIUS: f64 = 2.5;

/// Planar action that brings `pose` closest to `target`, if any reduces the
/// distance. Ties keep the earlier action in compass order.
pub fn greedy_action(pose: &Pose, target: &WorldPoint) -> Option<Action> {
    let here = pose.position().distance(target);
    let mut best: Option<(f64, Action)> = None;
    for a in Action::PLANAR {
        let next = apply_action(pose, a).expect("planar moves always apply");
        let d = next.position().distance(target);
        if d < here - 1e-9 && best.is_none_or(|(bd, _)| d < bd - 1e-12) {
            best = Some((d, a));
        }
    }
    best.map(|(_, a)| a)
}

/// Next action of a reasoner segment, or `None` when the segment is over.
pub fn segment_action(pose: &Pose, advice: &Advice) -> Option<Action> {
    match advice {
        Advice::Direction(c) => Some(Action::planar(*c)),
        Advice::Waypoint(w) => {
            if pose.position().distance(w) <= ARRIVAL_RADIUS {
                None
            } else {
                greedy_action(pose, w)
            }
        }
        Advice::StopSearch => None,
    }
}

/// Execute up to `budget` actions of one advice.
pub fn navigate_segment(state: &mut EpisodeState, advice: &Advice, budget: usize) -> Vec<Action> {
    let mut done = Vec::new();
    while done.len() < budget && !state.done {
        let Some(a) = segment_action(&state.pose, advice) else {
            break;
        };
        state.step(a).expect("episode still running");
        done.push(a);
    }
    done
}

/// Final approach: stop inside the arrival radius, or when no move helps.
pub fn localize_step(pose: &Pose, target: &WorldPoint) -> Action {
    if pose.position().distance(target) <= ARRIVAL_RADIUS {
        return Action::Stop;
    }
    greedy_action(pose, target).unwrap_or(Action::Stop)
}

/// Run the final controller to completion (stop or step budget).
pub fn localize_controller(state: &mut EpisodeState, target: &WorldPoint) -> Vec<Action> {
    let mut done = Vec::new();
    while !state.done {
        let a = if state.remaining() == 1 {
            Action::Stop
        } else {
            localize_step(&state.pose, target)
        };
        state.step(a).expect("episode still running");
        done.push(a);
    }
    done
}
