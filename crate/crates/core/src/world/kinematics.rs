use std::fmt;

use serde::{Deserialize, Serialize};

use super::WorldError;
use crate::geometry::{Compass, Pose};

pub const STEP_METERS: f64 = 5.0;
pub const TURN_DEGREES: f64 = 30.0;
pub const ALTITUDE_FLOOR: f64 = 5.0;
pub const ALTITUDE_CEILING: f64 = 120.0;
pub const MAX_STEPS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    North,
    Northeast,
    East,
    Southeast,
    South,
    Southwest,
    West,
    Northwest,
    TurnLeft,
    TurnRight,
    Ascend,
    Descend,
    Stop,
}

impl Action {
    pub const ALL: [Action; 13] = [
        Action::North,
        Action::Northeast,
        Action::East,
        Action::Southeast,
        Action::South,
        Action::Southwest,
        Action::West,
        Action::Northwest,
        Action::TurnLeft,
        Action::TurnRight,
        Action::Ascend,
        Action::Descend,
        Action::Stop,
    ];

    pub const PLANAR: [Action; 8] = [
        Action::North,
        Action::Northeast,
        Action::East,
        Action::Southeast,
        Action::South,
        Action::Southwest,
        Action::West,
        Action::Northwest,
    ];

    pub fn planar(c: Compass) -> Action {
        match c {
            Compass::North => Action::North,
            Compass::Northeast => Action::Northeast,
            Compass::East => Action::East,
            Compass::Southeast => Action::Southeast,
            Compass::South => Action::South,
            Compass::Southwest => Action::Southwest,
            Compass::West => Action::West,
            Compass::Northwest => Action::Northwest,
        }
    }

    pub fn compass(self) -> Option<Compass> {
        Some(match self {
            Action::North => Compass::North,
            Action::Northeast => Compass::Northeast,
            Action::East => Compass::East,
            Action::Southeast => Compass::Southeast,
            Action::South => Compass::South,
            Action::Southwest => Compass::Southwest,
            Action::West => Compass::West,
            Action::Northwest => Compass::Northwest,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Action::North => "north",
            Action::Northeast => "northeast",
            Action::East => "east",
            Action::Southeast => "southeast",
            Action::South => "south",
            Action::Southwest => "southwest",
            Action::West => "west",
            Action::Northwest => "northwest",
            Action::TurnLeft => "turn_left",
            Action::TurnRight => "turn_right",
            Action::Ascend => "ascend",
            Action::Descend => "descend",
            Action::Stop => "stop",
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Kinematic update for one non-stop action.
pub fn apply_action(pose: &Pose, a: Action) -> Result<Pose, WorldError> {
    let mut next = *pose;
    match a {
        Action::Stop => return Err(WorldError::StopNotApplicable),
        Action::TurnLeft => next = Pose::new(pose.x, pose.y, pose.z, pose.theta - TURN_DEGREES),
        Action::TurnRight => next = Pose::new(pose.x, pose.y, pose.z, pose.theta + TURN_DEGREES),
        Action::Ascend => next.z = (pose.z + STEP_METERS).min(ALTITUDE_CEILING),
        Action::Descend => next.z = (pose.z - STEP_METERS).max(ALTITUDE_FLOOR),
        planar => {
            let (ux, uy) = planar.compass().expect("planar action").unit();
            next.x = pose.x + STEP_METERS * ux;
            next.y = pose.y + STEP_METERS * uy;
        }
    }
    Ok(next)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeState {
    pub pose: Pose,
    pub step_count: usize,
    pub trajectory: Vec<Pose>,
    pub actions: Vec<Action>,
    pub done: bool,
    pub stop_issued: bool,
}

impl EpisodeState {
    pub fn new(start: Pose) -> Self {
        EpisodeState {
            pose: start,
            step_count: 0,
            trajectory: vec![start],
            actions: Vec::new(),
            done: false,
            stop_issued: false,
        }
    }

    pub fn remaining(&self) -> usize {
        MAX_STEPS - self.step_count
    }

    /// Stop counts as a step and repeats the current pose in the trajectory.
    pub fn step(&mut self, a: Action) -> Result<(), WorldError> {
        if self.done {
            return Err(WorldError::EpisodeDone);
        }
        let next = if a == Action::Stop {
            self.stop_issued = true;
            self.done = true;
            self.pose
        } else {
            apply_action(&self.pose, a)?
        };
        self.pose = next;
        self.step_count += 1;
        self.trajectory.push(next);
        self.actions.push(a);
        if self.step_count >= MAX_STEPS {
            self.done = true;
        }
        Ok(())
    }

    pub fn replay(start: Pose, actions: &[Action]) -> Result<EpisodeState, WorldError> {
        let mut s = EpisodeState::new(start);
        for a in actions {
            s.step(*a)?;
        }
        Ok(s)
    }
}
