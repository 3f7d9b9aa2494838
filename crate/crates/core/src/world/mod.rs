//! Scenario model, scenario files, procedural generation and the discrete
//! action kinematics.

mod generator;
mod kinematics;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{GeometryError, MapBounds, Polygon, Pose, WorldPoint};
use crate::vocab::{Color, ObjectClass, Relation, SizeClass};

pub use generator::{generate_batch, generate_scenario, Difficulty, GeneratorConfig};
pub use kinematics::{
    apply_action, Action, EpisodeState, ALTITUDE_CEILING, ALTITUDE_FLOOR, MAX_STEPS, STEP_METERS,
    TURN_DEGREES,
};

#[derive(Debug, Error)]
pub enum WorldError {
    #[error("scenario schema error: {0}")]
    Schema(#[from] serde_json::Error),
    #[error("invalid scenario field `{field}`: {message}")]
    Invalid { field: String, message: String },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("stop must be handled by the episode loop, not apply_action")]
    StopNotApplicable,
    #[error("episode is already done")]
    EpisodeDone,
    #[error("unsatisfiable generator config: {0}")]
    Unsatisfiable(String),
}

impl WorldError {
    fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        WorldError::Invalid {
            field: field.into(),
            message: message.into(),
        }
    }
}

/// Named landmark contour supplied before the episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandmarkPrior {
    pub name: String,
    pub contour: Polygon,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneObject {
    pub id: String,
    pub object_type: ObjectClass,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub color: Option<Color>,
    pub position: WorldPoint,
    /// Axis-aligned size `[w, h]` in meters.
    pub extent: [f64; 2],
}

impl SceneObject {
    pub fn size_class(&self) -> SizeClass {
        SizeClass::from_extent(self.extent)
    }
}

/// One relation constraint of a goal. `landmark: None` means the goal's anchor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationConstraint {
    pub relation: Relation,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qualifier: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub landmark: Option<String>,
}

impl RelationConstraint {
    pub fn anchored(relation: Relation) -> Self {
        RelationConstraint {
            relation,
            qualifier: None,
            landmark: None,
        }
    }
}

/// Structured navigation goal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoalSpec {
    pub target_class: ObjectClass,
    /// Attribute name (`color`, `size`) to value.
    #[serde(rename = "attributes", default)]
    pub target_attributes: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor_landmark: Option<String>,
    #[serde(default)]
    pub relation_chain: Vec<RelationConstraint>,
    /// Ground truth, used only for scoring.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_object_id: Option<String>,
}

impl GoalSpec {
    pub fn class_only(class: ObjectClass) -> Self {
        GoalSpec {
            target_class: class,
            target_attributes: BTreeMap::new(),
            anchor_landmark: None,
            relation_chain: Vec::new(),
            target_object_id: None,
        }
    }

    /// Goal with the ground-truth id stripped.
    pub fn agent_view(&self) -> GoalSpec {
        GoalSpec {
            target_object_id: None,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub bounds: MapBounds,
    pub landmarks: Vec<LandmarkPrior>,
    pub objects: Vec<SceneObject>,
    pub goal: GoalSpec,
    pub start: Pose,
    pub seed: u64,
}

impl Scenario {
    pub fn landmark(&self, name: &str) -> Option<&LandmarkPrior> {
        find_landmark(&self.landmarks, name)
    }

    pub fn object(&self, id: &str) -> Option<&SceneObject> {
        self.objects.iter().find(|o| o.id == id)
    }

    pub fn target(&self) -> Option<&SceneObject> {
        self.goal
            .target_object_id
            .as_deref()
            .and_then(|id| self.object(id))
    }

    pub fn target_position(&self) -> Option<WorldPoint> {
        self.target().map(|o| o.position)
    }

    pub fn validate(&self) -> Result<(), WorldError> {
        self.bounds
            .validate()
            .map_err(|e| WorldError::invalid("bounds", e.to_string()))?;
        let rect = self.bounds.rect();
        let mut names = BTreeSet::new();
        for (i, lm) in self.landmarks.iter().enumerate() {
            if lm.name.trim().is_empty() {
                return Err(WorldError::invalid(
                    format!("landmarks[{i}].name"),
                    "empty name",
                ));
            }
            if !names.insert(lm.name.to_ascii_lowercase()) {
                return Err(WorldError::invalid(
                    format!("landmarks[{i}].name"),
                    format!("duplicate landmark name `{}`", lm.name),
                ));
            }
        }
        let mut ids = BTreeSet::new();
        for (i, o) in self.objects.iter().enumerate() {
            if !ids.insert(o.id.as_str()) {
                return Err(WorldError::invalid(
                    format!("objects[{i}].id"),
                    format!("duplicate object id `{}`", o.id),
                ));
            }
            if !o.position.is_finite() {
                return Err(WorldError::invalid(
                    format!("objects[{i}].position"),
                    GeometryError::NonFinite.to_string(),
                ));
            }
            if !(o.extent[0] > 0.0 && o.extent[1] > 0.0) {
                return Err(WorldError::invalid(
                    format!("objects[{i}].extent"),
                    "extent must be positive",
                ));
            }
        }
        if !(self.start.z > 0.0) || !rect.contains(&self.start.position()) {
            return Err(WorldError::invalid(
                "start",
                "start pose must lie inside bounds with positive altitude",
            ));
        }
        for (k, v) in &self.goal.target_attributes {
            match k.as_str() {
                "color" => {
                    v.parse::<Color>()
                        .map_err(|e| WorldError::invalid("goal.attributes.color", e))?;
                }
                "size" => {
                    v.parse::<SizeClass>()
                        .map_err(|e| WorldError::invalid("goal.attributes.size", e))?;
                }
                other => {
                    return Err(WorldError::invalid(
                        format!("goal.attributes.{other}"),
                        "unknown attribute, allowed: color, size",
                    ))
                }
            }
        }
        if let Some(anchor) = &self.goal.anchor_landmark {
            if self.landmark(anchor).is_none() {
                return Err(WorldError::invalid(
                    "goal.anchor_landmark",
                    format!("no landmark named `{anchor}`"),
                ));
            }
        }
        for (i, c) in self.goal.relation_chain.iter().enumerate() {
            let lm = c.landmark.as_ref().or(self.goal.anchor_landmark.as_ref());
            match lm {
                Some(name) if self.landmark(name).is_some() => {}
                _ => {
                    return Err(WorldError::invalid(
                        format!("goal.relation_chain[{i}]"),
                        "relation needs an existing anchor or landmark",
                    ))
                }
            }
        }
        match &self.goal.target_object_id {
            None => {
                return Err(WorldError::invalid(
                    "goal.target_object_id",
                    "missing ground-truth target id",
                ))
            }
            Some(id) => {
                let t = self.object(id).ok_or_else(|| {
                    WorldError::invalid(
                        "goal.target_object_id",
                        format!("no object with id `{id}`"),
                    )
                })?;
                if !rect.contains(&t.position) {
                    return Err(WorldError::invalid(
                        "goal.target_object_id",
                        "target lies outside bounds",
                    ));
                }
            }
        }
        Ok(())
    }

    /// Objects satisfying the goal under exact (ground-truth) evaluation.
    pub fn exact_matches(&self) -> Vec<&SceneObject> {
        exact_goal_matches(&self.goal, &self.landmarks, &self.objects)
    }

    pub fn from_json(text: &str) -> Result<Scenario, WorldError> {
        let s: Scenario = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }
}

pub fn find_landmark<'a>(landmarks: &'a [LandmarkPrior], name: &str) -> Option<&'a LandmarkPrior> {
    let n = name.trim();
    landmarks.iter().find(|l| l.name.eq_ignore_ascii_case(n))
}

/// Brute-force goal evaluation over ground-truth objects.
pub fn exact_goal_matches<'a>(
    goal: &GoalSpec,
    landmarks: &[LandmarkPrior],
    objects: &'a [SceneObject],
) -> Vec<&'a SceneObject> {
    objects
        .iter()
        .filter(|o| {
            if o.object_type != goal.target_class {
                return false;
            }
            for (k, v) in &goal.target_attributes {
                let ok = match k.as_str() {
                    "color" => o.color.map(|c| c.as_str().eq_ignore_ascii_case(v)) == Some(true),
                    "size" => o.size_class().as_str().eq_ignore_ascii_case(v),
                    _ => false,
                };
                if !ok {
                    return false;
                }
            }
            goal.relation_chain.iter().all(|c| {
                let name = c.landmark.as_ref().or(goal.anchor_landmark.as_ref());
                let Some(lm) = name.and_then(|n| find_landmark(landmarks, n)) else {
                    return false;
                };
                crate::hsg::landmark_edge(&o.position, &lm.contour) == Some(c.relation)
            })
        })
        .collect()
}

pub fn load_scenario(path: &Path) -> Result<Scenario, WorldError> {
    let text = fs::read_to_string(path).map_err(|source| WorldError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Scenario::from_json(&text)
}

pub fn save_scenario(scenario: &Scenario, path: &Path) -> Result<(), WorldError> {
    fs::write(path, scenario.to_json()).map_err(|source| WorldError::Io {
        path: path.display().to_string(),
        source,
    })
}
