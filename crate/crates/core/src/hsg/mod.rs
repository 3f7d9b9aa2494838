//! Hierarchical scene graph: block, landmark and object nodes with labeled
//! spatial edges, an R-tree over node boxes, and similarity-fusion merging of
//! incoming detections.

mod features;
mod index;
mod relations;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{MapBounds, Polygon, Rect, WorldPoint};
use crate::perception::PerceivedObject;
use crate::vocab::{Color, ObjectClass, Relation, SizeClass};
use crate::world::LandmarkPrior;

pub use features::{cosine, encode, FEATURE_DIMS};
pub use index::SpatialIndex;
pub use relations::{
    landmark_edge, landmark_relation, object_relation, ADJACENT_RADIUS, CORNER_RADIUS,
    LANDMARK_EDGE_RADIUS, OBJECT_ADJACENT_RADIUS, OBJECT_DIRECTIONAL_RADIUS,
};

pub const BLOCK_NAME: &str = "block";

#[derive(Debug, Error, PartialEq)]
pub enum HsgError {
    #[error("duplicate landmark name `{0}`")]
    DuplicateLandmark(String),
    #[error("node {0} is not an object node")]
    NotObject(NodeId),
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("invalid graph dump: {0}")]
    BadDump(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeLevel {
    Block,
    Landmark,
    Object,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HsgParams {
    /// Weight of the semantic term.
    pub gamma: f64,
    /// Spatial kernel width in meters.
    pub sigma: f64,
    /// Merge threshold.
    pub rho: f64,
}

impl Default for HsgParams {
    fn default() -> Self {
        HsgParams {
            gamma: 0.95,
            sigma: 10.0,
            rho: 0.8,
        }
    }
}

impl HsgParams {
    /// Radius of the merge-candidate window (3 sigma).
    pub fn candidate_radius(&self) -> f64 {
        3.0 * self.sigma
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(format!("gamma must be in [0, 1], got {}", self.gamma));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(format!("sigma must be positive, got {}", self.sigma));
        }
        if !(0.0..=1.0).contains(&self.rho) {
            return Err(format!("rho must be in [0, 1], got {}", self.rho));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneNode {
    pub id: NodeId,
    pub level: NodeLevel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub object_type: Option<ObjectClass>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub color: Option<Color>,
    pub position: WorldPoint,
    pub bbox: Rect,
    pub confidence: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub feature: Vec<f64>,
    pub observation_count: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contour: Option<Polygon>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extent: Option<[f64; 2]>,
    /// Sum of merged confidences, the position-averaging weight.
    #[serde(default)]
    pub weight: f64,
}

impl SceneNode {
    pub fn is_object(&self) -> bool {
        self.level == NodeLevel::Object
    }

    pub fn size_class(&self) -> Option<SizeClass> {
        self.extent.map(SizeClass::from_extent)
    }

    /// Distance from `p` to this node: contour distance for landmarks,
    /// box distance for the block, point distance for objects.
    pub fn distance_to(&self, p: &WorldPoint) -> f64 {
        match (&self.level, &self.contour) {
            (NodeLevel::Landmark, Some(c)) => c.distance_to(p),
            (NodeLevel::Block, _) => self.bbox.distance_to(p),
            _ => self.position.distance(p),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SceneEdge {
    pub src: NodeId,
    pub dst: NodeId,
    pub relation: Relation,
}

/// Outcome of one [`SceneGraph::integrate`] call.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntegrateReport {
    pub inserted: Vec<NodeId>,
    pub merged: Vec<NodeId>,
}

/// S = (1 - gamma) exp(-d^2 / sigma^2) + gamma cos.
pub fn similarity_terms(distance: f64, cos: f64, params: &HsgParams) -> f64 {
    (1.0 - params.gamma) * (-(distance * distance) / (params.sigma * params.sigma)).exp()
        + params.gamma * cos
}

/// Similarity of two object nodes.
pub fn similarity(a: &SceneNode, b: &SceneNode, params: &HsgParams) -> f64 {
    similarity_terms(
        a.position.distance(&b.position),
        cosine(&a.feature, &b.feature),
        params,
    )
}

/// Stored confidence of an object node.
pub fn confidence(v: &SceneNode) -> Result<f64, HsgError> {
    if v.is_object() {
        Ok(v.confidence)
    } else {
        Err(HsgError::NotObject(v.id))
    }
}

#[derive(Debug, Clone)]
pub struct SceneGraph {
    nodes: Vec<SceneNode>,
    /// One relation per ordered pair; the relation describes `dst` relative to `src`.
    edges: BTreeMap<(NodeId, NodeId), Relation>,
    index: SpatialIndex,
    params: HsgParams,
}

#[derive(Serialize, Deserialize)]
struct GraphDump {
    hyperparams: HsgParams,
    nodes: Vec<SceneNode>,
    edges: Vec<SceneEdge>,
}

impl SceneGraph {
    /// One block node over `bounds`, one node per landmark, block-contains-landmark edges.
    pub fn new(
        priors: &[LandmarkPrior],
        bounds: &MapBounds,
        params: HsgParams,
    ) -> Result<Self, HsgError> {
        let mut seen = BTreeSet::new();
        for p in priors {
            if !seen.insert(p.name.to_ascii_lowercase()) {
                return Err(HsgError::DuplicateLandmark(p.name.clone()));
            }
        }
        let block = bounds.rect();
        let mut nodes = vec![SceneNode {
            id: NodeId(0),
            level: NodeLevel::Block,
            name: Some(BLOCK_NAME.to_string()),
            object_type: None,
            color: None,
            position: block.center(),
            bbox: block,
            confidence: 1.0,
            feature: Vec::new(),
            observation_count: 0,
            contour: None,
            extent: None,
            weight: 0.0,
        }];
        let mut edges = BTreeMap::new();
        for (i, p) in priors.iter().enumerate() {
            let id = NodeId(i + 1);
            nodes.push(SceneNode {
                id,
                level: NodeLevel::Landmark,
                name: Some(p.name.clone()),
                object_type: None,
                color: None,
                position: p.contour.centroid(),
                bbox: p.contour.envelope(),
                confidence: 1.0,
                feature: Vec::new(),
                observation_count: 0,
                contour: Some(p.contour.clone()),
                extent: None,
                weight: 0.0,
            });
            edges.insert((NodeId(0), id), Relation::Contains);
        }
        let index = SpatialIndex::bulk(nodes.iter().map(|n| (n.id, n.bbox)));
        Ok(SceneGraph {
            nodes,
            edges,
            index,
            params,
        })
    }

    pub fn params(&self) -> &HsgParams {
        &self.params
    }

    pub fn nodes(&self) -> &[SceneNode] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> Option<&SceneNode> {
        self.nodes.get(id.0)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn object_nodes(&self) -> impl Iterator<Item = &SceneNode> {
        self.nodes.iter().filter(|n| n.is_object())
    }

    pub fn object_count(&self) -> usize {
        self.object_nodes().count()
    }

    pub fn landmark_nodes(&self) -> impl Iterator<Item = &SceneNode> {
        self.nodes.iter().filter(|n| n.level == NodeLevel::Landmark)
    }

    pub fn edges(&self) -> Vec<SceneEdge> {
        self.edges
            .iter()
            .map(|(&(src, dst), &relation)| SceneEdge { src, dst, relation })
            .collect()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn relation(&self, src: NodeId, dst: NodeId) -> Option<Relation> {
        self.edges.get(&(src, dst)).copied()
    }

    /// Targets of edges leaving `src`, optionally restricted to one relation.
    pub fn children(&self, src: NodeId, relation: Option<Relation>) -> Vec<NodeId> {
        self.edges
            .range((src, NodeId(0))..=(src, NodeId(usize::MAX)))
            .filter(|(_, r)| relation.is_none_or(|want| **r == want))
            .map(|(&(_, dst), _)| dst)
            .collect()
    }

    /// Case-insensitive lookup of a block or landmark node.
    pub fn node_by_name(&self, name: &str) -> Option<&SceneNode> {
        let n = name.trim();
        self.nodes
            .iter()
            .filter(|v| !v.is_object())
            .find(|v| v.name.as_deref().is_some_and(|s| s.eq_ignore_ascii_case(n)))
    }

    /// Nodes whose box intersects `region`, ascending id.
    pub fn nodes_within(&self, region: &Rect) -> Vec<NodeId> {
        self.index.query(region)
    }

    /// Object nodes whose position lies within `radius` of `p`, ascending id.
    pub fn objects_near(&self, p: &WorldPoint, radius: f64) -> Vec<NodeId> {
        let window = Rect::new(p.x - radius, p.y - radius, p.x + radius, p.y + radius);
        self.index
            .query(&window)
            .into_iter()
            .filter(|id| {
                let n = &self.nodes[id.0];
                n.is_object() && n.position.distance(p) <= radius
            })
            .collect()
    }

    /// Merge each detection into the best matching object node, or insert it.
    pub fn integrate(&mut self, increment: &[PerceivedObject]) -> IntegrateReport {
        let mut report = IntegrateReport::default();
        let mut touched = BTreeSet::new();
        for obs in increment {
            let feature = encode(obs.object_type, obs.color);
            let mut best: Option<(f64, NodeId)> = None;
            for id in self.objects_near(&obs.position, self.params.candidate_radius()) {
                let n = &self.nodes[id.0];
                let s = similarity_terms(
                    n.position.distance(&obs.position),
                    cosine(&n.feature, &feature),
                    &self.params,
                );
                // ids ascend, so strict > keeps the lowest id on ties
                if best.is_none_or(|(b, _)| s > b) {
                    best = Some((s, id));
                }
            }
            match best {
                Some((s, id)) if s >= self.params.rho => {
                    self.merge_into(id, obs, &feature);
                    report.merged.push(id);
                    touched.insert(id);
                }
                _ => {
                    let id = self.insert_object(obs, feature);
                    report.inserted.push(id);
                    touched.insert(id);
                }
            }
        }
        for id in touched {
            self.refresh_edges(id);
        }
        report
    }

    fn insert_object(&mut self, obs: &PerceivedObject, feature: Vec<f64>) -> NodeId {
        let id = NodeId(self.nodes.len());
        let bbox = Rect::centered(obs.position, obs.extent[0], obs.extent[1]);
        self.nodes.push(SceneNode {
            id,
            level: NodeLevel::Object,
            name: None,
            object_type: Some(obs.object_type),
            color: obs.color,
            position: obs.position,
            bbox,
            confidence: obs.confidence,
            feature,
            observation_count: 1,
            contour: None,
            extent: Some(obs.extent),
            weight: obs.confidence,
        });
        self.index.insert(id, &bbox);
        id
    }

    fn merge_into(&mut self, id: NodeId, obs: &PerceivedObject, feature: &[f64]) {
        let old_bbox = self.nodes[id.0].bbox;
        let n = &mut self.nodes[id.0];
        let w = n.weight + obs.confidence;
        if w > 0.0 {
            n.position = WorldPoint::new(
                (n.weight * n.position.x + obs.confidence * obs.position.x) / w,
                (n.weight * n.position.y + obs.confidence * obs.position.y) / w,
            );
        }
        n.weight = w;
        n.confidence = n.confidence.max(obs.confidence);
        let k = n.observation_count as f64;
        for (f, x) in n.feature.iter_mut().zip(feature) {
            *f = (*f * k + x) / (k + 1.0);
        }
        n.observation_count += 1;
        let current = (n.object_type.unwrap_or(obs.object_type), n.color);
        let (class, color) = features::decode(&n.feature, current);
        n.object_type = Some(class);
        n.color = color;
        let extent = n.extent.unwrap_or(obs.extent);
        n.bbox = Rect::centered(n.position, extent[0], extent[1]);
        let new_bbox = n.bbox;
        if new_bbox != old_bbox {
            self.index.remove(id, &old_bbox);
            self.index.insert(id, &new_bbox);
        }
    }

    /// Recompute every edge incident to object node `id` from current positions.
    fn refresh_edges(&mut self, id: NodeId) {
        self.edges.retain(|&(s, d), _| s != id && d != id);
        let p = self.nodes[id.0].position;
        self.edges.insert((NodeId(0), id), Relation::Contains);
        let landmarks: Vec<(NodeId, Relation)> = self
            .landmark_nodes()
            .filter_map(|l| {
                let c = l.contour.as_ref()?;
                landmark_edge(&p, c).map(|r| (l.id, r))
            })
            .collect();
        for (l, r) in landmarks {
            self.edges.insert((l, id), r);
        }
        for other in self.objects_near(&p, OBJECT_DIRECTIONAL_RADIUS) {
            if other == id {
                continue;
            }
            let q = self.nodes[other.0].position;
            if let Some(r) = object_relation(&q, &p) {
                self.edges.insert((other, id), r);
            }
            if let Some(r) = object_relation(&p, &q) {
                self.edges.insert((id, other), r);
            }
        }
    }

    pub fn to_json(&self) -> String {
        let dump = GraphDump {
            hyperparams: self.params,
            nodes: self.nodes.clone(),
            edges: self.edges(),
        };
        serde_json::to_string_pretty(&dump).expect("graph serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, HsgError> {
        let dump: GraphDump =
            serde_json::from_str(text).map_err(|e| HsgError::BadDump(e.to_string()))?;
        for (i, n) in dump.nodes.iter().enumerate() {
            if n.id != NodeId(i) {
                return Err(HsgError::BadDump(format!("node {i} has id {}", n.id)));
            }
        }
        let mut edges = BTreeMap::new();
        for e in dump.edges {
            if e.src.0 >= dump.nodes.len() || e.dst.0 >= dump.nodes.len() {
                return Err(HsgError::BadDump(format!(
                    "edge {} -> {} references a missing node",
                    e.src, e.dst
                )));
            }
            edges.insert((e.src, e.dst), e.relation);
        }
        let index = SpatialIndex::bulk(dump.nodes.iter().map(|n| (n.id, n.bbox)));
        Ok(SceneGraph {
            nodes: dump.nodes,
            edges,
            index,
            params: dump.hyperparams,
        })
    }

    /// Builder for tests and offline query experiments: inserts an object node
    /// directly (no merging) and labels its edges.
    pub fn add_object(
        &mut self,
        class: ObjectClass,
        color: Option<Color>,
        position: WorldPoint,
        confidence: f64,
    ) -> NodeId {
        let obs = PerceivedObject {
            position,
            object_type: class,
            color,
            confidence,
            extent: class.typical_extent(),
        };
        let id = self.insert_object(&obs, encode(class, color));
        self.refresh_edges(id);
        id
    }

    /// Override one edge label, e.g. with a relation supplied by an external reasoner.
    pub fn set_relation(
        &mut self,
        src: NodeId,
        dst: NodeId,
        relation: Relation,
    ) -> Result<(), HsgError> {
        for id in [src, dst] {
            if id.0 >= self.nodes.len() {
                return Err(HsgError::UnknownNode(id));
            }
        }
        self.edges.insert((src, dst), relation);
        Ok(())
    }
}
