use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::chain::{AttributeKey, Op, OpChain, QueryOp};
use crate::geometry::Rect;
use crate::hsg::{NodeId, SceneGraph, SceneNode};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub op: QueryOp,
    pub input_count: usize,
    pub output_count: usize,
    pub fallback_used: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryResult {
    pub candidates: Vec<NodeId>,
    pub trace: Vec<TraceRecord>,
}

/// Per-node attribute test shared by the filter ops.
pub(crate) fn attribute_matches(n: &SceneNode, key: AttributeKey, value: &str) -> bool {
    let v = value.trim();
    match key {
        AttributeKey::Color => n.color.is_some_and(|c| c.as_str().eq_ignore_ascii_case(v)),
        AttributeKey::Size => n
            .size_class()
            .is_some_and(|s| s.as_str().eq_ignore_ascii_case(v)),
        AttributeKey::Class => n
            .object_type
            .is_some_and(|c| c.as_str().eq_ignore_ascii_case(v)),
        AttributeKey::Name => n.name.as_deref().is_some_and(|s| s.eq_ignore_ascii_case(v)),
    }
}

/// Fold the candidate set through every op. The initial set is the whole graph.
pub fn execute_chain(g: &SceneGraph, c: &OpChain) -> QueryResult {
    execute_with_flag(g, c, false)
}

pub(crate) fn execute_with_flag(g: &SceneGraph, c: &OpChain, fallback: bool) -> QueryResult {
    let mut current: Vec<NodeId> = g.nodes().iter().map(|n| n.id).collect();
    let mut trace = Vec::with_capacity(c.len());
    for (op, t) in c.ops().iter().zip(c.typed()) {
        let input_count = current.len();
        current = apply(g, t, &current);
        trace.push(TraceRecord {
            op: op.clone(),
            input_count,
            output_count: current.len(),
            fallback_used: fallback,
        });
    }
    QueryResult {
        candidates: current,
        trace,
    }
}

fn node(g: &SceneGraph, id: NodeId) -> &SceneNode {
    g.node(id).expect("candidate ids come from the graph")
}

fn apply(g: &SceneGraph, op: &Op, input: &[NodeId]) -> Vec<NodeId> {
    match op {
        Op::ByName(name) => input
            .iter()
            .copied()
            .filter(|id| {
                let n = node(g, *id);
                !n.is_object()
                    && n.name
                        .as_deref()
                        .is_some_and(|s| s.eq_ignore_ascii_case(name.trim()))
            })
            .collect(),
        Op::Children(rels) => {
            let mut out = BTreeSet::new();
            for id in input {
                match rels {
                    None => out.extend(g.children(*id, None)),
                    Some(rs) => {
                        for r in rs {
                            out.extend(g.children(*id, Some(*r)));
                        }
                    }
                }
            }
            out.into_iter().collect()
        }
        Op::Class(c) => input
            .iter()
            .copied()
            .filter(|id| node(g, *id).object_type == Some(*c))
            .collect(),
        Op::Attribute(k, v) => input
            .iter()
            .copied()
            .filter(|id| attribute_matches(node(g, *id), *k, v))
            .collect(),
        Op::RelationTo(rels, landmark) => {
            let Some(l) = g.node_by_name(landmark) else {
                return Vec::new();
            };
            let lid = l.id;
            input
                .iter()
                .copied()
                .filter(|id| g.relation(lid, *id).is_some_and(|r| rels.contains(&r)))
                .collect()
        }
        Op::Nearest { radius, k } => {
            // candidate window from the R-tree, exact distance check after
            let mut found: Vec<(f64, NodeId)> = Vec::new();
            let mut seen = BTreeSet::new();
            for id in input {
                let src = node(g, *id);
                let window: Rect = src.bbox.expanded(*radius);
                for cand in g.nodes_within(&window) {
                    let u = node(g, cand);
                    if u.level == crate::hsg::NodeLevel::Block {
                        continue;
                    }
                    let d = src.distance_to(&u.position);
                    if d <= *radius {
                        if seen.insert(cand) {
                            found.push((d, cand));
                        } else if let Some(e) = found.iter_mut().find(|e| e.1 == cand) {
                            e.0 = e.0.min(d);
                        }
                    }
                }
            }
            if let Some(k) = k {
                found.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                found.truncate(*k);
            }
            let mut ids: Vec<NodeId> = found.into_iter().map(|(_, id)| id).collect();
            ids.sort_unstable();
            ids
        }
    }
}
