//! Random scene graphs, chains and goals, plus a brute-force chain evaluator.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use aerialnav::geometry::{MapBounds, Polygon, Rect, WorldPoint};
use aerialnav::hsg::{HsgParams, NodeId, NodeLevel, SceneGraph, SceneNode};
use aerialnav::query::{AttributeKey, Op, OpChain, QueryOp};
use aerialnav::vocab::{Color, ObjectClass, Relation, SizeClass};
use aerialnav::world::{GoalSpec, LandmarkPrior, RelationConstraint};
use proptest::prelude::*;

pub const CLASSES: [ObjectClass; 3] = [
    ObjectClass::Vehicle,
    ObjectClass::Tree,
    ObjectClass::Building,
];
pub const COLORS: [Option<Color>; 3] = [Some(Color::White), Some(Color::Gray), None];
pub const RELS: [Relation; 5] = [
    Relation::Contains,
    Relation::AdjacentTo,
    Relation::NorthOf,
    Relation::EastOf,
    Relation::NearCorner,
];

#[derive(Debug, Clone)]
pub struct GraphSpec {
    pub landmarks: Vec<(f64, f64, f64, f64)>,
    pub objects: Vec<(usize, usize, f64, f64, f64)>,
}

pub fn graph_spec() -> impl Strategy<Value = GraphSpec> {
    let lm = (0usize..3).prop_flat_map(|n| {
        prop::collection::vec((0.0..60.0f64, 0.0..60.0f64, 10.0..40.0f64, 6.0..40.0f64), n)
    });
    let objs = prop::collection::vec(
        (
            0usize..3,
            0usize..3,
            0.0..300.0f64,
            0.0..300.0f64,
            0.2..1.0f64,
        ),
        0..47,
    );
    (lm, objs).prop_map(|(landmarks, objects)| GraphSpec { landmarks, objects })
}

pub fn build(spec: &GraphSpec) -> SceneGraph {
    // landmark i lives in its own 100 m column so contours never overlap
    let priors: Vec<LandmarkPrior> = spec
        .landmarks
        .iter()
        .enumerate()
        .map(|(i, (x, y, w, h))| {
            let x0 = 100.0 * i as f64 + x;
            let y0 = 100.0 + y;
            LandmarkPrior {
                name: format!("L{i}"),
                contour: Polygon::rectangle(&Rect::new(x0, y0, x0 + w, y0 + h)).unwrap(),
            }
        })
        .collect();
    let bounds = MapBounds::new(0.0, 0.0, 300.0, 300.0, 1.0).unwrap();
    let mut g = SceneGraph::new(&priors, &bounds, HsgParams::default()).unwrap();
    for (c, col, x, y, conf) in &spec.objects {
        g.add_object(CLASSES[*c], COLORS[*col], WorldPoint::new(*x, *y), *conf);
    }
    g
}

pub fn op_strategy(source: bool) -> BoxedStrategy<QueryOp> {
    let name = prop_oneof![
        Just("block".to_string()),
        (0usize..4).prop_map(|i| format!("l{i}"))
    ];
    let class = (0usize..3).prop_map(|c| QueryOp::class(CLASSES[c]));
    let color = (0usize..2).prop_map(|c| QueryOp::attribute("color", COLORS[c].unwrap().as_str()));
    let size = (0usize..3).prop_map(|s| QueryOp::attribute("size", SizeClass::ALL[s].as_str()));
    if source {
        return prop_oneof![name.prop_map(|n| QueryOp::by_name(&n)), class, color].boxed();
    }
    prop_oneof![
        prop::option::of(0usize..5).prop_map(|r| QueryOp::children(r.map(|i| RELS[i]))),
        class,
        color,
        size,
        ((0usize..5), (0usize..4))
            .prop_map(|(r, l)| QueryOp::relation_to(RELS[r], &format!("L{l}"))),
        (5.0..60.0f64, prop::option::of(1usize..4)).prop_map(|(radius, k)| {
            let op = QueryOp::nearest(radius);
            match k {
                Some(k) => op.with_kwarg("k", serde_json::json!(k)),
                None => op,
            }
        }),
    ]
    .boxed()
}

pub fn chain_strategy() -> impl Strategy<Value = OpChain> {
    (
        op_strategy(true),
        prop::collection::vec(op_strategy(false), 0..6),
    )
        .prop_map(|(s, rest)| {
            let mut ops = vec![s];
            ops.extend(rest);
            OpChain::new(ops).expect("generated chains are valid")
        })
}

// Brute-force evaluator: scans every node and the full edge list for each op.

pub fn oracle_distance(src: &SceneNode, p: &WorldPoint) -> f64 {
    match src.level {
        NodeLevel::Landmark => src.contour.as_ref().unwrap().distance_to(p),
        NodeLevel::Block => src.bbox.distance_to(p),
        NodeLevel::Object => {
            ((src.position.x - p.x).powi(2) + (src.position.y - p.y).powi(2)).sqrt()
        }
    }
}

pub fn oracle_attr(n: &SceneNode, key: AttributeKey, v: &str) -> bool {
    match key {
        AttributeKey::Color => n.color.map(|c| c.as_str()) == Some(v),
        AttributeKey::Size => n.extent.map(|e| SizeClass::from_extent(e).as_str()) == Some(v),
        AttributeKey::Class => n.object_type.map(|c| c.as_str()) == Some(v),
        AttributeKey::Name => n.name.as_deref().map(str::to_lowercase) == Some(v.to_lowercase()),
    }
}

pub fn named<'a>(all: &[&'a SceneNode], name: &str) -> Option<&'a SceneNode> {
    all.iter().copied().find(|m| {
        !m.is_object() && m.name.as_deref().map(str::to_lowercase) == Some(name.to_lowercase())
    })
}

pub fn oracle(g: &SceneGraph, c: &OpChain) -> Vec<NodeId> {
    let edges: BTreeMap<(NodeId, NodeId), Relation> = g
        .edges()
        .into_iter()
        .map(|e| ((e.src, e.dst), e.relation))
        .collect();
    let all: Vec<&SceneNode> = g.nodes().iter().collect();
    let mut cur: BTreeSet<NodeId> = all.iter().map(|n| n.id).collect();
    for op in c.typed() {
        let keep = |n: &SceneNode| -> bool {
            match op {
                Op::ByName(name) => {
                    named(&all, name).is_some_and(|m| m.id == n.id) && cur.contains(&n.id)
                }
                Op::Children(rels) => cur.iter().any(|s| {
                    edges
                        .get(&(*s, n.id))
                        .is_some_and(|r| rels.as_ref().is_none_or(|rs| rs.contains(r)))
                }),
                Op::Class(k) => cur.contains(&n.id) && n.object_type == Some(*k),
                Op::Attribute(k, v) => cur.contains(&n.id) && oracle_attr(n, *k, v),
                Op::RelationTo(rels, l) => {
                    cur.contains(&n.id)
                        && named(&all, l).is_some_and(|m| {
                            edges.get(&(m.id, n.id)).is_some_and(|r| rels.contains(r))
                        })
                }
                Op::Nearest { radius, .. } => {
                    n.level != NodeLevel::Block
                        && cur
                            .iter()
                            .any(|s| oracle_distance(all[s.0], &n.position) <= *radius)
                }
            }
        };
        let mut next: Vec<(f64, NodeId)> = all
            .iter()
            .filter(|n| keep(n))
            .map(|n| {
                let d = cur
                    .iter()
                    .map(|s| oracle_distance(all[s.0], &n.position))
                    .fold(f64::INFINITY, f64::min);
                (d, n.id)
            })
            .collect();
        if let Op::Nearest { k: Some(k), .. } = op {
            next.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
            next.truncate(*k);
        }
        cur = next.into_iter().map(|(_, id)| id).collect();
    }
    cur.into_iter().collect()
}

pub fn goal_strategy() -> impl Strategy<Value = GoalSpec> {
    (
        0usize..3,
        prop::option::of(0usize..2),
        prop::option::of(0usize..3),
        prop::collection::vec((0usize..5, prop::option::of(0usize..3)), 0..3),
    )
        .prop_map(|(c, color, anchor, rels)| {
            let mut attrs = BTreeMap::new();
            if let Some(col) = color {
                attrs.insert(
                    "color".to_string(),
                    COLORS[col].unwrap().as_str().to_string(),
                );
            }
            let anchor = anchor.map(|i| format!("L{i}"));
            let relation_chain = rels
                .into_iter()
                .map(|(r, l)| RelationConstraint {
                    relation: RELS[r],
                    qualifier: None,
                    landmark: match (&anchor, l) {
                        (Some(_), None) => None,
                        (_, Some(i)) => Some(format!("L{i}")),
                        (None, None) => Some("L0".to_string()),
                    },
                })
                .collect();
            GoalSpec {
                target_class: CLASSES[c],
                target_attributes: attrs,
                anchor_landmark: anchor,
                relation_chain,
                target_object_id: None,
            }
        })
}
