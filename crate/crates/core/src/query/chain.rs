use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::QueryError;
use crate::hsg::{LANDMARK_EDGE_RADIUS, OBJECT_DIRECTIONAL_RADIUS};
use crate::vocab::{ObjectClass, Relation};
use crate::world::GoalSpec;

/// Radius used by level-2 relaxation when the anchor is the whole block.
const UNBOUNDED_RADIUS: f64 = 1e9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    GetGeonodeByName,
    GetChildNodes,
    FilterByClass,
    FilterByAttribute,
    FilterByRelation,
    NearestTo,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::GetGeonodeByName,
        Method::GetChildNodes,
        Method::FilterByClass,
        Method::FilterByAttribute,
        Method::FilterByRelation,
        Method::NearestTo,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::GetGeonodeByName => "get_geonode_by_name",
            Method::GetChildNodes => "get_child_nodes",
            Method::FilterByClass => "filter_by_class",
            Method::FilterByAttribute => "filter_by_attribute",
            Method::FilterByRelation => "filter_by_relation",
            Method::NearestTo => "nearest_to",
        }
    }

    pub fn parse(s: &str) -> Option<Method> {
        Method::ALL.iter().copied().find(|m| m.as_str() == s)
    }

    /// Methods allowed as the first op (name lookup or whole-graph scan).
    pub fn is_source(self) -> bool {
        matches!(
            self,
            Method::GetGeonodeByName | Method::FilterByClass | Method::FilterByAttribute
        )
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Node attribute addressed by `filter_by_attribute`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttributeKey {
    Color,
    Size,
    Class,
    Name,
}

impl AttributeKey {
    pub fn parse(s: &str) -> Option<AttributeKey> {
        match s.trim().to_ascii_lowercase().as_str() {
            "color" | "colour" => Some(AttributeKey::Color),
            "size" => Some(AttributeKey::Size),
            "class" | "object_type" | "type" => Some(AttributeKey::Class),
            "name" => Some(AttributeKey::Name),
            _ => None,
        }
    }
}

/// Typed view of a validated op.
#[derive(Debug, Clone, PartialEq)]
pub enum Op {
    ByName(String),
    /// `None` follows edges of any relation.
    Children(Option<Vec<Relation>>),
    Class(ObjectClass),
    Attribute(AttributeKey, String),
    RelationTo(Vec<Relation>, String),
    Nearest {
        radius: f64,
        k: Option<usize>,
    },
}

/// One op in wire form: method plus positional and named arguments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryOp {
    pub method: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub args: Vec<Value>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub kwargs: BTreeMap<String, Value>,
}

impl QueryOp {
    pub fn new(method: Method, args: Vec<Value>) -> Self {
        QueryOp {
            method: method.as_str().to_string(),
            args,
            kwargs: BTreeMap::new(),
        }
    }

    pub fn with_kwarg(mut self, key: &str, value: Value) -> Self {
        self.kwargs.insert(key.to_string(), value);
        self
    }

    pub fn by_name(name: &str) -> Self {
        QueryOp::new(Method::GetGeonodeByName, vec![json!(name)])
    }

    pub fn children(relation: Option<Relation>) -> Self {
        let op = QueryOp::new(Method::GetChildNodes, vec![]);
        match relation {
            Some(r) => op.with_kwarg("relation_type", json!(r.as_str())),
            None => op,
        }
    }

    pub fn class(c: ObjectClass) -> Self {
        QueryOp::new(Method::FilterByClass, vec![json!(c.as_str())])
    }

    pub fn attribute(key: &str, value: &str) -> Self {
        QueryOp::new(Method::FilterByAttribute, vec![json!(key), json!(value)])
    }

    pub fn relation_to(r: Relation, landmark: &str) -> Self {
        QueryOp::new(
            Method::FilterByRelation,
            vec![json!(r.as_str()), json!(landmark)],
        )
    }

    pub fn nearest(radius: f64) -> Self {
        QueryOp::new(Method::NearestTo, vec![json!(radius)])
    }

    pub fn method(&self) -> Result<Method, QueryError> {
        Method::parse(&self.method).ok_or_else(|| QueryError::UnknownMethod(self.method.clone()))
    }

    /// Argument `pos`, or the named argument `name`; giving both is an error.
    fn arg(&self, pos: usize, name: &str) -> Result<Option<&Value>, QueryError> {
        match (self.args.get(pos), self.kwargs.get(name)) {
            (Some(_), Some(_)) => Err(QueryError::BadArity {
                method: self.method.clone(),
                message: format!("`{name}` given both positionally and by name"),
            }),
            (a, k) => Ok(a.or(k)),
        }
    }

    fn check_shape(&self, max_args: usize, names: &[&str]) -> Result<(), QueryError> {
        if self.args.len() > max_args {
            return Err(QueryError::BadArity {
                method: self.method.clone(),
                message: format!(
                    "expected at most {max_args} arguments, got {}",
                    self.args.len()
                ),
            });
        }
        if let Some(k) = self.kwargs.keys().find(|k| !names.contains(&k.as_str())) {
            return Err(QueryError::BadArity {
                method: self.method.clone(),
                message: format!("unexpected keyword `{k}`, allowed: {}", names.join(", ")),
            });
        }
        Ok(())
    }

    fn required<'a>(&'a self, v: Option<&'a Value>, what: &str) -> Result<&'a Value, QueryError> {
        v.ok_or_else(|| QueryError::BadArity {
            method: self.method.clone(),
            message: format!("missing `{what}`"),
        })
    }

    fn string(&self, v: &Value, what: &str) -> Result<String, QueryError> {
        v.as_str()
            .map(str::to_string)
            .ok_or_else(|| self.invalid(format!("`{what}` must be a string, got {v}")))
    }

    fn invalid(&self, message: String) -> QueryError {
        QueryError::InvalidArgument {
            method: self.method.clone(),
            message,
        }
    }

    fn relations(&self, v: &Value) -> Result<Vec<Relation>, QueryError> {
        let items: Vec<&Value> = match v {
            Value::Array(a) if !a.is_empty() => a.iter().collect(),
            Value::String(_) => vec![v],
            other => {
                return Err(self.invalid(format!("relation must be a string or list, got {other}")))
            }
        };
        items
            .into_iter()
            .map(|x| {
                self.string(x, "relation")?
                    .parse::<Relation>()
                    .map_err(|e| self.invalid(e))
            })
            .collect()
    }

    /// Validate arity and argument types, producing the typed op.
    pub fn typed(&self) -> Result<Op, QueryError> {
        match self.method()? {
            Method::GetGeonodeByName => {
                self.check_shape(1, &["name"])?;
                let v = self.required(self.arg(0, "name")?, "name")?;
                Ok(Op::ByName(self.string(v, "name")?))
            }
            Method::GetChildNodes => {
                self.check_shape(1, &["relation_type"])?;
                match self.arg(0, "relation_type")? {
                    None | Some(Value::Null) => Ok(Op::Children(None)),
                    Some(v) => Ok(Op::Children(Some(self.relations(v)?))),
                }
            }
            Method::FilterByClass => {
                self.check_shape(1, &["cls"])?;
                let v = self.required(self.arg(0, "cls")?, "cls")?;
                let c = self
                    .string(v, "cls")?
                    .parse::<ObjectClass>()
                    .map_err(|e| self.invalid(e))?;
                Ok(Op::Class(c))
            }
            Method::FilterByAttribute => {
                self.check_shape(2, &["attribute", "value"])?;
                let k = self.required(self.arg(0, "attribute")?, "attribute")?;
                let v = self.required(self.arg(1, "value")?, "value")?;
                let key = self.string(k, "attribute")?;
                let key = AttributeKey::parse(&key).ok_or_else(|| {
                    self.invalid(format!(
                        "unknown attribute `{key}`, allowed: color, size, class, name"
                    ))
                })?;
                Ok(Op::Attribute(key, self.string(v, "value")?))
            }
            Method::FilterByRelation => {
                self.check_shape(2, &["relation_type", "landmark"])?;
                let r = self.required(self.arg(0, "relation_type")?, "relation_type")?;
                let l = self.required(self.arg(1, "landmark")?, "landmark")?;
                Ok(Op::RelationTo(
                    self.relations(r)?,
                    self.string(l, "landmark")?,
                ))
            }
            Method::NearestTo => {
                self.check_shape(2, &["radius", "k"])?;
                let r = self.required(self.arg(0, "radius")?, "radius")?;
                let radius = r
                    .as_f64()
                    .filter(|x| x.is_finite() && *x >= 0.0)
                    .ok_or_else(|| {
                        self.invalid(format!("radius must be a non-negative number, got {r}"))
                    })?;
                let k = match self.arg(1, "k")? {
                    None | Some(Value::Null) => None,
                    Some(v) => Some(v.as_u64().ok_or_else(|| {
                        self.invalid(format!("k must be a non-negative integer, got {v}"))
                    })? as usize),
                };
                Ok(Op::Nearest { radius, k })
            }
        }
    }

    /// Copy with the relation argument replaced, keeping its position.
    fn with_relations(&self, rels: &[Relation]) -> QueryOp {
        let v = if rels.len() == 1 {
            json!(rels[0].as_str())
        } else {
            Value::Array(rels.iter().map(|r| json!(r.as_str())).collect())
        };
        let mut op = self.clone();
        if !op.args.is_empty() {
            op.args[0] = v;
        } else {
            op.kwargs.insert("relation_type".into(), v);
        }
        op
    }
}

impl fmt::Display for QueryOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = self.args.iter().map(|a| a.to_string()).collect();
        parts.extend(self.kwargs.iter().map(|(k, v)| format!("{k}={v}")));
        write!(f, "{}({})", self.method, parts.join(", "))
    }
}

/// Validated, non-empty op sequence starting with a source op.
#[derive(Debug, Clone, PartialEq)]
pub struct OpChain {
    ops: Vec<QueryOp>,
    typed: Vec<Op>,
}

impl OpChain {
    pub fn new(ops: Vec<QueryOp>) -> Result<Self, QueryError> {
        if ops.is_empty() {
            return Err(QueryError::EmptyChain);
        }
        let typed = ops
            .iter()
            .map(QueryOp::typed)
            .collect::<Result<Vec<_>, _>>()?;
        let first = ops[0].method()?;
        if !first.is_source() {
            return Err(QueryError::NotSourceOp(first.as_str().to_string()));
        }
        Ok(OpChain { ops, typed })
    }

    pub fn ops(&self) -> &[QueryOp] {
        &self.ops
    }

    pub fn typed(&self) -> &[Op] {
        &self.typed
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.ops).expect("ops serialize")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(&self.ops).expect("ops serialize")
    }
}

impl Serialize for OpChain {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.ops.serialize(s)
    }
}

impl<'de> Deserialize<'de> for OpChain {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let ops = Vec::<QueryOp>::deserialize(d)?;
        OpChain::new(ops).map_err(serde::de::Error::custom)
    }
}

/// Parse the JSON array-of-objects wire format.
pub fn parse_chain(document: &str) -> Result<OpChain, QueryError> {
    let ops: Vec<QueryOp> =
        serde_json::from_str(document).map_err(|e| QueryError::Malformed(e.to_string()))?;
    OpChain::new(ops)
}

/// Canonical chain: name lookup, child hop along the anchor relation, class
/// filter, attribute filters, then one relation filter per extra constraint.
/// Anchorless goals start with the class scan.
pub fn compile_chain(goal: &GoalSpec) -> Result<OpChain, QueryError> {
    let mut ops = Vec::new();
    let mut extra = Vec::new();
    if let Some(anchor) = &goal.anchor_landmark {
        ops.push(QueryOp::by_name(anchor));
        let mut hop = None;
        for c in &goal.relation_chain {
            let on_anchor = c
                .landmark
                .as_ref()
                .is_none_or(|l| l.eq_ignore_ascii_case(anchor));
            if on_anchor && hop.is_none() {
                hop = Some(c.relation);
            } else {
                extra.push((
                    c.relation,
                    c.landmark.clone().unwrap_or_else(|| anchor.clone()),
                ));
            }
        }
        ops.push(QueryOp::children(hop));
        ops.push(QueryOp::class(goal.target_class));
    } else {
        ops.push(QueryOp::class(goal.target_class));
        for c in &goal.relation_chain {
            let l = c.landmark.clone().ok_or_else(|| {
                QueryError::InvalidGoal("relation without anchor or landmark".into())
            })?;
            extra.push((c.relation, l));
        }
    }
    for (k, v) in &goal.target_attributes {
        ops.push(QueryOp::attribute(k, v));
    }
    for (r, l) in extra {
        ops.push(QueryOp::relation_to(r, &l));
    }
    OpChain::new(ops)
}

fn widen(rels: &[Relation]) -> Vec<Relation> {
    let mut out = rels.to_vec();
    if !out.contains(&Relation::Contains) {
        out.push(Relation::Contains);
    }
    out
}

pub const MAX_RELAX_LEVEL: usize = 3;

/// Relaxation ladder.
///
/// 1. every relation constraint also accepts `contains`;
/// 2. relation ops are dropped and the anchor becomes a neighborhood scan
///    wide enough to hold everything the hops could reach;
/// 3. the anchor is dropped, class and attribute filters run graph-wide.
///
/// Each level's candidates are a superset of the previous level's.
pub fn relax_chain(c: &OpChain, level: usize) -> Result<OpChain, QueryError> {
    match level {
        1 => {
            let ops = c
                .ops
                .iter()
                .zip(&c.typed)
                .map(|(op, t)| match t {
                    Op::Children(Some(rels)) | Op::RelationTo(rels, _) => {
                        op.with_relations(&widen(rels))
                    }
                    _ => op.clone(),
                })
                .collect();
            OpChain::new(ops)
        }
        2 => {
            let Op::ByName(anchor) = &c.typed[0] else {
                // anchorless chains keep only their filters
                return OpChain::new(filters_only(c));
            };
            // upper bound on how far from the anchor the hops can travel
            let mut reach = 0.0;
            let mut unbounded = false;
            let mut hops = 0;
            let mut after_scan = false;
            let mut filters = Vec::new();
            for (op, t) in c.ops.iter().zip(&c.typed).skip(1) {
                match t {
                    Op::Children(_) => {
                        // block children and children of scanned landmarks can lie anywhere
                        if after_scan
                            || (hops == 0 && anchor.eq_ignore_ascii_case(crate::hsg::BLOCK_NAME))
                        {
                            unbounded = true;
                        }
                        reach += if hops == 0 {
                            LANDMARK_EDGE_RADIUS
                        } else {
                            OBJECT_DIRECTIONAL_RADIUS
                        };
                        hops += 1;
                    }
                    Op::Nearest { radius, .. } => {
                        reach += radius;
                        after_scan = true;
                        hops += 1;
                    }
                    Op::Class(_) | Op::Attribute(..) => filters.push(op.clone()),
                    Op::RelationTo(..) | Op::ByName(_) => {}
                }
            }
            let radius = if unbounded {
                UNBOUNDED_RADIUS
            } else if reach > 0.0 {
                reach.min(UNBOUNDED_RADIUS)
            } else {
                LANDMARK_EDGE_RADIUS
            };
            let mut ops = vec![c.ops[0].clone(), QueryOp::nearest(radius)];
            ops.extend(filters);
            OpChain::new(ops)
        }
        3 => {
            let ops = filters_only(c);
            if ops.is_empty() {
                relax_chain(c, 2)
            } else {
                OpChain::new(ops)
            }
        }
        other => Err(QueryError::RelaxLevel(other)),
    }
}

fn filters_only(c: &OpChain) -> Vec<QueryOp> {
    c.ops
        .iter()
        .zip(&c.typed)
        .filter(|(_, t)| matches!(t, Op::Class(_) | Op::Attribute(..)))
        .map(|(op, _)| op.clone())
        .collect()
}
