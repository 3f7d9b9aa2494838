use std::time::Duration;

use base64::Engine as _;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use super::{AgentError, Strategy, SubGoal};
use crate::geometry::{bearing_and_distance, Compass, Pose, WorldPoint};
use crate::scm::{CognitiveMap, CoverageGrid};

/// What the reasoner tells the low-level controller to do next.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "value", rename_all = "snake_case")]
pub enum Advice {
    Direction(Compass),
    Waypoint(WorldPoint),
    StopSearch,
}

impl Advice {
    pub fn to_wire(&self) -> Value {
        match self {
            Advice::Direction(c) => json!({"type": "direction", "value": c.name()}),
            Advice::Waypoint(p) => json!({"type": "waypoint", "value": {"x": p.x, "y": p.y}}),
            Advice::StopSearch => json!({"type": "stop_search", "value": null}),
        }
    }

    /// Lenient reader: compass names in any case, waypoints as `{x, y}` or `[x, y]`.
    pub fn from_wire(v: &Value) -> Result<Advice, String> {
        let kind = v
            .get("type")
            .and_then(Value::as_str)
            .ok_or("advice.type missing")?;
        let value = v.get("value").unwrap_or(&Value::Null);
        match kind {
            "direction" => value
                .as_str()
                .and_then(Compass::parse)
                .map(Advice::Direction)
                .ok_or_else(|| format!("bad direction {value}")),
            "waypoint" => {
                let xy = match value {
                    Value::Array(a) if a.len() == 2 => (a[0].as_f64(), a[1].as_f64()),
                    Value::Object(o) => (
                        o.get("x").and_then(Value::as_f64),
                        o.get("y").and_then(Value::as_f64),
                    ),
                    _ => (None, None),
                };
                match xy {
                    (Some(x), Some(y)) if x.is_finite() && y.is_finite() => {
                        Ok(Advice::Waypoint(WorldPoint::new(x, y)))
                    }
                    _ => Err(format!("bad waypoint {value}")),
                }
            }
            "stop_search" => Ok(Advice::StopSearch),
            other => Err(format!("unknown advice type `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReasonerResponse {
    pub reasoning: String,
    pub advice: Advice,
}

/// Everything a reasoner may look at. The map is rendered only on demand.
#[derive(Debug, Clone)]
pub struct ReasonerRequest<'a> {
    pub episode_id: &'a str,
    pub subgoal: &'a SubGoal,
    pub rationale: String,
    pub pose: Pose,
    pub action_budget: usize,
    pub anchor: WorldPoint,
    pub coverage: &'a CoverageGrid,
    pub map: Option<&'a CognitiveMap>,
}

impl ReasonerRequest<'_> {
    pub fn stage(&self) -> Strategy {
        self.subgoal.strategy
    }

    fn wire_fields(&self) -> serde_json::Map<String, Value> {
        let mut m = serde_json::Map::new();
        m.insert("episode_id".into(), json!(self.episode_id));
        m.insert("stage".into(), json!(self.stage()));
        m.insert("subgoal_text".into(), json!(self.subgoal.goal_text));
        m.insert("rationale_text".into(), json!(self.rationale));
        m.insert(
            "pose".into(),
            json!({"x": self.pose.x, "y": self.pose.y, "z": self.pose.z, "theta": self.pose.theta}),
        );
        m.insert("action_budget".into(), json!(self.action_budget));
        m
    }

    /// Full request body including the base64 PNG render of the map.
    pub fn to_wire(&self) -> Result<Value, AgentError> {
        let mut m = self.wire_fields();
        let png = match self.map {
            Some(map) => {
                let bytes = map
                    .render(&self.pose)
                    .raster
                    .to_png()
                    .map_err(|e| AgentError::Render(e.to_string()))?;
                base64::engine::general_purpose::STANDARD.encode(bytes)
            }
            None => String::new(),
        };
        m.insert("map_png_base64".into(), json!(png));
        Ok(Value::Object(m))
    }

    /// sha256 over the text fields (the render is derived from them and the map).
    pub fn digest(&self) -> String {
        let text = Value::Object(self.wire_fields()).to_string();
        let d = Sha256::digest(text.as_bytes());
        d.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Consultation {
    pub response: ReasonerResponse,
    pub fallback_used: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

pub trait Reasoner: Send + Sync {
    fn name(&self) -> &str;
    fn consult(&self, req: &ReasonerRequest<'_>) -> Consultation;
}

/// Deterministic stand-in: compass toward the anchor while navigating,
/// nearest unexplored cell while searching.
#[derive(Debug, Clone, Copy, Default)]
pub struct ScriptedReasoner;

impl ScriptedReasoner {
    pub fn respond(req: &ReasonerRequest<'_>) -> ReasonerResponse {
        let here = req.pose.position();
        match req.stage() {
            Strategy::Navigate => {
                let (d, bearing) = bearing_and_distance(&here, &req.anchor);
                let c = Compass::from_bearing(bearing);
                ReasonerResponse {
                    reasoning: format!(
                        "Anchor is {d:.1} m away, bearing {bearing:.0}°; fly {}.",
                        c.name()
                    ),
                    advice: Advice::Direction(c),
                }
            }
            Strategy::Search => match req.coverage.nearest_uncovered(&here) {
                Some(i) => {
                    let w = req.coverage.cell_center(i);
                    ReasonerResponse {
                        reasoning: format!(
                            "{:.0}% explored; nearest unexplored cell at ({:.1}, {:.1}).",
                            req.coverage.coverage() * 100.0,
                            w.x,
                            w.y
                        ),
                        advice: Advice::Waypoint(w),
                    }
                }
                None => ReasonerResponse {
                    reasoning: "Search region fully explored.".into(),
                    advice: Advice::StopSearch,
                },
            },
            Strategy::Localize => ReasonerResponse {
                reasoning: "Target retrieval takes over.".into(),
                advice: Advice::StopSearch,
            },
        }
    }
}

impl Reasoner for ScriptedReasoner {
    fn name(&self) -> &str {
        "scripted"
    }

    fn consult(&self, req: &ReasonerRequest<'_>) -> Consultation {
        Consultation {
            response: ScriptedReasoner::respond(req),
            fallback_used: false,
            error: None,
        }
    }
}

/// Always gives the same advice. Useful as an adversarial baseline.
#[derive(Debug, Clone)]
pub struct ConstantReasoner(pub Advice);

impl Reasoner for ConstantReasoner {
    fn name(&self) -> &str {
        "constant"
    }

    fn consult(&self, _req: &ReasonerRequest<'_>) -> Consultation {
        Consultation {
            response: ReasonerResponse {
                reasoning: String::new(),
                advice: self.0.clone(),
            },
            fallback_used: false,
            error: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndpointConfig {
    pub url: String,
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
    #[serde(default = "default_retries")]
    pub retries: u32,
}

fn default_timeout_ms() -> u64 {
    30_000
}

fn default_retries() -> u32 {
    2
}

impl EndpointConfig {
    pub fn new(url: impl Into<String>) -> Self {
        EndpointConfig {
            url: url.into(),
            timeout_ms: default_timeout_ms(),
            retries: default_retries(),
        }
    }

    pub fn validate(&self) -> Result<(), AgentError> {
        if !self.url.starts_with("http://") {
            return Err(AgentError::Config(format!(
                "endpoint url must be plain http://, got `{}`",
                self.url
            )));
        }
        if self.timeout_ms == 0 {
            return Err(AgentError::Config(
                "endpoint timeout_ms must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// HTTP client for a model endpoint. Falls back to the scripted policy on
/// transport errors, timeouts or malformed replies.
pub struct ExternalReasoner {
    config: EndpointConfig,
    agent: ureq::Agent,
}

impl ExternalReasoner {
    pub fn new(config: EndpointConfig) -> Result<Self, AgentError> {
        config.validate()?;
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_millis(config.timeout_ms)))
            .http_status_as_error(true)
            .build()
            .into();
        Ok(ExternalReasoner { config, agent })
    }

    pub fn config(&self) -> &EndpointConfig {
        &self.config
    }

    fn request(&self, body: &Value) -> Result<ReasonerResponse, (String, bool)> {
        let reply: Value = self
            .agent
            .post(&self.config.url)
            .send_json(body)
            .map_err(|e| (e.to_string(), true))?
            .into_body()
            .read_json()
            .map_err(|e| (format!("malformed reply: {e}"), false))?;
        let reasoning = reply
            .get("reasoning")
            .and_then(Value::as_str)
            .unwrap_or_default()
            .to_string();
        let advice = reply
            .get("advice")
            .ok_or_else(|| ("malformed reply: advice missing".to_string(), false))
            .and_then(|a| {
                Advice::from_wire(a).map_err(|e| (format!("malformed reply: {e}"), false))
            })?;
        Ok(ReasonerResponse { reasoning, advice })
    }
}

impl Reasoner for ExternalReasoner {
    fn name(&self) -> &str {
        "external"
    }

    fn consult(&self, req: &ReasonerRequest<'_>) -> Consultation {
        let fallback = |error: String| Consultation {
            response: ScriptedReasoner::respond(req),
            fallback_used: true,
            error: Some(error),
        };
        let body = match req.to_wire() {
            Ok(b) => b,
            Err(e) => return fallback(e.to_string()),
        };
        let mut last = String::new();
        for _ in 0..=self.config.retries {
            match self.request(&body) {
                Ok(response) => {
                    return Consultation {
                        response,
                        fallback_used: false,
                        error: None,
                    }
                }
                Err((e, retry)) => {
                    last = e;
                    if !retry {
                        break;
                    }
                }
            }
        }
        fallback(last)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::DesiredState;
    use crate::geometry::Rect;
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;
    use std::time::Instant;

    fn subgoal(strategy: Strategy) -> SubGoal {
        SubGoal {
            goal_text: "test".into(),
            desired_state: DesiredState::Stopped {
                success_radius: 20.0,
            },
            strategy,
            anchor_landmark: "A".into(),
        }
    }

    fn request<'a>(sg: &'a SubGoal, grid: &'a CoverageGrid) -> ReasonerRequest<'a> {
        ReasonerRequest {
            episode_id: "e",
            subgoal: sg,
            rationale: String::new(),
            pose: Pose::new(0.0, 0.0, 50.0, 0.0),
            action_budget: 10,
            anchor: WorldPoint::new(100.0, 0.0),
            coverage: grid,
            map: None,
        }
    }

    /// One-shot HTTP server answering every request with `body` after `delay`.
    fn serve(body: &'static str, delay: Duration, hits: usize) -> String {
        let l = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/advise", l.local_addr().unwrap());
        std::thread::spawn(move || {
            for _ in 0..hits {
                let Ok((mut s, _)) = l.accept() else { return };
                let mut r = BufReader::new(s.try_clone().unwrap());
                let mut len = 0;
                loop {
                    let mut line = String::new();
                    if r.read_line(&mut line).unwrap_or(0) == 0 || line == "\r\n" {
                        break;
                    }
                    if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                        len = v.trim().parse().unwrap_or(0);
                    }
                }
                let mut buf = vec![0; len];
                let _ = r.read_exact(&mut buf);
                std::thread::sleep(delay);
                let _ = write!(
                    s,
                    "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{}",
                    body.len(),
                    body
                );
            }
        });
        url
    }

    #[test]
    fn scripted_navigate_and_search() {
        let grid = CoverageGrid::new(Rect::new(0.0, 0.0, 20.0, 10.0), 10.0);
        let sg = subgoal(Strategy::Navigate);
        assert_eq!(
            ScriptedReasoner::respond(&request(&sg, &grid)).advice,
            Advice::Direction(Compass::East)
        );
        let sg = subgoal(Strategy::Search);
        let mut req = request(&sg, &grid);
        req.pose = Pose::new(10.0, 5.0, 50.0, 0.0);
        // both cells are 5 m away; row-major order picks the western one
        assert_eq!(
            ScriptedReasoner::respond(&req).advice,
            Advice::Waypoint(WorldPoint::new(5.0, 5.0))
        );
        let mut full = grid.clone();
        full.mark(&Rect::new(-1.0, -1.0, 30.0, 30.0));
        assert_eq!(
            ScriptedReasoner::respond(&request(&sg, &full)).advice,
            Advice::StopSearch
        );
    }

    #[test]
    fn advice_wire_forms() {
        for a in [
            Advice::Direction(Compass::Southwest),
            Advice::Waypoint(WorldPoint::new(1.5, -2.0)),
            Advice::StopSearch,
        ] {
            assert_eq!(Advice::from_wire(&a.to_wire()).unwrap(), a);
        }
        let v: Value = serde_json::from_str(r#"{"type":"waypoint","value":[3,4]}"#).unwrap();
        assert_eq!(
            Advice::from_wire(&v).unwrap(),
            Advice::Waypoint(WorldPoint::new(3.0, 4.0))
        );
        let v: Value = serde_json::from_str(r#"{"type":"direction","value":"up"}"#).unwrap();
        assert!(Advice::from_wire(&v).is_err());
    }

    #[test]
    fn endpoint_config_validation() {
        assert!(ExternalReasoner::new(EndpointConfig::new("https://x")).is_err());
        let mut c = EndpointConfig::new("http://127.0.0.1:1/");
        c.timeout_ms = 0;
        assert!(matches!(
            ExternalReasoner::new(c),
            Err(AgentError::Config(_))
        ));
    }

    #[test]
    fn loopback_echo_east() {
        let url = serve(
            r#"{"reasoning":"go","advice":{"type":"direction","value":"East"}}"#,
            Duration::ZERO,
            1,
        );
        let ext = ExternalReasoner::new(EndpointConfig::new(url)).unwrap();
        let grid = CoverageGrid::new(Rect::new(0.0, 0.0, 10.0, 10.0), 10.0);
        let sg = subgoal(Strategy::Search);
        let c = ext.consult(&request(&sg, &grid));
        assert!(!c.fallback_used);
        assert_eq!(c.response.advice, Advice::Direction(Compass::East));
        assert_eq!(c.response.reasoning, "go");
    }

    #[test]
    fn malformed_reply_falls_back() {
        let url = serve(
            r#"{"reasoning":"?","advice":{"type":"teleport"}}"#,
            Duration::ZERO,
            1,
        );
        let ext = ExternalReasoner::new(EndpointConfig::new(url)).unwrap();
        let grid = CoverageGrid::new(Rect::new(0.0, 0.0, 10.0, 10.0), 10.0);
        let sg = subgoal(Strategy::Navigate);
        let c = ext.consult(&request(&sg, &grid));
        assert!(c.fallback_used);
        assert_eq!(c.response.advice, Advice::Direction(Compass::East));
    }

    #[test]
    fn slow_endpoint_times_out() {
        let url = serve(
            r#"{"reasoning":"","advice":{"type":"stop_search"}}"#,
            Duration::from_millis(1500),
            1,
        );
        let mut cfg = EndpointConfig::new(url);
        cfg.timeout_ms = 200;
        cfg.retries = 0;
        let ext = ExternalReasoner::new(cfg).unwrap();
        let grid = CoverageGrid::new(Rect::new(0.0, 0.0, 10.0, 10.0), 10.0);
        let sg = subgoal(Strategy::Navigate);
        let t = Instant::now();
        let c = ext.consult(&request(&sg, &grid));
        assert!(c.fallback_used);
        assert!(
            t.elapsed() < Duration::from_millis(1000),
            "{:?}",
            t.elapsed()
        );
    }

    #[test]
    fn unreachable_endpoint_falls_back() {
        let l = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/", l.local_addr().unwrap());
        drop(l);
        let mut cfg = EndpointConfig::new(url);
        cfg.retries = 1;
        let ext = ExternalReasoner::new(cfg).unwrap();
        let grid = CoverageGrid::new(Rect::new(0.0, 0.0, 10.0, 10.0), 10.0);
        let sg = subgoal(Strategy::Navigate);
        let c = ext.consult(&request(&sg, &grid));
        assert!(c.fallback_used && c.error.is_some());
    }
}
