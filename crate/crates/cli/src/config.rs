//! Run configuration.
//!
//! Every setting has one flat key. The same keys appear in the JSON config
//! file, as `AERIALNAV_<KEY>` environment variables and as `--set key=value`
//! (plus dedicated flags for the common ones). Layers are applied in the
//! order defaults, file, environment, flags; later layers win.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use aerialnav::agent::{AgentConfig, EndpointConfig};
use aerialnav::perception::NoiseModel;
use aerialnav::world::{Difficulty, GeneratorConfig};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::CliError;

pub const ENV_PREFIX: &str = "AERIALNAV_";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReasonerKind {
    #[default]
    Scripted,
    External,
}

impl FromStr for ReasonerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "scripted" => Ok(ReasonerKind::Scripted),
            "external" => Ok(ReasonerKind::External),
            _ => Err(format!(
                "unknown reasoner `{s}` (expected scripted or external)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub generator: GeneratorConfig,
    /// Scenarios written by `generate`.
    pub count: usize,
    /// First scenario seed for `generate`, first run seed for `run`.
    pub seed: u64,
    /// Run seeds per scenario.
    pub runs: usize,
    pub scenarios: Option<PathBuf>,
    pub output: PathBuf,
    /// Worker threads, 0 = one per core, 1 = sequential.
    pub jobs: usize,
    pub reasoner: ReasonerKind,
    pub endpoint_url: Option<String>,
    pub endpoint_timeout_ms: u64,
    pub endpoint_retries: u32,
    pub agent: AgentConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        let ep = EndpointConfig::new("");
        RunConfig {
            generator: GeneratorConfig::default(),
            count: 10,
            seed: 0,
            runs: 1,
            scenarios: None,
            output: PathBuf::from("out"),
            jobs: 0,
            reasoner: ReasonerKind::Scripted,
            endpoint_url: None,
            endpoint_timeout_ms: ep.timeout_ms,
            endpoint_retries: ep.retries,
            agent: AgentConfig::default(),
        }
    }
}

/// Recognised keys, in the order they are applied within one layer.
/// `noise` comes before the individual noise knobs so those can refine it.
pub const KEYS: &[&str] = &[
    "difficulty",
    "map_size",
    "landmarks",
    "objects_per_landmark",
    "scattered_objects",
    "near_duplicates",
    "count",
    "seed",
    "runs",
    "scenarios",
    "output",
    "jobs",
    "reasoner",
    "endpoint_url",
    "endpoint_timeout_ms",
    "endpoint_retries",
    "noise",
    "p_detect",
    "sigma_pos",
    "fp_rate",
    "attr_confusion",
    "confidence_floor",
    "gamma",
    "sigma",
    "rho",
    "altitude",
    "nav_threshold",
    "coverage_threshold",
    "search_invocations",
    "action_budget",
    "max_trial",
    "ablate",
];

/// One layer of `key -> raw value` settings.
pub type Layer = BTreeMap<String, String>;

fn parse<T: FromStr>(key: &str, v: &str) -> Result<T, CliError> {
    v.trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("bad value `{v}` for `{key}`")))
}

fn parse_noise(v: &str) -> Result<NoiseModel, CliError> {
    match v.trim().to_ascii_lowercase().as_str() {
        "none" | "noiseless" => Ok(NoiseModel::noiseless()),
        "default" => Ok(NoiseModel::default()),
        other => {
            let k: f64 = other
                .strip_suffix('x')
                .unwrap_or(other)
                .parse()
                .map_err(|_| {
                    CliError::Usage(format!(
                        "bad noise level `{v}` (none, default or a factor like 2x)"
                    ))
                })?;
            if !(k >= 0.0 && k.is_finite()) {
                return Err(CliError::Usage(format!(
                    "noise factor must be >= 0, got {v}"
                )));
            }
            Ok(if k == 0.0 {
                NoiseModel::noiseless()
            } else {
                NoiseModel::scaled(k)
            })
        }
    }
}

fn parse_ablate(v: &str) -> Result<aerialnav::agent::Ablation, CliError> {
    let mut a = aerialnav::agent::Ablation::default();
    for part in v.split([',', '+']).map(str::trim).filter(|p| !p.is_empty()) {
        match part.to_ascii_lowercase().as_str() {
            "none" => {}
            "scm" => a.no_scm = true,
            "hsg" => a.no_hsg = true,
            "stages" => a.no_stages = true,
            other => {
                return Err(CliError::Usage(format!(
                    "unknown ablation `{other}` (expected scm, hsg, stages or none)"
                )))
            }
        }
    }
    Ok(a)
}

impl RunConfig {
    pub fn set(&mut self, key: &str, v: &str) -> Result<(), CliError> {
        let a = &mut self.agent;
        let g = &mut self.generator;
        match key {
            "difficulty" => g.difficulty = Difficulty::from_str(v).map_err(CliError::Usage)?,
            "map_size" => g.map_size = parse(key, v)?,
            "landmarks" => g.landmarks = parse(key, v)?,
            "objects_per_landmark" => g.objects_per_landmark = parse(key, v)?,
            "scattered_objects" => g.scattered_objects = parse(key, v)?,
            "near_duplicates" => g.near_duplicates = parse(key, v)?,
            "count" => self.count = parse(key, v)?,
            "seed" => self.seed = parse(key, v)?,
            "runs" => self.runs = parse(key, v)?,
            "scenarios" => self.scenarios = Some(PathBuf::from(v)),
            "output" => self.output = PathBuf::from(v),
            "jobs" => self.jobs = parse(key, v)?,
            "reasoner" => self.reasoner = v.parse().map_err(CliError::Usage)?,
            "endpoint_url" => self.endpoint_url = Some(v.to_string()).filter(|s| !s.is_empty()),
            "endpoint_timeout_ms" => self.endpoint_timeout_ms = parse(key, v)?,
            "endpoint_retries" => self.endpoint_retries = parse(key, v)?,
            "noise" => a.noise = parse_noise(v)?,
            "p_detect" => a.noise.p_detect = parse(key, v)?,
            "sigma_pos" => a.noise.sigma_pos = parse(key, v)?,
            "fp_rate" => a.noise.fp_rate = parse(key, v)?,
            "attr_confusion" => a.noise.attr_confusion = parse(key, v)?,
            "confidence_floor" => a.noise.confidence_floor = parse(key, v)?,
            "gamma" => a.hsg.gamma = parse(key, v)?,
            "sigma" => a.hsg.sigma = parse(key, v)?,
            "rho" => a.hsg.rho = parse(key, v)?,
            "altitude" => a.altitude = parse(key, v)?,
            "nav_threshold" => a.nav_threshold = parse(key, v)?,
            "coverage_threshold" => a.coverage_threshold = parse(key, v)?,
            "search_invocations" => a.search_invocations = parse(key, v)?,
            "action_budget" => a.action_budget = parse(key, v)?,
            "max_trial" => a.max_trial = parse(key, v)?,
            "ablate" => a.ablation = parse_ablate(v)?,
            other => return Err(unknown_key(other)),
        }
        Ok(())
    }

    pub fn apply(&mut self, layer: &Layer) -> Result<(), CliError> {
        if let Some(k) = layer.keys().find(|k| !KEYS.contains(&k.as_str())) {
            return Err(unknown_key(k));
        }
        for key in KEYS {
            if let Some(v) = layer.get(*key) {
                self.set(key, v)?;
            }
        }
        Ok(())
    }

    /// Defaults, then each layer in turn, then validation.
    pub fn resolve(file: &Layer, env: &Layer, flags: &Layer) -> Result<RunConfig, CliError> {
        let mut c = RunConfig::default();
        c.apply(file)?;
        c.apply(env)?;
        c.apply(flags)?;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.agent
            .validate()
            .map_err(|e| CliError::Usage(e.to_string()))?;
        self.generator
            .validate()
            .map_err(|e| CliError::Usage(e.to_string()))?;
        if self.runs == 0 {
            return Err(CliError::Usage("runs must be at least 1".into()));
        }
        if self.reasoner == ReasonerKind::External {
            self.endpoint()?
                .validate()
                .map_err(|e| CliError::Usage(e.to_string()))?;
        }
        Ok(())
    }

    pub fn endpoint(&self) -> Result<EndpointConfig, CliError> {
        let url = self.endpoint_url.clone().ok_or_else(|| {
            CliError::Usage("the external reasoner needs endpoint_url (--endpoint)".into())
        })?;
        Ok(EndpointConfig {
            url,
            timeout_ms: self.endpoint_timeout_ms,
            retries: self.endpoint_retries,
        })
    }

    pub fn run_seeds(&self) -> Vec<u64> {
        (0..self.runs as u64).map(|i| self.seed + i).collect()
    }
}

fn unknown_key(k: &str) -> CliError {
    CliError::Usage(format!(
        "unknown config key `{k}`; known keys: {}",
        KEYS.join(", ")
    ))
}

/// Flat JSON object; numbers, booleans and strings as values, arrays are
/// joined with commas (handy for `ablate`).
pub fn file_layer(path: &Path) -> Result<Layer, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let doc: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("config {} is not JSON: {e}", path.display())))?;
    let Value::Object(map) = doc else {
        return Err(CliError::Usage(format!(
            "config {} must be a JSON object",
            path.display()
        )));
    };
    map.into_iter()
        .map(|(k, v)| Ok((k.clone(), scalar(&k, &v)?)))
        .collect()
}

fn scalar(key: &str, v: &Value) -> Result<String, CliError> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        Value::Bool(b) => Ok(b.to_string()),
        Value::Array(items) => items
            .iter()
            .map(|i| scalar(key, i))
            .collect::<Result<Vec<_>, _>>()
            .map(|parts| parts.join(",")),
        Value::Null | Value::Object(_) => Err(CliError::Usage(format!(
            "config key `{key}` must be a string, number, boolean or list"
        ))),
    }
}

/// `AERIALNAV_<KEY>` variables, key lowercased.
pub fn env_layer<I: IntoIterator<Item = (String, String)>>(vars: I) -> Layer {
    vars.into_iter()
        .filter_map(|(k, v)| {
            k.strip_prefix(ENV_PREFIX)
                .map(|k| (k.to_ascii_lowercase(), v))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layer(pairs: &[(&str, &str)]) -> Layer {
        pairs
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect()
    }

    #[test]
    fn defaults_are_the_published_values() {
        let c = RunConfig::resolve(&Layer::new(), &Layer::new(), &Layer::new()).unwrap();
        assert_eq!(c.agent.hsg.gamma, 0.95);
        assert_eq!(c.agent.hsg.sigma, 10.0);
        assert_eq!(c.agent.hsg.rho, 0.8);
        assert_eq!(c.agent.altitude, 50.0);
        assert_eq!(c.agent.nav_threshold, 50.0);
        assert_eq!(c.agent.coverage_threshold, 0.8);
        assert_eq!(c.agent.max_trial, 3);
        assert_eq!(c.agent.action_budget, 10);
        assert_eq!(c.reasoner, ReasonerKind::Scripted);
    }

    #[test]
    fn noise_then_knobs() {
        let c = RunConfig::resolve(
            &layer(&[("p_detect", "0.5"), ("noise", "2x")]),
            &Layer::new(),
            &Layer::new(),
        )
        .unwrap();
        assert_eq!(c.agent.noise.p_detect, 0.5);
        assert_eq!(c.agent.noise.sigma_pos, NoiseModel::scaled(2.0).sigma_pos);
        let c =
            RunConfig::resolve(&layer(&[("noise", "none")]), &Layer::new(), &Layer::new()).unwrap();
        assert_eq!(c.agent.noise, NoiseModel::noiseless());
    }

    #[test]
    fn bad_values_are_usage_errors() {
        for (k, v) in [
            ("gamma", "abc"),
            ("difficulty", "extreme"),
            ("ablate", "vision"),
            ("rho", "1.5"),
            ("frobnicate", "1"),
        ] {
            let r = RunConfig::resolve(&layer(&[(k, v)]), &Layer::new(), &Layer::new());
            assert!(matches!(r, Err(CliError::Usage(_))), "{k}={v}");
        }
    }

    #[test]
    fn external_needs_endpoint() {
        let r = RunConfig::resolve(
            &Layer::new(),
            &Layer::new(),
            &layer(&[("reasoner", "external")]),
        );
        assert!(matches!(r, Err(CliError::Usage(m)) if m.contains("endpoint_url")));
        let c = RunConfig::resolve(
            &Layer::new(),
            &layer(&[("endpoint_url", "http://127.0.0.1:9/")]),
            &layer(&[("reasoner", "external")]),
        )
        .unwrap();
        assert_eq!(c.endpoint().unwrap().url, "http://127.0.0.1:9/");
    }

    #[test]
    fn env_prefix_filter() {
        let env = env_layer([
            ("AERIALNAV_JOBS".to_string(), "3".to_string()),
            ("PATH".to_string(), "/bin".to_string()),
        ]);
        assert_eq!(env, layer(&[("jobs", "3")]));
    }

    #[test]
    fn ablation_lists() {
        let c = RunConfig::resolve(
            &layer(&[("ablate", "hsg,stages")]),
            &Layer::new(),
            &Layer::new(),
        )
        .unwrap();
        assert!(c.agent.ablation.no_hsg && c.agent.ablation.no_stages && !c.agent.ablation.no_scm);
    }
}
