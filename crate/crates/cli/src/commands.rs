use std::fs;
use std::path::{Path, PathBuf};

use aerialnav::agent::{EpisodeTrace, ExternalReasoner, Reasoner, ScriptedReasoner};
use aerialnav::eval::{
    build_report, emit_report, plot_svg, row_for, run_suite, Aggregate, SuiteReport,
};
use aerialnav::exec::ExecMode;
use aerialnav::world::{generate_batch, load_scenario, save_scenario, Scenario};
use serde::{Deserialize, Serialize};

use crate::config::{ReasonerKind, RunConfig};
use crate::CliError;

pub const MANIFEST: &str = "manifest.json";
pub const RUN_MANIFEST: &str = "run.json";
pub const TRACE_DIR: &str = "traces";
pub const TRACE_SUFFIX: &str = ".trace.json";
pub const REPORT_STEM: &str = "report";

/// What `run` writes per episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceFile {
    pub scenario_id: String,
    pub trace: EpisodeTrace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerateManifest {
    pub generator: aerialnav::world::GeneratorConfig,
    pub seeds: Vec<u64>,
    pub files: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_digest: String,
    pub reasoner: String,
    pub scenarios: Vec<String>,
    pub seeds: Vec<u64>,
    pub agent: aerialnav::agent::AgentConfig,
}

fn runtime(what: impl std::fmt::Display) -> CliError {
    CliError::Runtime(what.to_string())
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| runtime(format!("cannot write {}: {e}", path.display())))
}

fn create_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|e| runtime(format!("cannot create {}: {e}", path.display())))
}

fn mode(jobs: usize) -> ExecMode {
    if jobs == 1 {
        ExecMode::Sequential
    } else {
        ExecMode::Parallel
    }
}

/// Writes `count` scenarios plus a manifest into the output directory.
pub fn generate(cfg: &RunConfig) -> Result<GenerateManifest, CliError> {
    let seeds: Vec<u64> = (0..cfg.count as u64).map(|i| cfg.seed + i).collect();
    create_dir(&cfg.output)?;
    let tier = cfg.generator.difficulty.as_str();
    let mut files = Vec::new();
    for (seed, s) in seeds
        .iter()
        .zip(generate_batch(&cfg.generator, &seeds, mode(cfg.jobs)))
    {
        let s = s.map_err(|e| runtime(format!("seed {seed}: {e}")))?;
        let name = format!("{tier}-{seed:04}.json");
        save_scenario(&s, &cfg.output.join(&name)).map_err(runtime)?;
        files.push(name);
    }
    let manifest = GenerateManifest {
        generator: cfg.generator.clone(),
        seeds,
        files,
    };
    write(
        &cfg.output.join(MANIFEST),
        &serde_json::to_string_pretty(&manifest).expect("manifest serializes"),
    )?;
    Ok(manifest)
}

/// Scenario files of a directory in name order, ids from the file stems.
pub fn load_scenarios(dir: &Path) -> Result<Vec<(String, Scenario)>, CliError> {
    let entries =
        fs::read_dir(dir).map_err(|e| runtime(format!("cannot read {}: {e}", dir.display())))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension().is_some_and(|x| x == "json")
                && p.file_name().is_some_and(|n| n != MANIFEST)
        })
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(runtime(format!("no scenario files in {}", dir.display())));
    }
    paths
        .iter()
        .map(|p| {
            let id = p
                .file_stem()
                .unwrap_or_default()
                .to_string_lossy()
                .into_owned();
            load_scenario(p).map(|s| (id, s)).map_err(runtime)
        })
        .collect()
}

pub fn make_reasoner(cfg: &RunConfig) -> Result<Box<dyn Reasoner>, CliError> {
    Ok(match cfg.reasoner {
        ReasonerKind::Scripted => Box::new(ScriptedReasoner),
        ReasonerKind::External => Box::new(
            ExternalReasoner::new(cfg.endpoint()?).map_err(|e| CliError::Usage(e.to_string()))?,
        ),
    })
}

pub fn trace_name(scenario_id: &str, seed: u64) -> String {
    format!("{scenario_id}.r{seed}{TRACE_SUFFIX}")
}

/// Runs every (scenario, seed) episode and writes one trace file each.
pub fn run(cfg: &RunConfig) -> Result<(RunManifest, Aggregate), CliError> {
    let dir = cfg
        .scenarios
        .as_ref()
        .ok_or_else(|| CliError::Usage("run needs a scenario directory (--scenarios)".into()))?;
    let scenarios = load_scenarios(dir)?;
    let reasoner = make_reasoner(cfg)?;
    let seeds = cfg.run_seeds();
    let suite = run_suite(
        &scenarios,
        reasoner.as_ref(),
        &cfg.agent,
        &seeds,
        mode(cfg.jobs),
        cfg.jobs,
    )
    .map_err(runtime)?;

    let trace_dir = cfg.output.join(TRACE_DIR);
    create_dir(&trace_dir)?;
    for (row, trace) in suite.report.rows.iter().zip(&suite.traces) {
        let file = TraceFile {
            scenario_id: row.scenario_id.clone(),
            trace: trace.clone(),
        };
        write(
            &trace_dir.join(trace_name(&row.scenario_id, row.seed)),
            &serde_json::to_string_pretty(&file).expect("trace serializes"),
        )?;
    }
    let manifest = RunManifest {
        config_digest: suite.report.config_digest.clone(),
        reasoner: reasoner.name().to_string(),
        scenarios: scenarios.iter().map(|(id, _)| id.clone()).collect(),
        seeds,
        agent: cfg.agent.clone(),
    };
    write(
        &cfg.output.join(RUN_MANIFEST),
        &serde_json::to_string_pretty(&manifest).expect("manifest serializes"),
    )?;
    Ok((manifest, suite.report.aggregate))
}

pub fn read_trace(path: &Path) -> Result<TraceFile, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| runtime(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| runtime(format!("{} is not a trace file: {e}", path.display())))
}

/// Trace files under `dir/traces` (or `dir` itself), ordered by scenario then seed.
pub fn load_traces(dir: &Path) -> Result<Vec<TraceFile>, CliError> {
    let sub = dir.join(TRACE_DIR);
    let root = if sub.is_dir() { sub } else { dir.to_path_buf() };
    let entries =
        fs::read_dir(&root).map_err(|e| runtime(format!("cannot read {}: {e}", root.display())))?;
    let mut files: Vec<TraceFile> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.to_string_lossy().ends_with(TRACE_SUFFIX))
        .map(|p| read_trace(&p))
        .collect::<Result<_, _>>()?;
    if files.is_empty() {
        return Err(runtime(format!("no trace files in {}", root.display())));
    }
    files.sort_by(|a, b| {
        a.scenario_id
            .cmp(&b.scenario_id)
            .then(a.trace.run_seed.cmp(&b.trace.run_seed))
    });
    Ok(files)
}

/// Scores the traces of a run directory and writes `report.csv` / `report.json`.
pub fn eval(dir: &Path, out: Option<&Path>) -> Result<SuiteReport, CliError> {
    let files = load_traces(dir)?;
    let digest = fs::read_to_string(dir.join(RUN_MANIFEST))
        .ok()
        .and_then(|t| serde_json::from_str::<RunManifest>(&t).ok())
        .map(|m| m.config_digest)
        .unwrap_or_else(|| "unrecorded".to_string());
    let rows = files
        .iter()
        .map(|f| row_for(&f.scenario_id, &f.trace))
        .collect();
    let traces: Vec<EpisodeTrace> = files.into_iter().map(|f| f.trace).collect();
    let report = build_report(digest, rows, &traces);
    let out = out.unwrap_or(dir);
    create_dir(out)?;
    emit_report(&report, out, REPORT_STEM).map_err(runtime)?;
    Ok(report)
}

/// Renders one trace as SVG; returns the path written.
pub fn plot(
    trace: &Path,
    scenario: Option<&Path>,
    out: Option<&Path>,
) -> Result<PathBuf, CliError> {
    let file = read_trace(trace)?;
    let sc = scenario.map(load_scenario).transpose().map_err(runtime)?;
    let target = match out {
        Some(p) => p.to_path_buf(),
        None => {
            let name = trace.file_name().unwrap_or_default().to_string_lossy();
            let stem = name.strip_suffix(TRACE_SUFFIX).unwrap_or(&name);
            trace.with_file_name(format!("{stem}.svg"))
        }
    };
    write(&target, &plot_svg(&file.trace, sc.as_ref()))?;
    Ok(target)
}
