//! Episode metrics, the suite runner and report/plot output.

mod plot;

use std::fmt::Write as _;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use plot::plot_svg;

use crate::agent::{run_episode, AgentConfig, EpisodeTrace, Reasoner, Strategy};
use crate::exec::{map_ordered, ExecMode};
use crate::geometry::{Pose, WorldPoint};
use crate::world::{EpisodeState, Scenario};

pub const SUCCESS_THRESHOLD: f64 = 20.0;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("no scenarios to run")]
    NoScenarios,
    #[error("no seeds given")]
    NoSeeds,
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("bad report: {0}")]
    Parse(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeScore {
    pub ne: f64,
    pub success: bool,
    pub oracle_success: bool,
    pub spl: f64,
    pub path_length: f64,
    pub shortest_path: f64,
    pub steps: usize,
}

fn pose_distance(a: &Pose, b: &Pose) -> f64 {
    ((a.x - b.x).powi(2) + (a.y - b.y).powi(2) + (a.z - b.z).powi(2)).sqrt()
}

/// Metrics of one trajectory (start pose first) against a target.
pub fn score_path(
    trajectory: &[Pose],
    stop_issued: bool,
    target: &WorldPoint,
    steps: usize,
) -> EpisodeScore {
    let start = trajectory.first().expect("trajectory holds the start pose");
    let last = trajectory.last().expect("trajectory holds the start pose");
    let ne = last.position().distance(target);
    let success = stop_issued && ne <= SUCCESS_THRESHOLD;
    let oracle_success = trajectory
        .iter()
        .any(|p| p.position().distance(target) <= SUCCESS_THRESHOLD);
    let path_length: f64 = trajectory
        .windows(2)
        .map(|w| pose_distance(&w[0], &w[1]))
        .sum();
    let shortest_path = start.position().distance(target);
    let spl = if !success {
        0.0
    } else if path_length.max(shortest_path) == 0.0 {
        1.0
    } else {
        shortest_path / path_length.max(shortest_path)
    };
    EpisodeScore {
        ne,
        success,
        oracle_success,
        spl,
        path_length,
        shortest_path,
        steps,
    }
}

pub fn score_episode(trace: &EpisodeTrace) -> EpisodeScore {
    score_path(
        &trace.trajectory(),
        trace.stop_issued,
        &trace.target_position,
        trace.steps.len(),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRow {
    pub scenario_id: String,
    pub seed: u64,
    #[serde(flatten)]
    pub score: EpisodeScore,
    pub stage_reached: Strategy,
    pub fallback_used: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub episodes: usize,
    pub mean_ne: f64,
    pub sr: f64,
    pub osr: f64,
    pub spl: f64,
    /// Standard deviation of the per-seed means (0 with a single seed).
    pub ne_std: f64,
    pub sr_std: f64,
    pub osr_std: f64,
    pub spl_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub config_digest: String,
    pub rows: Vec<EpisodeRow>,
    pub aggregate: Aggregate,
    pub self_check: bool,
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

fn sample_std(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

/// Means over all rows (SR/OSR/SPL in percent) plus per-seed spread.
pub fn aggregate(rows: &[EpisodeRow]) -> Aggregate {
    let col = |rows: &[&EpisodeRow], f: &dyn Fn(&EpisodeRow) -> f64| -> f64 {
        mean(&rows.iter().map(|r| f(r)).collect::<Vec<_>>())
    };
    let ne = |r: &EpisodeRow| r.score.ne;
    let sr = |r: &EpisodeRow| if r.score.success { 100.0 } else { 0.0 };
    let osr = |r: &EpisodeRow| if r.score.oracle_success { 100.0 } else { 0.0 };
    let spl = |r: &EpisodeRow| r.score.spl * 100.0;
    let all: Vec<&EpisodeRow> = rows.iter().collect();
    let mut seeds: Vec<u64> = rows.iter().map(|r| r.seed).collect();
    seeds.sort_unstable();
    seeds.dedup();
    let per_seed = |f: &dyn Fn(&EpisodeRow) -> f64| -> f64 {
        let means: Vec<f64> = seeds
            .iter()
            .map(|s| {
                let group: Vec<&EpisodeRow> = rows.iter().filter(|r| r.seed == *s).collect();
                col(&group, f)
            })
            .collect();
        sample_std(&means)
    };
    Aggregate {
        episodes: rows.len(),
        mean_ne: col(&all, &ne),
        sr: col(&all, &sr),
        osr: col(&all, &osr),
        spl: col(&all, &spl),
        ne_std: per_seed(&ne),
        sr_std: per_seed(&sr),
        osr_std: per_seed(&osr),
        spl_std: per_seed(&spl),
    }
}

/// Recompute every row from the raw action lists by replaying them, and
/// compare with the stored scores.
pub fn self_check(rows: &[EpisodeRow], traces: &[EpisodeTrace]) -> bool {
    if rows.len() != traces.len() {
        return false;
    }
    rows.iter().zip(traces).all(|(row, t)| {
        if t.error.is_some() {
            return !row.score.success;
        }
        let Ok(replayed) = EpisodeState::replay(t.start, &t.actions()) else {
            return false;
        };
        let target = t.target_position;
        let dist = |p: &Pose| ((p.x - target.x).powi(2) + (p.y - target.y).powi(2)).sqrt();
        let mut path = 0.0;
        for w in replayed.trajectory.windows(2) {
            path +=
                ((w[1].x - w[0].x).powi(2) + (w[1].y - w[0].y).powi(2) + (w[1].z - w[0].z).powi(2))
                    .sqrt();
        }
        let ne = dist(&replayed.pose);
        let success = replayed.stop_issued && ne <= SUCCESS_THRESHOLD;
        let oracle = replayed
            .trajectory
            .iter()
            .any(|p| dist(p) <= SUCCESS_THRESHOLD);
        let shortest = dist(&t.start);
        let spl = if success {
            shortest / path.max(shortest).max(f64::MIN_POSITIVE)
        } else {
            0.0
        };
        let spl = if success && path.max(shortest) == 0.0 {
            1.0
        } else {
            spl
        };
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()));
        close(row.score.ne, ne)
            && row.score.success == success
            && row.score.oracle_success == oracle
            && close(row.score.path_length, path)
            && close(row.score.spl, spl)
            && row.score.spl <= if row.score.success { 1.0 } else { 0.0 }
    })
}

/// Digest of everything that determines a suite's output.
pub fn config_digest(
    scenario_ids: &[String],
    reasoner: &str,
    config: &AgentConfig,
    seeds: &[u64],
) -> String {
    let doc = serde_json::json!({
        "scenarios": scenario_ids,
        "reasoner": reasoner,
        "config": config,
        "seeds": seeds,
    });
    let d = Sha256::digest(doc.to_string().as_bytes());
    d.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn row_for(scenario_id: &str, trace: &EpisodeTrace) -> EpisodeRow {
    EpisodeRow {
        scenario_id: scenario_id.to_string(),
        seed: trace.run_seed,
        score: score_episode(trace),
        stage_reached: trace.stage_reached,
        fallback_used: trace.fallback_used,
        error: trace.error.clone(),
    }
}

pub fn build_report(digest: String, rows: Vec<EpisodeRow>, traces: &[EpisodeTrace]) -> SuiteReport {
    let aggregate = aggregate(&rows);
    let self_check = self_check(&rows, traces);
    SuiteReport {
        config_digest: digest,
        rows,
        aggregate,
        self_check,
    }
}

#[derive(Debug, Clone)]
pub struct SuiteRun {
    pub report: SuiteReport,
    pub traces: Vec<EpisodeTrace>,
}

/// Every (scenario, seed) pair, scenario-major. Episodes run in parallel
/// under `ExecMode::Parallel`; results are reduced in input order.
pub fn run_suite(
    scenarios: &[(String, Scenario)],
    reasoner: &dyn Reasoner,
    config: &AgentConfig,
    seeds: &[u64],
    mode: ExecMode,
    jobs: usize,
) -> Result<SuiteRun, EvalError> {
    if scenarios.is_empty() {
        return Err(EvalError::NoScenarios);
    }
    if seeds.is_empty() {
        return Err(EvalError::NoSeeds);
    }
    let pairs: Vec<(usize, u64)> = (0..scenarios.len())
        .flat_map(|i| seeds.iter().map(move |s| (i, *s)))
        .collect();
    let traces: Vec<EpisodeTrace> = map_ordered(&pairs, mode, jobs, |(i, seed)| {
        let s = &scenarios[*i].1;
        catch_unwind(AssertUnwindSafe(|| run_episode(s, reasoner, config, *seed))).unwrap_or_else(
            |p| {
                let msg = p
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_else(|| "episode panicked".into());
                crashed_trace(s, reasoner.name(), config, *seed, msg)
            },
        )
    });
    let rows: Vec<EpisodeRow> = pairs
        .iter()
        .zip(&traces)
        .map(|((i, _), t)| row_for(&scenarios[*i].0, t))
        .collect();
    let ids: Vec<String> = scenarios.iter().map(|(id, _)| id.clone()).collect();
    let digest = config_digest(&ids, reasoner.name(), config, seeds);
    let report = build_report(digest, rows, &traces);
    Ok(SuiteRun { report, traces })
}

fn crashed_trace(
    s: &Scenario,
    reasoner: &str,
    config: &AgentConfig,
    seed: u64,
    msg: String,
) -> EpisodeTrace {
    EpisodeTrace {
        episode_id: format!("s{}-r{}", s.seed, seed),
        scenario_seed: s.seed,
        run_seed: seed,
        reasoner: reasoner.to_string(),
        ablation: config.ablation,
        instruction: String::new(),
        goal: s.goal.agent_view(),
        target_position: s.target_position().unwrap_or(s.start.position()),
        start: s.start,
        subgoals: Vec::new(),
        steps: Vec::new(),
        invocations: Vec::new(),
        final_pose: s.start,
        stop_issued: false,
        stage_reached: Strategy::Navigate,
        coverage: 0.0,
        retrieval: None,
        fallback_used: false,
        reasoner_fallback: false,
        error: Some(msg),
    }
}

pub const CSV_HEADER: &str =
    "scenario_id,seed,ne_m,success,oracle_success,spl,path_m,steps,stage_reached,fallback_used";

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn report_csv(report: &SuiteReport) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in &report.rows {
        let _ = writeln!(
            out,
            "{},{},{:.6},{},{},{:.6},{:.6},{},{},{}",
            csv_field(&r.scenario_id),
            r.seed,
            r.score.ne,
            r.score.success,
            r.score.oracle_success,
            r.score.spl,
            r.score.path_length,
            r.score.steps,
            r.stage_reached.as_str(),
            r.fallback_used
        );
    }
    out
}

pub fn report_json(report: &SuiteReport) -> String {
    serde_json::to_string_pretty(report).expect("report serializes")
}

pub fn parse_report(text: &str) -> Result<SuiteReport, EvalError> {
    Ok(serde_json::from_str(text)?)
}

fn write(path: &Path, text: &str) -> Result<(), EvalError> {
    fs::write(path, text).map_err(|source| EvalError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Writes `<stem>.csv` and `<stem>.json` next to each other.
pub fn emit_report(report: &SuiteReport, dir: &Path, stem: &str) -> Result<(), EvalError> {
    write(&dir.join(format!("{stem}.csv")), &report_csv(report))?;
    write(&dir.join(format!("{stem}.json")), &report_json(report))
}

pub fn emit_plot(
    trace: &EpisodeTrace,
    scenario: Option<&Scenario>,
    path: &Path,
) -> Result<(), EvalError> {
    write(path, &plot_svg(trace, scenario))
}
