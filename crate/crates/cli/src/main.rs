use std::path::PathBuf;
use std::process::ExitCode;

use aerialnav_cli::commands;
use aerialnav_cli::config::{env_layer, file_layer, Layer, RunConfig};
use aerialnav_cli::CliError;
use clap::{Parser, Subcommand};

/// Aerial language-goal navigation simulator.
///
/// Settings come from defaults, then the JSON file given by --config, then
/// AERIALNAV_<KEY> environment variables, then flags (--set key=value or
/// the dedicated flags below). Later sources win.
#[derive(Debug, Parser)]
#[command(name = "aerialnav", version)]
struct Cli {
    /// Flat JSON config file.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Any config key, repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// First scenario seed (generate) or first run seed (run).
    #[arg(long, global = true)]
    seed: Option<String>,
    /// Worker threads; 1 runs sequentially, 0 uses every core.
    #[arg(long, global = true)]
    jobs: Option<String>,
    /// Output directory (generate, run, eval) or SVG path (plot).
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Write scenario files and a manifest.
    Generate {
        /// easy, medium or hard.
        #[arg(long)]
        difficulty: Option<String>,
        /// Number of scenarios.
        #[arg(long)]
        count: Option<String>,
    },
    /// Run episodes over a scenario directory and write one trace per episode.
    Run {
        /// Directory of scenario files.
        #[arg(long, value_name = "DIR")]
        scenarios: Option<PathBuf>,
        /// scripted or external.
        #[arg(long)]
        reasoner: Option<String>,
        /// URL of the external reasoner.
        #[arg(long, value_name = "URL")]
        endpoint: Option<String>,
        /// Components to switch off: scm, hsg, stages (comma separated).
        #[arg(long)]
        ablate: Option<String>,
        /// none, default or a multiple of the default such as 2x.
        #[arg(long)]
        noise: Option<String>,
        /// Run seeds per scenario.
        #[arg(long)]
        runs: Option<String>,
    },
    /// Score a run directory into report.csv and report.json.
    Eval {
        /// Run directory (or a directory of trace files).
        traces: PathBuf,
    },
    /// Render a trace as SVG.
    Plot {
        trace: PathBuf,
        /// Scenario file, for landmark outlines.
        #[arg(long, value_name = "FILE")]
        scenario: Option<PathBuf>,
    },
}

fn flag_layer(cli: &Cli) -> Result<Layer, CliError> {
    let mut l = Layer::new();
    for kv in &cli.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--set expects KEY=VALUE, got `{kv}`")))?;
        l.insert(k.trim().to_string(), v.to_string());
    }
    let mut put = |k: &str, v: &Option<String>| {
        if let Some(v) = v {
            l.insert(k.to_string(), v.clone());
        }
    };
    put("seed", &cli.seed);
    put("jobs", &cli.jobs);
    match &cli.cmd {
        Cmd::Generate { difficulty, count } => {
            put("difficulty", difficulty);
            put("count", count);
        }
        Cmd::Run {
            scenarios,
            reasoner,
            endpoint,
            ablate,
            noise,
            runs,
        } => {
            put(
                "scenarios",
                &scenarios.as_ref().map(|p| p.display().to_string()),
            );
            put("reasoner", reasoner);
            put("endpoint_url", endpoint);
            put("ablate", ablate);
            put("noise", noise);
            put("runs", runs);
        }
        Cmd::Eval { .. } | Cmd::Plot { .. } => {}
    }
    if matches!(cli.cmd, Cmd::Generate { .. } | Cmd::Run { .. }) {
        put("output", &cli.out.as_ref().map(|p| p.display().to_string()));
    }
    Ok(l)
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(p) => file_layer(p)?,
        None => Layer::new(),
    };
    let cfg = RunConfig::resolve(&file, &env_layer(std::env::vars()), &flag_layer(cli)?)?;
    match &cli.cmd {
        Cmd::Generate { .. } => {
            let m = commands::generate(&cfg)?;
            println!(
                "wrote {} scenarios to {}",
                m.files.len(),
                cfg.output.display()
            );
        }
        Cmd::Run { .. } => {
            let (m, a) = commands::run(&cfg)?;
            println!(
                "{} episodes ({} scenarios x {} seeds): SR {:.1}% OSR {:.1}% NE {:.2} m SPL {:.1}%",
                a.episodes,
                m.scenarios.len(),
                m.seeds.len(),
                a.sr,
                a.osr,
                a.mean_ne,
                a.spl
            );
            println!(
                "traces in {}",
                cfg.output.join(commands::TRACE_DIR).display()
            );
        }
        Cmd::Eval { traces } => {
            let r = commands::eval(traces, cli.out.as_deref())?;
            let a = &r.aggregate;
            println!(
                "{} episodes: SR {:.1}% (±{:.1}) OSR {:.1}% NE {:.2} m SPL {:.1}% self-check {}",
                a.episodes,
                a.sr,
                a.sr_std,
                a.osr,
                a.mean_ne,
                a.spl,
                if r.self_check { "ok" } else { "FAILED" }
            );
        }
        Cmd::Plot { trace, scenario } => {
            let p = commands::plot(trace, scenario.as_deref(), cli.out.as_deref())?;
            println!("wrote {}", p.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
