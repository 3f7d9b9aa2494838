//! Acceptance suite. One line per criterion, non-zero exit if any fails.
//!
//! Run with `cargo test --test acceptance`; add `--release` for realistic timings.

#![allow(clippy::type_complexity)]

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use aerialnav::agent::{
    Advice, AgentConfig, ConstantReasoner, EpisodeTrace, ScriptedReasoner, StepRecord,
    Strategy as Stage,
};
use aerialnav::eval::{
    aggregate, report_csv, report_json, row_for, run_suite, score_episode, Aggregate, SuiteRun,
    SUCCESS_THRESHOLD,
};
use aerialnav::exec::ExecMode;
use aerialnav::geometry::{
    camera_to_world, gsd, pixel_to_world, world_to_pixel, CameraPoint, Compass, MapBounds, Polygon,
    Pose, Rect, SignConvention, WorldPoint,
};
use aerialnav::hsg::{similarity, HsgParams, NodeId, NodeLevel, SceneGraph, SceneNode};
use aerialnav::perception::{observe, project_detections, NoiseModel};
use aerialnav::query::{
    compile_chain, execute_chain, parse_chain, parse_instruction, retrieve_target, OpChain,
};
use aerialnav::scm::CognitiveMap;
use aerialnav::vocab::{Color, ObjectClass, Relation};
use aerialnav::world::{
    generate_scenario, Action, Difficulty, EpisodeState, GeneratorConfig, GoalSpec, LandmarkPrior,
    RelationConstraint, Scenario, SceneObject, MAX_STEPS,
};
use proptest::strategy::{Strategy, ValueTree};
use proptest::test_runner::TestRunner;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

const TIERS: [Difficulty; 3] = [Difficulty::Easy, Difficulty::Medium, Difficulty::Hard];

fn scenarios(tiers: &[Difficulty], per_tier: usize, first_seed: u64) -> Vec<(String, Scenario)> {
    let mut out = Vec::new();
    for tier in tiers {
        let cfg = GeneratorConfig::with_difficulty(*tier);
        for i in 0..per_tier as u64 {
            let seed = first_seed + i;
            let s = generate_scenario(&cfg, seed).expect("generator succeeds");
            out.push((format!("{}-{seed:04}", tier.as_str()), s));
        }
    }
    out
}

struct OracleRun {
    suite: SuiteRun,
    elapsed: Duration,
}

fn oracle_set() -> &'static Vec<(String, Scenario)> {
    static SET: OnceLock<Vec<(String, Scenario)>> = OnceLock::new();
    SET.get_or_init(|| scenarios(&TIERS, 50, 0))
}

fn oracle_run() -> &'static OracleRun {
    static RUN: OnceLock<OracleRun> = OnceLock::new();
    RUN.get_or_init(|| {
        let t = Instant::now();
        let set = oracle_set();
        let suite = run_suite(
            set,
            &ScriptedReasoner,
            &AgentConfig::noiseless(),
            &[0],
            ExecMode::Parallel,
            0,
        )
        .expect("suite runs");
        OracleRun {
            suite,
            elapsed: t.elapsed(),
        }
    })
}

const NOISE_SEEDS: [u64; 10] = [0, 1, 2, 3, 4, 5, 6, 7, 8, 9];

fn noise_levels() -> [(&'static str, NoiseModel); 3] {
    [
        ("none", NoiseModel::noiseless()),
        ("default", NoiseModel::default()),
        ("2x", NoiseModel::scaled(2.0)),
    ]
}

fn noise_runs() -> &'static Vec<(&'static str, SuiteRun)> {
    static RUNS: OnceLock<Vec<(&'static str, SuiteRun)>> = OnceLock::new();
    RUNS.get_or_init(|| {
        // 20 scenarios: 7 easy, 7 medium, 6 hard
        let mut set = scenarios(&[Difficulty::Easy, Difficulty::Medium], 7, 1000);
        set.extend(scenarios(&[Difficulty::Hard], 6, 1000));
        noise_levels()
            .into_iter()
            .map(|(name, noise)| {
                let cfg = AgentConfig {
                    noise,
                    ..AgentConfig::default()
                };
                (
                    name,
                    run_suite(
                        &set,
                        &ScriptedReasoner,
                        &cfg,
                        &NOISE_SEEDS,
                        ExecMode::Parallel,
                        0,
                    )
                    .expect("suite runs"),
                )
            })
            .collect()
    })
}

fn suite_invariants(name: &str, a: &Aggregate) -> Result<(), String> {
    ensure(a.spl <= a.sr + 1e-9, || {
        format!("{name}: SPL {:.2} > SR {:.2}", a.spl, a.sr)
    })?;
    ensure(a.osr + 1e-9 >= a.sr, || {
        format!("{name}: OSR {:.2} < SR {:.2}", a.osr, a.sr)
    })
}

// 1
fn oracle_end_to_end() -> Check {
    let run = oracle_run();
    let mut parts = Vec::new();
    for tier in TIERS {
        let rows: Vec<_> = run
            .suite
            .report
            .rows
            .iter()
            .filter(|r| r.scenario_id.starts_with(tier.as_str()))
            .cloned()
            .collect();
        let a = aggregate(&rows);
        ensure(rows.len() == 50, || {
            format!("{} has {} episodes", tier.as_str(), rows.len())
        })?;
        ensure(a.sr == 100.0, || {
            format!("{}: SR {:.1}%", tier.as_str(), a.sr)
        })?;
        ensure(a.mean_ne <= 2.5, || {
            format!("{}: mean NE {:.3} m", tier.as_str(), a.mean_ne)
        })?;
        ensure(a.spl >= 85.0, || {
            format!("{}: SPL {:.2}", tier.as_str(), a.spl / 100.0)
        })?;
        parts.push(format!(
            "{} SR {:.0}% NE {:.2} SPL {:.3}",
            tier.as_str(),
            a.sr,
            a.mean_ne,
            a.spl / 100.0
        ));
    }
    ensure(run.elapsed < Duration::from_secs(60), || {
        format!("took {:.1?}", run.elapsed)
    })?;
    Ok(format!("{}; {:.1?}", parts.join(", "), run.elapsed))
}

fn object_node(x: f64, y: f64, feature: Vec<f64>) -> SceneNode {
    SceneNode {
        id: NodeId(1),
        level: NodeLevel::Object,
        name: None,
        object_type: Some(ObjectClass::Vehicle),
        color: None,
        position: WorldPoint::new(x, y),
        bbox: Rect::centered(WorldPoint::new(x, y), 1.0, 1.0),
        confidence: 1.0,
        feature,
        observation_count: 1,
        contour: None,
        extent: Some([4.5, 2.0]),
        weight: 1.0,
    }
}

// 2
fn similarity_math() -> Check {
    // (a, b, feature a, feature b, gamma, sigma, hand value)
    #[rustfmt::skip]
    let cases: [((f64, f64), (f64, f64), &[f64], &[f64], f64, f64, f64); 20] = [
        ((0.0, 0.0), (0.0, 0.0), &[1.0, 0.0], &[1.0, 0.0], 0.95, 10.0, 1.0),
        ((0.0, 0.0), (10.0, 0.0), &[1.0, 0.0], &[1.0, 0.0], 0.95, 10.0, 0.9683939720585721),
        ((0.0, 0.0), (0.0, 0.0), &[1.0, 0.0], &[0.0, 1.0], 0.95, 10.0, 0.05),
        ((0.0, 0.0), (3.0, 4.0), &[1.0, 0.0], &[1.0, 0.0], 0.95, 10.0, 0.9889400391535702),
        ((5.0, 5.0), (5.0, 6.0), &[1.0, 0.0], &[1.0, 0.0], 0.95, 10.0, 0.9995024916874584),
        ((0.0, 0.0), (20.0, 0.0), &[1.0, 0.0], &[1.0, 0.0], 0.95, 10.0, 0.9509157819444367),
        ((0.0, 0.0), (30.0, 0.0), &[1.0, 0.0], &[0.0, 1.0], 0.95, 10.0, 6.1704902043339835e-06),
        ((0.0, 0.0), (1.0, 1.0), &[3.0, 4.0], &[4.0, 3.0], 0.95, 10.0, 0.9610099336653377),
        ((0.0, 0.0), (0.0, 2.0), &[1.0, 1.0], &[1.0, 0.0], 0.95, 10.0, 0.7197909140848362),
        ((-4.0, 2.0), (2.0, -6.0), &[1.0, 2.0, 2.0], &[2.0, 1.0, 2.0], 0.95, 10.0, 0.8628384165030165),
        ((0.0, 0.0), (5.0, 0.0), &[1.0, 0.0], &[1.0, 0.0], 0.5, 10.0, 0.8894003915357025),
        ((0.0, 0.0), (5.0, 0.0), &[1.0, 0.0], &[0.0, 1.0], 0.5, 10.0, 0.38940039153570244),
        ((0.0, 0.0), (7.0, 0.0), &[1.0, 0.0, 0.0], &[1.0, 1.0, 1.0], 0.7, 10.0, 0.5879331066880629),
        ((0.0, 0.0), (2.0, 0.0), &[1.0, 0.0], &[1.0, 0.0], 0.95, 5.0, 0.9926071894483106),
        ((0.0, 0.0), (2.0, 0.0), &[1.0, 0.0], &[1.0, 0.0], 0.95, 20.0, 0.9995024916874584),
        ((100.0, 100.0), (103.0, 104.0), &[0.6, 0.8], &[0.8, 0.6], 0.8, 10.0, 0.923760156614281),
        ((0.0, 0.0), (10.0, 0.0), &[1.0, 0.0], &[1.0, 0.0], 0.0, 10.0, 0.36787944117144233),
        ((0.0, 0.0), (10.0, 0.0), &[1.0, 0.0], &[0.0, 1.0], 1.0, 10.0, 0.0),
        // zero-norm feature: semantic term is 0
        ((0.0, 0.0), (1.0, 0.0), &[0.0, 0.0], &[1.0, 0.0], 0.95, 10.0, 0.04950249168745845),
        ((0.0, 0.0), (4.0, 3.0), &[2.0, 0.0, 0.0], &[1.0, 1.0, 0.0], 0.9, 8.0, 0.7040594876840656),
    ];
    for (i, (a, b, fa, fb, gamma, sigma, want)) in cases.iter().enumerate() {
        let p = HsgParams {
            gamma: *gamma,
            sigma: *sigma,
            rho: 0.8,
        };
        let got = similarity(
            &object_node(a.0, a.1, fa.to_vec()),
            &object_node(b.0, b.1, fb.to_vec()),
            &p,
        );
        ensure((got - want).abs() <= 1e-9, || {
            format!("case {i}: {got} vs {want}")
        })?;
    }

    // cos 0.8 at the default weights: d* = sigma sqrt(ln((1 - gamma) / (rho - gamma cos)))
    let p = HsgParams::default();
    let d_star = p.sigma * ((1.0 - p.gamma) / (p.rho - p.gamma * 0.8)).ln().sqrt();
    let (fa, fb) = (vec![1.0, 0.0], vec![0.8, 0.6]);
    let s_in = similarity(
        &object_node(0.0, 0.0, fa.clone()),
        &object_node(d_star - 1e-6, 0.0, fb.clone()),
        &p,
    );
    let s_out = similarity(
        &object_node(0.0, 0.0, fa),
        &object_node(d_star + 1e-6, 0.0, fb),
        &p,
    );
    ensure(s_in >= p.rho && s_out < p.rho, || {
        format!("cos 0.8 boundary at {d_star}: {s_in} / {s_out}")
    })?;

    // through integration: identical features, gamma 0.7 puts d* at sigma sqrt(ln 3)
    let params = HsgParams {
        gamma: 0.7,
        ..HsgParams::default()
    };
    let d_merge = params.sigma
        * ((1.0 - params.gamma) / (params.rho - params.gamma))
            .ln()
            .sqrt();
    let bounds = MapBounds::new(0.0, 0.0, 200.0, 200.0, 1.0).unwrap();
    let merged = |d: f64| {
        let mut g = SceneGraph::new(&[], &bounds, params).unwrap();
        g.add_object(
            ObjectClass::Vehicle,
            Some(Color::White),
            WorldPoint::new(100.0, 100.0),
            0.9,
        );
        let obs = aerialnav::perception::PerceivedObject {
            position: WorldPoint::new(100.0 + d, 100.0),
            object_type: ObjectClass::Vehicle,
            color: Some(Color::White),
            confidence: 0.9,
            extent: [4.5, 2.0],
        };
        g.integrate(&[obs]);
        g.object_count() == 1
    };
    ensure(merged(d_merge - 1e-6), || {
        format!("no merge just inside {d_merge}")
    })?;
    ensure(!merged(d_merge + 1e-6), || {
        format!("merge just outside {d_merge}")
    })?;
    Ok(format!(
        "20 cases to 1e-9; boundaries {d_star:.6} m (cos 0.8), {d_merge:.6} m (integrate)"
    ))
}

// 3
fn executor_equivalence() -> Check {
    let mut runner = TestRunner::deterministic();
    let graphs = common::graph_spec();
    let chains = common::chain_strategy();
    let (mut max_nodes, mut max_ops) = (0, 0);
    for i in 0..1000 {
        let spec = graphs.new_tree(&mut runner).unwrap().current();
        let chain: OpChain = chains.new_tree(&mut runner).unwrap().current();
        let g = common::build(&spec);
        ensure(g.len() <= 50 && chain.len() <= 6, || {
            format!("pair {i}: {} nodes, {} ops", g.len(), chain.len())
        })?;
        max_nodes = max_nodes.max(g.len());
        max_ops = max_ops.max(chain.len());
        let got = execute_chain(&g, &chain).candidates;
        let want = common::oracle(&g, &chain);
        ensure(got == want, || {
            format!("pair {i}: {got:?} vs {want:?} for {}", chain.to_json())
        })?;
    }
    Ok(format!(
        "1000 pairs, up to {max_nodes} nodes and {max_ops} ops"
    ))
}

const DAVEY_CHAIN: &str = r#"[
  {"method": "get_geonode_by_name", "args": ["Davey Road"]},
  {"method": "get_child_nodes", "kwargs": {"relation_type": "contains"}},
  {"method": "filter_by_class", "args": ["vehicle"]},
  {"method": "filter_by_attribute", "args": ["color", "white"]}
]"#;

// 4
fn printed_chain() -> Check {
    let goal = parse_instruction("a white car on Davey Road", &["Davey Road", "Bragg Road"])
        .map_err(|e| e.to_string())?;
    let compiled = compile_chain(&goal).map_err(|e| e.to_string())?;
    let printed = parse_chain(DAVEY_CHAIN).map_err(|e| e.to_string())?;
    ensure(compiled.len() == 4, || format!("{} ops", compiled.len()))?;
    for (i, (a, b)) in compiled.ops().iter().zip(printed.ops()).enumerate() {
        ensure(a == b, || format!("op {i}: {a:?} vs {b:?}"))?;
    }
    let again = parse_chain(&printed.to_json()).map_err(|e| e.to_string())?;
    ensure(again == printed, || {
        "serialize/parse changed the chain".into()
    })?;
    let pretty = parse_chain(&printed.to_json_pretty()).map_err(|e| e.to_string())?;
    ensure(pretty == printed, || "pretty form changed the chain".into())?;
    Ok("4 ops match; JSON round-trips".into())
}

fn road(name: &str, r: Rect) -> LandmarkPrior {
    LandmarkPrior {
        name: name.into(),
        contour: Polygon::rectangle(&r).unwrap(),
    }
}

// 5
fn fallback_patterns() -> Check {
    let bounds = MapBounds::new(0.0, 0.0, 300.0, 300.0, 1.0).unwrap();
    let pose = Pose::new(20.0, 20.0, 50.0, 0.0);

    // strict empty, one relaxation level finds exactly one node
    let davey = road("Davey Road", Rect::new(100.0, 100.0, 200.0, 110.0));
    let mut g = SceneGraph::new(&[davey], &bounds, HsgParams::default()).unwrap();
    let car = g.add_object(
        ObjectClass::Vehicle,
        Some(Color::White),
        WorldPoint::new(150.0, 105.0),
        0.8,
    );
    g.add_object(
        ObjectClass::Vehicle,
        Some(Color::Gray),
        WorldPoint::new(180.0, 250.0),
        0.8,
    );
    let mut goal = GoalSpec::class_only(ObjectClass::Vehicle);
    goal.target_attributes
        .insert("color".into(), "white".into());
    goal.anchor_landmark = Some("Davey Road".into());
    goal.relation_chain = vec![RelationConstraint::anchored(Relation::AdjacentTo)];
    let r = retrieve_target(&g, &goal, &pose);
    let strict = execute_chain(&g, &compile_chain(&goal).unwrap());
    ensure(strict.candidates.is_empty(), || {
        "strict chain already answers".into()
    })?;
    ensure(
        r.node == Some(car) && r.level >= 1 && r.fallback_used && !r.failed,
        || format!("case 2: {:?}", r.log),
    )?;
    ensure(
        r.log
            .iter()
            .filter(|l| *l == "Query completed: 1 node(s) found")
            .count()
            == 1,
        || format!("{:?}", r.log),
    )?;
    let case2 = r.level;

    // over-merged graph: a loose merge threshold folds the white car into the
    // gray one, so no level finds a white vehicle
    let bragg = road("Bragg Road", Rect::new(100.0, 100.0, 200.0, 110.0));
    let params = HsgParams {
        gamma: 0.95,
        sigma: 10.0,
        rho: 0.3,
    };
    let mut g = SceneGraph::new(std::slice::from_ref(&bragg), &bounds, params).unwrap();
    let seen = |x: f64, color: Color, conf: f64| aerialnav::perception::PerceivedObject {
        position: WorldPoint::new(x, 105.0),
        object_type: ObjectClass::Vehicle,
        color: Some(color),
        confidence: conf,
        extent: [4.5, 2.0],
    };
    for _ in 0..3 {
        g.integrate(&[seen(150.0, Color::Gray, 0.9)]);
    }
    g.integrate(&[seen(153.0, Color::White, 0.6)]);
    ensure(g.object_count() == 1, || {
        format!("{} object nodes, expected the over-merge", g.object_count())
    })?;
    let mut goal = GoalSpec::class_only(ObjectClass::Vehicle);
    goal.target_attributes
        .insert("color".into(), "white".into());
    goal.anchor_landmark = Some("Bragg Road".into());
    goal.relation_chain = vec![RelationConstraint::anchored(Relation::Contains)];
    let r = retrieve_target(&g, &goal, &pose);
    let c = bragg.contour.centroid();
    ensure(r.failed && r.fallback_used && r.node.is_none(), || {
        format!("case 5: {:?}", r.log)
    })?;
    ensure(r.position.distance(&c) < 1e-9, || {
        format!("returned {:?}, anchor centroid {:?}", r.position, c)
    })?;
    Ok(format!(
        "relaxed level {case2} yields 1 node; over-merge returns the anchor centroid with the flag"
    ))
}

// 6
fn transforms() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    for _ in 0..2000 {
        let scale = rng.random_range(0.1..4.0);
        let x0 = rng.random_range(-500.0..500.0);
        let y0 = rng.random_range(-500.0..500.0);
        let b = MapBounds::new(
            x0,
            y0,
            x0 + rng.random_range(50.0..1500.0),
            y0 + rng.random_range(50.0..1500.0),
            scale,
        )
        .unwrap();
        let p = WorldPoint::new(
            rng.random_range(b.x_min..b.x_max),
            rng.random_range(b.y_min..b.y_max),
        );
        let q = pixel_to_world(&world_to_pixel(&p, &b).pixel, &b).map_err(|e| e.to_string())?;
        let err = (q.x - p.x).abs().max((q.y - p.y).abs()) * scale;
        worst = worst.max(err);
        ensure(err <= 0.5 + 1e-9, || {
            format!("{p:?} at scale {scale} came back as {q:?}")
        })?;
    }

    let (r2, r3) = (2f64.sqrt(), 3f64.sqrt());
    // (camera offset, pose x, y, heading, hand value of pose - R(theta) offset)
    #[rustfmt::skip]
    let cases = [
        ((0.0, 0.0), (10.0, 10.0, 0.0), (10.0, 10.0)),
        ((3.0, 4.0), (10.0, 10.0, 0.0), (7.0, 6.0)),
        ((3.0, 4.0), (10.0, 10.0, 180.0), (13.0, 14.0)),
        ((3.0, 4.0), (0.0, 0.0, 90.0), (4.0, -3.0)),
        ((3.0, 4.0), (0.0, 0.0, 270.0), (-4.0, 3.0)),
        ((1.0, 0.0), (5.0, -5.0, 30.0), (5.0 - r3 / 2.0, -5.5)),
        ((0.0, 2.0), (-20.0, 40.0, 45.0), (r2 - 20.0, 40.0 - r2)),
        ((-6.0, 8.0), (100.0, 200.0, 60.0), (103.0 + 4.0 * r3, 196.0 + 3.0 * r3)),
        ((2.5, -1.5), (-3.0, 7.0, 135.0), (r2 / 2.0 - 3.0, 7.0 - 2.0 * r2)),
        ((10.0, 10.0), (0.0, 0.0, 330.0), (-5.0 * r3 - 5.0, 5.0 - 5.0 * r3)),
    ];
    for (i, ((cx, cy), (px, py, theta), (wx, wy))) in cases.iter().enumerate() {
        let w = camera_to_world(
            &CameraPoint::new(*cx, *cy),
            &Pose::new(*px, *py, 50.0, *theta),
            SignConvention::Printed,
        );
        ensure((w.x - wx).abs() <= 1e-9 && (w.y - wy).abs() <= 1e-9, || {
            format!("case {i}: {w:?} vs ({wx}, {wy})")
        })?;
    }
    Ok(format!(
        "pixel round trip worst {worst:.3}/s; 10 camera cases to 1e-9"
    ))
}

fn random_trace(template: &EpisodeTrace, rng: &mut ChaCha8Rng) -> EpisodeTrace {
    let start = Pose::new(
        rng.random_range(0.0..500.0),
        rng.random_range(0.0..500.0),
        50.0,
        30.0 * rng.random_range(0..12) as f64,
    );
    let mut state = EpisodeState::new(start);
    let len = rng.random_range(1..=MAX_STEPS);
    let mut steps = Vec::new();
    for i in 0..len {
        let a = if i + 1 == len && rng.random_bool(0.7) {
            Action::Stop
        } else if rng.random_bool(0.85) {
            Action::PLANAR[rng.random_range(0..8)]
        } else {
            [
                Action::TurnLeft,
                Action::TurnRight,
                Action::Ascend,
                Action::Descend,
            ][rng.random_range(0..4)]
        };
        if state.step(a).is_err() {
            break;
        }
        steps.push(StepRecord {
            step: i,
            action: a,
            pose: state.pose,
            stage: Stage::Search,
            hsg_objects: 0,
        });
    }
    // half the targets sit near where the drone ended up
    let target = if rng.random_bool(0.5) {
        state
            .pose
            .position()
            .translate(rng.random_range(-25.0..25.0), rng.random_range(-25.0..25.0))
    } else {
        WorldPoint::new(rng.random_range(0.0..500.0), rng.random_range(0.0..500.0))
    };
    EpisodeTrace {
        start,
        steps,
        final_pose: state.pose,
        stop_issued: state.stop_issued,
        target_position: target,
        ..template.clone()
    }
}

// 7
fn metrics() -> Check {
    let template = &oracle_run().suite.traces[0];
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let traces: Vec<EpisodeTrace> = (0..100).map(|_| random_trace(template, &mut rng)).collect();
    let mut brute = Vec::new();
    for (i, t) in traces.iter().enumerate() {
        let d2 = |x: f64, y: f64| {
            ((x - t.target_position.x).powi(2) + (y - t.target_position.y).powi(2)).sqrt()
        };
        let mut path = 0.0;
        let (mut px, mut py, mut pz) = (t.start.x, t.start.y, t.start.z);
        let mut reached = d2(px, py) <= SUCCESS_THRESHOLD;
        for s in &t.steps {
            path += ((s.pose.x - px).powi(2) + (s.pose.y - py).powi(2) + (s.pose.z - pz).powi(2))
                .sqrt();
            (px, py, pz) = (s.pose.x, s.pose.y, s.pose.z);
            reached |= d2(px, py) <= SUCCESS_THRESHOLD;
        }
        let ne = d2(px, py);
        let success = t.stop_issued && ne <= SUCCESS_THRESHOLD;
        let shortest = d2(t.start.x, t.start.y);
        let spl = if success {
            shortest / path.max(shortest)
        } else {
            0.0
        };
        let got = score_episode(t);
        ensure((got.ne - ne).abs() < 1e-9, || {
            format!("trace {i}: NE {} vs {ne}", got.ne)
        })?;
        ensure(got.success == success, || {
            format!("trace {i}: success {}", got.success)
        })?;
        ensure(got.oracle_success == reached, || {
            format!("trace {i}: oracle success {}", got.oracle_success)
        })?;
        ensure((got.spl - spl).abs() < 1e-9, || {
            format!("trace {i}: SPL {} vs {spl}", got.spl)
        })?;
        brute.push((ne, success, reached, spl));
    }
    let rows: Vec<_> = traces.iter().map(|t| row_for("random", t)).collect();
    let a = aggregate(&rows);
    let n = brute.len() as f64;
    let mean = |f: &dyn Fn(&(f64, bool, bool, f64)) -> f64| brute.iter().map(f).sum::<f64>() / n;
    ensure((a.mean_ne - mean(&|b| b.0)).abs() < 1e-9, || {
        "mean NE differs".into()
    })?;
    ensure(
        (a.sr - 100.0 * mean(&|b| b.1 as u8 as f64)).abs() < 1e-9,
        || "SR differs".into(),
    )?;
    ensure(
        (a.osr - 100.0 * mean(&|b| b.2 as u8 as f64)).abs() < 1e-9,
        || "OSR differs".into(),
    )?;
    ensure((a.spl - 100.0 * mean(&|b| b.3)).abs() < 1e-9, || {
        "SPL differs".into()
    })?;
    suite_invariants("random traces", &a)?;
    suite_invariants("oracle suite", &oracle_run().suite.report.aggregate)?;
    for (name, run) in noise_runs() {
        suite_invariants(name, &run.report.aggregate)?;
    }
    let successes = brute.iter().filter(|b| b.1).count();
    Ok(format!(
        "100 traces ({successes} successes) match; SPL <= SR <= OSR on 5 suites"
    ))
}

// 8
fn gsd_values() -> Check {
    for (z, want) in [(20.0, 4.16e-2), (50.0, 1.04e-1), (100.0, 2.08e-1)] {
        let g = gsd(z).map_err(|e| e.to_string())?;
        ensure((g - want).abs() <= 1e-3, || format!("gsd({z}) = {g}"))?;
    }
    Ok("gsd(20, 50, 100) = 0.0416, 0.104, 0.208".into())
}

// 9
fn duplicate_suppression() -> Check {
    let bounds = MapBounds::new(0.0, 0.0, 400.0, 400.0, 1.0).unwrap();
    let landmarks = vec![road("Davey Road", Rect::new(150.0, 195.0, 250.0, 205.0))];
    let car = SceneObject {
        id: "car".into(),
        object_type: ObjectClass::Vehicle,
        color: Some(Color::White),
        position: WorldPoint::new(200.0, 200.0),
        extent: [4.5, 2.0],
    };
    let mut goal = GoalSpec::class_only(ObjectClass::Vehicle);
    goal.target_object_id = Some("car".into());
    let sc = Scenario {
        bounds,
        landmarks: landmarks.clone(),
        objects: vec![car],
        goal,
        start: Pose::new(200.0, 150.0, 50.0, 0.0),
        seed: 9,
    };
    let mut g = SceneGraph::new(&landmarks, &bounds, HsgParams::default()).unwrap();
    let mut map = CognitiveMap::new(&landmarks, &bounds).map_err(|e| e.to_string())?;
    let noise = NoiseModel::noiseless();
    for step in 0..10 {
        // overlapping frames from a short pass over the car
        let pose = Pose::new(
            180.0 + 4.0 * step as f64,
            190.0 + step as f64,
            50.0,
            30.0 * (step % 4) as f64,
        );
        let seen = project_detections(&observe(&sc, &pose, &noise, step as u64));
        ensure(seen.len() == 1, || {
            format!("frame {step} saw {} objects", seen.len())
        })?;
        g.integrate(&seen);
        map.update(&seen, &pose, step);
    }
    ensure(g.object_count() == 1, || {
        format!("{} HSG object nodes", g.object_count())
    })?;
    ensure(map.object_layer.len() == 1, || {
        format!("{} SCM objects", map.object_layer.len())
    })?;
    let n = g.object_nodes().next().unwrap();
    ensure(n.observation_count == 10, || {
        format!("observation count {}", n.observation_count)
    })?;
    Ok("10 frames -> 1 HSG node (10 observations), 1 SCM object".into())
}

// 10
fn invocation_budget() -> Check {
    // a reasoner that never lets the search end keeps episodes at full length
    let set = &oracle_set()[..30];
    let stubborn = ConstantReasoner(Advice::Direction(Compass::North));
    let long = run_suite(
        set,
        &stubborn,
        &AgentConfig::noiseless(),
        &[0],
        ExecMode::Parallel,
        0,
    )
    .map_err(|e| e.to_string())?;
    let mut all: Vec<&EpisodeTrace> = long.traces.iter().collect();
    all.extend(&oracle_run().suite.traces);
    for (_, run) in noise_runs() {
        all.extend(&run.traces);
    }
    let full = all.iter().filter(|t| t.steps.len() == MAX_STEPS).count();
    ensure(full > 0, || "no episode ran the full 200 steps".into())?;
    let worst = all.iter().map(|t| t.invocations.len()).max().unwrap_or(0);
    let over = all.iter().filter(|t| t.invocations.len() > 20).count();
    ensure(over == 0, || {
        format!("{over} episodes over 20 calls (max {worst})")
    })?;
    Ok(format!(
        "{} episodes ({full} at 200 steps), max {worst} calls",
        all.len()
    ))
}

// 11
fn noise_trend() -> Check {
    let runs = noise_runs();
    let stats: Vec<(&str, f64, f64)> = runs
        .iter()
        .map(|(name, run)| {
            let a = &run.report.aggregate;
            (*name, a.sr, a.sr_std / (NOISE_SEEDS.len() as f64).sqrt())
        })
        .collect();
    for w in stats.windows(2) {
        let (lo, hi) = (&w[0], &w[1]);
        let tol = lo.2.max(hi.2);
        ensure(hi.1 <= lo.1 + tol, || {
            format!(
                "SR rises from {} ({:.2}) to {} ({:.2}), SE {tol:.2}",
                lo.0, lo.1, hi.0, hi.1
            )
        })?;
    }
    let text: Vec<String> = stats
        .iter()
        .map(|(n, sr, se)| format!("{n} {sr:.1}±{se:.1}"))
        .collect();
    Ok(format!("SR {}", text.join(", ")))
}

// 12
fn determinism() -> Check {
    let set = oracle_set();
    let cfg = AgentConfig::default();
    let a = run_suite(set, &ScriptedReasoner, &cfg, &[0, 1], ExecMode::Parallel, 0)
        .map_err(|e| e.to_string())?;
    let b = run_suite(
        set,
        &ScriptedReasoner,
        &cfg,
        &[0, 1],
        ExecMode::Sequential,
        1,
    )
    .map_err(|e| e.to_string())?;
    ensure(report_json(&a.report) == report_json(&b.report), || {
        "JSON reports differ".into()
    })?;
    ensure(report_csv(&a.report) == report_csv(&b.report), || {
        "CSV reports differ".into()
    })?;
    for (x, y) in a.traces.iter().zip(&b.traces) {
        let (sx, sy) = (
            serde_json::to_string(x).unwrap(),
            serde_json::to_string(y).unwrap(),
        );
        ensure(sx == sy, || format!("trace {} differs", x.episode_id))?;
    }
    ensure(a.traces.len() == b.traces.len(), || {
        "trace counts differ".into()
    })?;
    let first = oracle_run();
    let again = run_suite(
        set,
        &ScriptedReasoner,
        &AgentConfig::noiseless(),
        &[0],
        ExecMode::Parallel,
        0,
    )
    .map_err(|e| e.to_string())?;
    ensure(
        report_json(&first.suite.report) == report_json(&again.report),
        || "oracle reports differ".into(),
    )?;
    Ok(format!(
        "{} noisy + {} noiseless episodes byte-identical across runs",
        a.traces.len(),
        again.traces.len()
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Check); 12] = [
        ("oracle end-to-end", oracle_end_to_end),
        ("similarity math", similarity_math),
        ("executor equivalence", executor_equivalence),
        ("printed chain", printed_chain),
        ("fallback patterns", fallback_patterns),
        ("transforms", transforms),
        ("metrics", metrics),
        ("gsd", gsd_values),
        ("duplicate suppression", duplicate_suppression),
        ("invocation budget", invocation_budget),
        ("noise trend", noise_trend),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why}", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria pass",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
