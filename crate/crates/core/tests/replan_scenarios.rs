use std::path::PathBuf;

use hypercorridor::env::{maze_scenario, AnyScenario, Scenario};
use hypercorridor::replan::{run, ReplanReason, RunLog, RunParams, SPLICE_LIMIT};
use hypercorridor::sampler::PlannerConfig;

fn scenario_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn params() -> RunParams {
    RunParams {
        planner: PlannerConfig {
            iters_per_round: 800,
            ..Default::default()
        },
        ..Default::default()
    }
}

/// Executed pieces must be the legs' own trajectories over their time spans.
fn pieces_follow_their_legs<const D: usize>(log: &RunLog<D>) {
    let mut clock = 0.0;
    for piece in &log.pieces {
        let leg = &log.legs[piece.leg];
        assert!(piece.t_begin >= clock - 1e-12, "pieces overlap in time");
        assert!(piece.t_end >= piece.t_begin);
        let a = leg.trajectory.sample(piece.t_begin - leg.t0).unwrap();
        let b = leg.trajectory.sample(piece.t_end - leg.t0).unwrap();
        assert!((a.p - piece.start.p).norm() <= 1e-12 && (a.v - piece.start.v).norm() <= 1e-12);
        assert!((b.p - piece.end.p).norm() <= 1e-12 && (b.v - piece.end.v).norm() <= 1e-12);
        clock = piece.t_end;
    }
}

fn all_gates_pass<const D: usize>(log: &RunLog<D>) {
    for gate in log.gates() {
        assert!(gate.passed, "{gate}");
    }
}

#[test]
fn maze_tour_reaches_every_goal() {
    let scenario = maze_scenario(4, 5).unwrap();
    let log = run(&scenario, &params(), scenario.seed).unwrap();
    all_gates_pass(&log);
    pieces_follow_their_legs(&log);
    // one leg per goal, each ending at that goal at rest
    let goals: Vec<_> = std::iter::once(scenario.goal).chain(scenario.goals.iter().copied()).collect();
    assert_eq!(log.legs.len(), goals.len());
    for (leg, goal) in log.legs.iter().zip(&goals) {
        assert_eq!(&leg.goal, goal);
        let end = leg.trajectory.end();
        assert!((end.p - goal).norm() <= 1e-6);
        assert!(end.v.norm() <= 1e-6);
        assert!(leg.report.passed);
    }
    assert!(log.legs[1..].iter().all(|l| l.reason == ReplanReason::Arrival));
}

#[test]
fn example_scenarios_parse() {
    let mut count = 0;
    for entry in std::fs::read_dir(scenario_dir()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "json") {
            AnyScenario::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            count += 1;
        }
    }
    assert!(count >= 3);
}

#[test]
fn goal_change_scenario_file_runs() {
    let AnyScenario::Planar(s) = AnyScenario::load(scenario_dir().join("open_goal_change.json")).unwrap() else {
        panic!("expected a planar scenario");
    };
    let log = run(&s, &params(), s.seed).unwrap();
    all_gates_pass(&log);
    pieces_follow_their_legs(&log);
    assert_eq!(log.legs.len(), 2);
    assert_eq!(log.legs[1].reason, ReplanReason::GoalChange);
    assert!((log.legs[1].t0 - 2.5).abs() < 1e-9);
}

#[test]
fn wall_update_scenario_runs() {
    let AnyScenario::Planar(s) = AnyScenario::load(scenario_dir().join("wall_update.json")).unwrap() else {
        panic!("expected a planar scenario");
    };
    let log = run(&s, &params(), s.seed).unwrap();
    all_gates_pass(&log);
    pieces_follow_their_legs(&log);
    assert!(log.max_splice_gap() < SPLICE_LIMIT);
    let reasons: Vec<_> = log.decisions.iter().map(|d| d.reason).collect();
    assert!(reasons.contains(&ReplanReason::GoalChange), "{reasons:?}");
}

#[test]
fn spatial_scenario_runs() {
    let AnyScenario::Spatial(s) = AnyScenario::load(scenario_dir().join("forest_3d.json")).unwrap() else {
        panic!("expected a spatial scenario");
    };
    let log = run(&s, &params(), s.seed).unwrap();
    all_gates_pass(&log);
    pieces_follow_their_legs(&log);
    assert!(log.legs.len() >= 3);
}

#[test]
fn runs_repeat_exactly() {
    let scenario: Scenario<2> = maze_scenario(9, 2).unwrap();
    let a = run(&scenario, &params(), 1).unwrap();
    let b = run(&scenario, &params(), 1).unwrap();
    assert_eq!(a.legs.len(), b.legs.len());
    for (x, y) in a.legs.iter().zip(&b.legs) {
        assert_eq!(x.path, y.path);
        assert_eq!(x.trajectory, y.trajectory);
    }
    assert_eq!(a.outcome, b.outcome);
}

#[test]
fn log_files_are_written() {
    let scenario = maze_scenario(2, 2).unwrap();
    let log = run(&scenario, &params(), 2).unwrap();
    let dir = tempfile::tempdir().unwrap();
    log.write(dir.path(), 0.01).unwrap();
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("run_log.json")).unwrap()).unwrap();
    assert_eq!(json["legs"].as_array().unwrap().len(), log.legs.len());
    assert_eq!(json["outcome"]["status"], "reached");
    for piece in &log.pieces {
        let csv = std::fs::read_to_string(dir.path().join(format!("leg_{:02}.csv", piece.leg))).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "t,px,py,vx,vy,ax,ay");
        let first: f64 = lines.next().unwrap().split(',').next().unwrap().parse().unwrap();
        assert!((first - piece.t_begin).abs() < 1e-9);
    }
}
