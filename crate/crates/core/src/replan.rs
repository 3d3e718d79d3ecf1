//! Online loop: commit a horizon of the current trajectory, watch for
//! triggers, and splice in fresh plans.
//!
//! Time is virtual. Each cycle commits `[t̄, t̄ + t_s]`; when a trigger
//! fires the new leg starts from the predicted state at `t̄ + t_s`, whose
//! acceleration is the outgoing trajectory's right limit, so position and
//! velocity carry over exactly. Planning latency is measured and logged but
//! does not move the clock, which keeps runs reproducible.

use std::collections::VecDeque;
use std::fs::File;
use std::io::BufWriter;
use std::path::Path as FsPath;
use std::time::Instant;

use serde::Serialize;

use crate::bench::{trial_seed, Gate, KKT_LIMIT};
use crate::corridor::State;
use crate::env::{apply_update, Environment, EventKind, Scenario, ScenarioEvent};
use crate::error::{invalid, Error, Result};
use crate::geometry::Point;
use crate::pipeline::{trajectory_along, Outcome, PipelineParams};
use crate::qp::{QpStatus, SolverSettings};
use crate::sampler::{Planner, PlannerConfig};
use crate::trajectory::{interval_is_free, Trajectory, VerificationReport};

const CERTIFY_DEPTH: u32 = 14;
/// Largest accepted position or velocity jump at a splice.
pub const SPLICE_LIMIT: f64 = 1e-9;
/// Slack when comparing virtual clock readings (s).
const CLOCK_EPS: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct RunParams {
    /// Commit horizon `t_s` (s).
    pub commit_horizon: f64,
    /// Rewiring iterations spent on the current leg between commits.
    pub refine_budget: usize,
    pub planner: PlannerConfig,
    pub solver: SolverSettings,
    pub max_cycles: usize,
    /// Accepted distance between the final position and the goal (m).
    pub goal_tolerance: f64,
}

impl Default for RunParams {
    fn default() -> Self {
        Self {
            commit_horizon: 0.5,
            refine_budget: 200,
            planner: PlannerConfig::default(),
            solver: SolverSettings::default(),
            max_cycles: 100_000,
            goal_tolerance: 1e-6,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ReplanReason {
    Initial,
    GoalChange,
    /// An obstacle update invalidated the rest of the trajectory.
    Blocked,
    /// The goal was reached and the next one in the tour was issued.
    Arrival,
}

/// Decision for one cycle: `Some` when the remaining trajectory must be
/// replaced. Goal changes win over obstacle updates; an obstacle update
/// triggers only if the trajectory from local time `from` onward can no
/// longer be certified free of the updated obstacles.
pub fn should_replan<const D: usize>(
    current: &Trajectory<D>,
    from: f64,
    pending: &[ScenarioEvent<D>],
    env_raw: &Environment<D>,
    robot_radius: f64,
) -> Result<Option<ReplanReason>> {
    if pending.iter().any(|e| matches!(e.kind, EventKind::GoalChange { .. })) {
        return Ok(Some(ReplanReason::GoalChange));
    }
    if pending.iter().any(|e| matches!(e.kind, EventKind::ObstacleUpdate { .. })) {
        let env = env_raw.inflate(robot_radius)?;
        if !interval_is_free(current, &env, from, current.duration(), CERTIFY_DEPTH) {
            return Ok(Some(ReplanReason::Blocked));
        }
    }
    Ok(None)
}

/// One planned trajectory and the time it took over.
#[derive(Clone, Debug, Serialize)]
pub struct Leg<const D: usize> {
    pub index: usize,
    /// Absolute start time (s).
    pub t0: f64,
    pub start: State<D>,
    pub goal: Point<D>,
    pub reason: ReplanReason,
    pub path: Vec<Point<D>>,
    pub steps: usize,
    pub h: f64,
    pub qp_iterations: usize,
    /// Largest scaled KKT residual of the leg's QP solve.
    pub kkt_residual: f64,
    pub report: VerificationReport,
    #[serde(skip)]
    pub trajectory: Trajectory<D>,
}

/// Part of a leg that was actually executed, in absolute time.
#[derive(Clone, Debug, Serialize)]
pub struct Piece<const D: usize> {
    pub leg: usize,
    pub t_begin: f64,
    pub t_end: f64,
    pub start: State<D>,
    pub end: State<D>,
    /// The leg verified when planned and the executed part stayed certified
    /// free of every obstacle set in force while it ran.
    pub verified: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Decision {
    /// Clock reading when the trigger was seen (s).
    pub time: f64,
    /// Where the new leg would start (s).
    pub splice_time: f64,
    pub reason: ReplanReason,
    /// Wall-clock planning time (s); recorded only.
    pub latency: f64,
    pub accepted: bool,
    pub note: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Refinement {
    pub time: f64,
    pub leg: usize,
    pub cost_before: f64,
    pub cost_after: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RunOutcome {
    Reached { time: f64 },
    Failed { time: f64, reason: String },
}

#[derive(Clone, Debug, Serialize)]
pub struct RunLog<const D: usize> {
    pub commit_horizon: f64,
    pub seed: u64,
    pub legs: Vec<Leg<D>>,
    pub pieces: Vec<Piece<D>>,
    pub decisions: Vec<Decision>,
    pub refinements: Vec<Refinement>,
    pub outcome: RunOutcome,
}

impl<const D: usize> RunLog<D> {
    pub fn reached(&self) -> bool {
        matches!(self.outcome, RunOutcome::Reached { .. })
    }

    /// Position and velocity jumps at each splice between pieces.
    pub fn splice_gaps(&self) -> Vec<(f64, f64)> {
        self.pieces
            .windows(2)
            .map(|w| ((w[1].start.p - w[0].end.p).norm(), (w[1].start.v - w[0].end.v).norm()))
            .collect()
    }

    pub fn max_splice_gap(&self) -> f64 {
        self.splice_gaps().iter().fold(0.0, |m, (p, v)| m.max(*p).max(*v))
    }

    pub fn all_verified(&self) -> bool {
        self.pieces.iter().all(|p| p.verified)
    }

    /// Acceptance gates for a run: goal reached, continuous splices,
    /// verified pieces, accurate solves.
    pub fn gates(&self) -> Vec<Gate> {
        let gap = self.max_splice_gap();
        let kkt = self.legs.iter().map(|l| l.kkt_residual).fold(0.0, f64::max);
        let verified = self.pieces.iter().filter(|p| p.verified).count();
        vec![
            Gate::new("goal reached", self.reached(), format!("{:?}", self.outcome)),
            Gate::new(
                "splice continuity",
                gap < SPLICE_LIMIT,
                format!("{} splices, largest position/velocity jump {gap:.3e}", self.pieces.len().saturating_sub(1)),
            ),
            Gate::new(
                "pieces verified",
                !self.pieces.is_empty() && verified == self.pieces.len(),
                format!("{verified}/{} pieces", self.pieces.len()),
            ),
            Gate::new("kkt residual", kkt <= KKT_LIMIT, format!("{} solves, largest residual {kkt:.3e}", self.legs.len())),
        ]
    }

    /// Writes `run_log.json` and `leg_NN.csv` (executed part of each leg,
    /// absolute time, sampled every `dt`) into `dir`.
    pub fn write(&self, dir: &FsPath, dt: f64) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        serde_json::to_writer_pretty(BufWriter::new(File::create(dir.join("run_log.json"))?), self)?;
        for piece in &self.pieces {
            let leg = &self.legs[piece.leg];
            let out = BufWriter::new(File::create(dir.join(format!("leg_{:02}.csv", leg.index)))?);
            leg.trajectory.write_csv_span(out, dt, leg.t0, piece.t_begin - leg.t0, piece.t_end - leg.t0)?;
        }
        Ok(())
    }
}

type Planned<const D: usize> = (Planner<'static, D>, Outcome<D>);

fn plan_leg<const D: usize>(
    env_raw: &Environment<D>,
    start: &State<D>,
    goal: Point<D>,
    params: &PipelineParams,
    seed: u64,
) -> std::result::Result<Planned<D>, String> {
    let attempt = || -> Result<std::result::Result<Planned<D>, String>> {
        let inflated = env_raw.inflate(params.inflation(D))?;
        let mut planner = match Planner::owning(inflated, start.p, goal, params.planner.clone(), seed) {
            Ok(p) => p,
            Err(Error::PlannerFailure(m)) => return Ok(Err(format!("planner: {m}"))),
            Err(e) => return Err(e),
        };
        let path = match planner.plan() {
            Ok(p) => p,
            Err(Error::PlannerFailure(m)) => return Ok(Err(format!("planner: {m}"))),
            Err(e) => return Err(e),
        };
        let out = trajectory_along(env_raw, path, start, params)?;
        if out.solution.status != QpStatus::Optimal {
            return Ok(Err(format!("qp: {:?}", out.solution.status)));
        }
        if !out.succeeded() {
            return Ok(Err("verification failed".into()));
        }
        Ok(Ok((planner, out)))
    };
    attempt().unwrap_or_else(|e| Err(e.to_string()))
}

struct Open {
    leg: usize,
    /// Local time up to which the piece has been checked against retired
    /// obstacle sets.
    checked_until: f64,
    clear: bool,
}

/// Runs a scenario to completion or failure. Failures to replan are
/// logged; the robot then finishes the current leg, which ends at rest,
/// and the run is marked failed.
pub fn run<const D: usize>(scenario: &Scenario<D>, params: &RunParams, seed: u64) -> Result<RunLog<D>> {
    scenario.validate()?;
    if !(params.commit_horizon > 0.0 && params.commit_horizon.is_finite()) {
        return invalid("commit horizon must be finite and > 0");
    }
    let pipeline = PipelineParams {
        ell: scenario.ell,
        a_max: scenario.a_max,
        robot_radius: scenario.robot_radius,
        planner: params.planner.clone(),
        solver: params.solver.clone(),
    };
    let radius = scenario.robot_radius;
    let mut obstacles = scenario.obstacles.clone();
    let mut env = scenario.environment()?;
    let mut events: VecDeque<_> = scenario.events.iter().cloned().collect();
    let mut tour: VecDeque<_> = scenario.goals.iter().copied().collect();
    let mut goal = scenario.goal;
    let mut log = RunLog {
        commit_horizon: params.commit_horizon,
        seed,
        legs: Vec::new(),
        pieces: Vec::new(),
        decisions: Vec::new(),
        refinements: Vec::new(),
        outcome: RunOutcome::Failed {
            time: 0.0,
            reason: "cycle limit reached".into(),
        },
    };

    let start: State<D> = scenario.start.clone().into();
    let clock = Instant::now();
    let first = plan_leg(&env, &start, goal, &pipeline, trial_seed(seed, 0, 0));
    log.decisions.push(Decision {
        time: 0.0,
        splice_time: 0.0,
        reason: ReplanReason::Initial,
        latency: clock.elapsed().as_secs_f64(),
        accepted: first.is_ok(),
        note: first.as_ref().err().cloned(),
    });
    let (mut planner, out) = match first {
        Ok(p) => p,
        Err(reason) => {
            log.outcome = RunOutcome::Failed { time: 0.0, reason };
            return Ok(log);
        }
    };
    push_leg(&mut log, 0.0, start, goal, ReplanReason::Initial, out);
    let mut open = Open {
        leg: 0,
        checked_until: 0.0,
        clear: true,
    };
    let mut planner_current = true;
    let mut braking: Option<String> = None;
    let mut t_bar = 0.0_f64;

    for _ in 0..params.max_cycles {
        let leg = &log.legs[open.leg];
        let (t0, t_end) = (leg.t0, leg.t0 + leg.trajectory.duration());
        let mut pending = Vec::new();
        while events.front().is_some_and(|e| e.time <= t_bar + CLOCK_EPS) {
            pending.push(events.pop_front().expect("front exists"));
        }
        for e in &pending {
            if let EventKind::ObstacleUpdate { add, remove } = &e.kind {
                let upto = (t_bar - t0).min(t_end - t0);
                open.clear &= interval_is_free(&leg.trajectory, &env.inflate(radius)?, open.checked_until, upto, CERTIFY_DEPTH);
                open.checked_until = upto;
                obstacles = apply_update(&obstacles, add, remove)?;
                env = env.with_obstacles(obstacles.clone())?;
                planner_current = false;
            }
        }
        let new_goal = pending.iter().rev().find_map(|e| match e.kind {
            EventKind::GoalChange { goal } => Some(goal),
            _ => None,
        });
        let arrived = t_bar >= t_end - CLOCK_EPS;

        let trigger = if braking.is_some() {
            None
        } else if arrived {
            match new_goal {
                Some(g) => Some((ReplanReason::GoalChange, g)),
                None => tour.pop_front().map(|g| (ReplanReason::Arrival, g)),
            }
        } else {
            should_replan(&leg.trajectory, t_bar - t0, &pending, &env, radius)?.map(|r| (r, new_goal.unwrap_or(goal)))
        };

        let Some((reason, target)) = trigger else {
            if arrived {
                if braking.is_none() && !events.is_empty() {
                    // at rest on the goal until the next event
                    t_bar = t_bar.max(events.front().expect("non-empty").time);
                    continue;
                }
                close_piece(&mut log, &open, t_end, &env, radius)?;
                let end = log.legs[open.leg].trajectory.end().p;
                log.outcome = match braking {
                    Some(reason) => RunOutcome::Failed { time: t_end, reason },
                    None if (end - goal).norm() <= params.goal_tolerance => RunOutcome::Reached { time: t_end },
                    None => RunOutcome::Failed {
                        time: t_end,
                        reason: "stopped away from the goal".into(),
                    },
                };
                return Ok(log);
            }
            if braking.is_none() && planner_current && params.refine_budget > 0 {
                let before = planner.best_cost();
                planner.refine(params.refine_budget)?;
                log.refinements.push(Refinement {
                    time: t_bar,
                    leg: open.leg,
                    cost_before: before,
                    cost_after: planner.best_cost(),
                });
            }
            t_bar = (t_bar + params.commit_horizon).min(t_end);
            continue;
        };

        let splice = if arrived { t_end } else { (t_bar + params.commit_horizon).min(t_end) };
        let x_start = leg.trajectory.sample(splice - t0)?;
        let index = log.legs.len();
        let clock = Instant::now();
        let attempt = plan_leg(&env, &x_start, target, &pipeline, trial_seed(seed, index, 0));
        log.decisions.push(Decision {
            time: t_bar,
            splice_time: splice,
            reason,
            latency: clock.elapsed().as_secs_f64(),
            accepted: attempt.is_ok(),
            note: attempt.as_ref().err().cloned(),
        });
        match attempt {
            Ok((p, out)) => {
                close_piece(&mut log, &open, splice, &env, radius)?;
                push_leg(&mut log, splice, x_start, target, reason, out);
                open = Open {
                    leg: index,
                    checked_until: 0.0,
                    clear: true,
                };
                planner = p;
                planner_current = true;
                goal = target;
                t_bar = splice;
            }
            Err(note) => {
                braking = Some(format!("{reason:?} replan at {t_bar:.3} s failed: {note}"));
                t_bar = (t_bar + params.commit_horizon).min(t_end);
            }
        }
    }
    Ok(log)
}

fn push_leg<const D: usize>(log: &mut RunLog<D>, t0: f64, start: State<D>, goal: Point<D>, reason: ReplanReason, out: Outcome<D>) {
    let trajectory = out.trajectory.expect("successful outcome has a trajectory");
    log.legs.push(Leg {
        index: log.legs.len(),
        t0,
        start,
        goal,
        reason,
        path: out.path.nodes,
        steps: out.plan.steps(),
        h: out.plan.h,
        qp_iterations: out.solution.iterations,
        kkt_residual: out.solution.residuals.max(),
        report: out.report.expect("successful outcome has a report"),
        trajectory,
    });
}

fn close_piece<const D: usize>(log: &mut RunLog<D>, open: &Open, t_end: f64, env: &Environment<D>, radius: f64) -> Result<()> {
    let leg = &log.legs[open.leg];
    let local_end = t_end - leg.t0;
    let clear = open.clear && interval_is_free(&leg.trajectory, &env.inflate(radius)?, open.checked_until, local_end, CERTIFY_DEPTH);
    let piece = Piece {
        leg: open.leg,
        t_begin: leg.t0,
        t_end,
        start: leg.trajectory.sample(0.0)?,
        end: leg.trajectory.sample(local_end)?,
        verified: leg.report.passed && clear,
    };
    log.pieces.push(piece);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{Obstacle, StartState, Workspace};
    use nalgebra::Vector2;

    fn open_field(events: Vec<ScenarioEvent<2>>) -> Scenario<2> {
        Scenario {
            dim: 2,
            workspace: Workspace::new(Vector2::zeros(), Vector2::new(10.0, 10.0)).unwrap(),
            obstacles: vec![Obstacle::Sphere {
                center: Vector2::new(5.0, 5.0),
                radius: 0.5,
            }],
            start: StartState {
                p: Vector2::new(1.0, 1.0),
                v: Vector2::zeros(),
                a: Vector2::zeros(),
            },
            goal: Vector2::new(9.0, 9.0),
            goals: vec![],
            ell: 0.05,
            a_max: 20.0,
            robot_radius: 0.1,
            seed: 0,
            events,
        }
    }

    fn quick() -> RunParams {
        RunParams {
            planner: PlannerConfig {
                iters_per_round: 600,
                ..Default::default()
            },
            ..Default::default()
        }
    }

    #[test]
    fn no_events_gives_one_piece() {
        let log = run(&open_field(vec![]), &quick(), 3).unwrap();
        assert!(log.reached(), "{:?}", log.outcome);
        assert_eq!(log.pieces.len(), 1);
        assert_eq!(log.decisions.len(), 1);
        assert!(log.all_verified());
        assert!(!log.refinements.is_empty());
    }

    #[test]
    fn goal_change_splices_continuously() {
        let ev = ScenarioEvent {
            time: 2.0,
            kind: EventKind::GoalChange {
                goal: Vector2::new(9.0, 1.0),
            },
        };
        let log = run(&open_field(vec![ev]), &quick(), 3).unwrap();
        assert!(log.reached(), "{:?}", log.outcome);
        let replans: Vec<_> = log.decisions.iter().filter(|d| d.reason != ReplanReason::Initial).collect();
        assert_eq!(replans.len(), 1);
        assert_eq!(replans[0].reason, ReplanReason::GoalChange);
        assert!((replans[0].splice_time - 2.5).abs() < 1e-12);
        assert_eq!(log.pieces.len(), 2);
        assert!(log.max_splice_gap() < 1e-9, "{:?}", log.splice_gaps());
        assert!(log.all_verified());
        // the spliced leg starts in motion
        assert!(log.legs[1].start.v.norm() > 0.1);
        let end = log.legs[1].trajectory.end().p;
        assert!((end - Vector2::new(9.0, 1.0)).norm() < 1e-6);
    }

    #[test]
    fn unobstructive_update_keeps_the_plan() {
        let ev = ScenarioEvent {
            time: 1.0,
            kind: EventKind::ObstacleUpdate {
                add: vec![Obstacle::Sphere {
                    center: Vector2::new(9.5, 0.5),
                    radius: 0.2,
                }],
                remove: vec![],
            },
        };
        let log = run(&open_field(vec![ev]), &quick(), 3).unwrap();
        assert!(log.reached());
        assert_eq!(log.pieces.len(), 1);
    }

    #[test]
    fn blocking_update_forces_a_detour() {
        let base = run(&open_field(vec![]), &quick(), 3).unwrap();
        // drop a disc on the planned trajectory well ahead of the robot
        let leg = &base.legs[0];
        let p = leg.trajectory.sample(0.7 * leg.trajectory.duration()).unwrap().p;
        let ev = ScenarioEvent {
            time: 1.0,
            kind: EventKind::ObstacleUpdate {
                add: vec![Obstacle::Sphere { center: p, radius: 0.4 }],
                remove: vec![],
            },
        };
        let log = run(&open_field(vec![ev]), &quick(), 3).unwrap();
        assert!(log.reached(), "{:?}", log.outcome);
        assert_eq!(log.decisions[1].reason, ReplanReason::Blocked);
        assert!(log.max_splice_gap() < 1e-9);
        assert!(log.all_verified());
    }

    #[test]
    fn should_replan_is_quiet_without_events() {
        let log = run(&open_field(vec![]), &quick(), 3).unwrap();
        let env = open_field(vec![]).environment().unwrap();
        let r = should_replan(&log.legs[0].trajectory, 0.0, &[], &env, 0.1).unwrap();
        assert_eq!(r, None);
    }

    #[test]
    fn unreachable_goal_change_brakes_and_fails() {
        // new goal sits inside the obstacle
        let ev = ScenarioEvent {
            time: 1.0,
            kind: EventKind::GoalChange {
                goal: Vector2::new(5.0, 5.0),
            },
        };
        let log = run(&open_field(vec![ev]), &quick(), 3).unwrap();
        assert!(matches!(log.outcome, RunOutcome::Failed { .. }));
        assert!(!log.decisions[1].accepted);
        // the current leg is finished, ending at rest
        assert_eq!(log.pieces.len(), 1);
        let last = &log.pieces[0];
        assert!(last.end.v.norm() < 1e-9);
    }
}
