//! Path search, corridor, QP and verification chained together.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::corridor::{build_waypoints, witness_discrete, CorridorPlan, State};
use crate::env::Environment;
use crate::error::{invalid, Result};
use crate::geometry::Point;
use crate::qp::{assemble, solve, QpInstance, QpSolution, QpStatus, SolverSettings};
use crate::sampler::{Path, Planner, PlannerConfig};
use crate::trajectory::{verify, Trajectory, VerificationReport, VerifyOptions};

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineParams {
    /// Corridor half-width (m).
    pub ell: f64,
    pub a_max: f64,
    pub robot_radius: f64,
    pub planner: PlannerConfig,
    pub solver: SolverSettings,
}

impl Default for PipelineParams {
    fn default() -> Self {
        Self {
            ell: 0.05,
            a_max: 20.0,
            robot_radius: 0.0,
            planner: PlannerConfig::default(),
            solver: SolverSettings::default(),
        }
    }
}

impl PipelineParams {
    /// Planning margin: robot radius plus the trajectory deviation bound.
    pub fn inflation(&self, dim: usize) -> f64 {
        self.robot_radius + 1.5 * self.ell * (dim as f64).sqrt()
    }
}

/// Wall-clock seconds per stage.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimes {
    pub path: f64,
    pub corridor: f64,
    pub qp: f64,
    pub verify: f64,
}

impl StageTimes {
    /// Path search plus corridor and QP; verification is excluded.
    pub fn planning(&self) -> f64 {
        self.path + self.corridor + self.qp
    }
}

#[derive(Clone, Debug)]
pub struct Outcome<const D: usize> {
    pub path: Path<D>,
    pub plan: CorridorPlan<D>,
    pub instance: QpInstance,
    pub solution: QpSolution,
    /// Present when the QP solved to optimality.
    pub trajectory: Option<Trajectory<D>>,
    pub report: Option<VerificationReport>,
    pub times: StageTimes,
}

impl<const D: usize> Outcome<D> {
    pub fn succeeded(&self) -> bool {
        self.solution.status == QpStatus::Optimal && self.report.as_ref().is_some_and(|r| r.passed)
    }
}

/// Corridor, QP and verification for a given path, from `start` to rest at
/// the path's end. Warm-starts from the constructive witness when `start`
/// is at rest on the path's first node.
pub fn trajectory_along<const D: usize>(
    env_raw: &Environment<D>,
    path: Path<D>,
    start: &State<D>,
    params: &PipelineParams,
) -> Result<Outcome<D>> {
    let mut times = StageTimes::default();
    let clock = Instant::now();
    let plan = build_waypoints(&path, params.ell, params.a_max)?;
    let goal = State::at_rest(*plan.goal());
    let instance = assemble(&plan, start, &goal)?;
    let warm = witness_discrete(&plan, start)
        .ok()
        .map(|w| w.iter().map(|s| s.a.iter().copied().collect::<Vec<f64>>()).collect::<Vec<_>>());
    times.corridor = clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    let solution = solve(&instance, &params.solver, warm.as_deref());
    times.qp = clock.elapsed().as_secs_f64();

    let (trajectory, report) = if solution.status == QpStatus::Optimal {
        let clock = Instant::now();
        let traj = Trajectory::new(start, &solution.accelerations_as::<D>(), plan.h)?;
        let options = VerifyOptions {
            robot_radius: params.robot_radius,
            ..Default::default()
        };
        let report = verify(&traj, &plan.path, &plan, env_raw, &options)?;
        times.verify = clock.elapsed().as_secs_f64();
        (Some(traj), Some(report))
    } else {
        (None, None)
    };
    Ok(Outcome {
        path,
        plan,
        instance,
        solution,
        trajectory,
        report,
        times,
    })
}

/// Full pipeline from rest at `start` to rest at `goal`. Errors when the
/// sampler finds no path; QP or verification failures are reported in the
/// outcome.
pub fn plan_trajectory<const D: usize>(
    env_raw: &Environment<D>,
    start: Point<D>,
    goal: Point<D>,
    params: &PipelineParams,
    seed: u64,
) -> Result<Outcome<D>> {
    if !(params.ell > 0.0 && params.a_max > 0.0 && params.robot_radius >= 0.0) {
        return invalid("pipeline: need ell > 0, a_max > 0, robot_radius >= 0");
    }
    let inflated = env_raw.inflate(params.inflation(D))?;
    let clock = Instant::now();
    let path = Planner::new(&inflated, start, goal, params.planner.clone(), seed)?.plan()?;
    let path_time = clock.elapsed().as_secs_f64();
    let mut out = trajectory_along(env_raw, path, &State::at_rest(start), params)?;
    out.times.path = path_time;
    Ok(out)
}
