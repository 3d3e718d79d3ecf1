//! Forest density sweeps, corridor-width sweeps and their summaries.

use std::io::Write;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::env::{poisson_forest, string_scene, Environment, ForestParams, Workspace};
use crate::error::{invalid, Error, Result};
use crate::geometry::Point;
use crate::pipeline::{plan_trajectory, Outcome, PipelineParams};
use crate::qp::QpStatus;

/// One benchmark trial. Flags are stored as 0/1 so that group means are
/// rates; quantities that need a trajectory are empty without one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    /// `"density"` or `"ell"`.
    pub sweep: String,
    /// Swept value: trees per m² or corridor half-width (m).
    pub value: f64,
    pub trial: usize,
    pub seed: u64,
    pub path_found: u8,
    pub qp_optimal: u8,
    pub verified: u8,
    pub success: u8,
    pub path_length: Option<f64>,
    pub trajectory_length: Option<f64>,
    pub max_speed: Option<f64>,
    pub max_accel: Option<f64>,
    pub max_separation: Option<f64>,
    pub analytic_separation: Option<f64>,
    pub separation_bound: Option<f64>,
    pub kkt_residual: Option<f64>,
    pub steps: Option<usize>,
    pub qp_variables: Option<usize>,
    pub qp_iterations: Option<usize>,
    /// Path search plus corridor and QP, wall clock (s).
    pub planning_time: Option<f64>,
    pub qp_time: Option<f64>,
}

impl TrialRecord {
    fn empty(sweep: &str, value: f64, trial: usize, seed: u64) -> Self {
        Self {
            sweep: sweep.to_string(),
            value,
            trial,
            seed,
            path_found: 0,
            qp_optimal: 0,
            verified: 0,
            success: 0,
            path_length: None,
            trajectory_length: None,
            max_speed: None,
            max_accel: None,
            max_separation: None,
            analytic_separation: None,
            separation_bound: None,
            kkt_residual: None,
            steps: None,
            qp_variables: None,
            qp_iterations: None,
            planning_time: None,
            qp_time: None,
        }
    }

    fn fill<const D: usize>(&mut self, out: &Outcome<D>) {
        self.path_found = 1;
        self.path_length = Some(out.path.cost());
        self.steps = Some(out.plan.steps());
        self.qp_variables = Some((out.plan.steps() + 1) * D);
        self.qp_iterations = Some(out.solution.iterations);
        self.kkt_residual = Some(out.solution.residuals.max());
        self.qp_optimal = (out.solution.status == QpStatus::Optimal) as u8;
        self.planning_time = Some(out.times.planning());
        self.qp_time = Some(out.times.qp);
        self.separation_bound = Some(out.plan.separation_bound());
        if let (Some(tr), Some(rep)) = (&out.trajectory, &out.report) {
            self.trajectory_length = Some(tr.length());
            self.max_speed = Some(tr.max_speed_inf());
            self.max_accel = Some(tr.max_accel_inf());
            self.max_separation = Some(rep.max_separation);
            self.analytic_separation = Some(rep.analytic_separation);
            self.verified = rep.passed as u8;
        }
        self.success = (self.qp_optimal == 1 && self.verified == 1) as u8;
    }
}

/// Deterministic per-trial seed.
pub fn trial_seed(master: u64, group: usize, trial: usize) -> u64 {
    let mut z = master ^ ((group as u64) << 40) ^ (trial as u64).wrapping_mul(0x9e37_79b9);
    // splitmix64 finaliser
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ForestSweep {
    pub pipeline: PipelineParams,
    /// Cube side (m).
    pub side: f64,
    pub min_start_goal: f64,
    pub trees: ForestParams,
    /// Start/goal draws per forest before the forest is redrawn.
    pub endpoint_draws: usize,
}

impl Default for ForestSweep {
    fn default() -> Self {
        Self {
            pipeline: PipelineParams::default(),
            side: 10.0,
            min_start_goal: 8.0,
            trees: ForestParams::default(),
            endpoint_draws: 2000,
        }
    }
}

/// Draws free points `a`, `b` with `|a − b| ≥ min_gap`.
pub fn sample_endpoints<const D: usize>(
    env: &Environment<D>,
    min_gap: f64,
    draws: usize,
    rng: &mut impl Rng,
) -> Option<(Point<D>, Point<D>)> {
    let ws = env.workspace();
    let mut free = || {
        (0..draws).find_map(|_| {
            let p = Point::<D>::from_fn(|i, _| rng.random_range(ws.lower[i]..ws.upper[i]));
            env.point_free(&p).then_some(p)
        })
    };
    for _ in 0..draws {
        let a = free()?;
        let b = free()?;
        if (a - b).norm() >= min_gap {
            return Some((a, b));
        }
    }
    None
}

/// Runs `trials` forests per density. Trials run in parallel and come back
/// ordered by (density, trial).
pub fn density_sweep(densities: &[f64], trials: usize, sweep: &ForestSweep, seed: u64) -> Result<Vec<TrialRecord>> {
    if densities.iter().any(|d| !(0.1..=4.0).contains(d)) {
        return invalid("density_sweep: densities must lie in [0.1, 4.0]");
    }
    let jobs: Vec<(usize, usize)> = (0..densities.len())
        .flat_map(|g| (0..trials).map(move |t| (g, t)))
        .collect();
    jobs.par_iter()
        .map(|&(g, t)| forest_trial(densities[g], t, trial_seed(seed, g, t), sweep))
        .collect()
}

fn forest_trial(density: f64, trial: usize, seed: u64, sweep: &ForestSweep) -> Result<TrialRecord> {
    let ws = Workspace::new(Vector3::zeros(), Vector3::repeat(sweep.side))?;
    let margin = sweep.pipeline.inflation(3);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..100 {
        let forest = poisson_forest(density, &ws, sweep.trees, rng.random())?;
        let inflated = forest.inflate(margin)?;
        let Some((start, goal)) = sample_endpoints(&inflated, sweep.min_start_goal, sweep.endpoint_draws, &mut rng) else {
            continue;
        };
        let mut rec = TrialRecord::empty("density", density, trial, seed);
        match plan_trajectory(&forest, start, goal, &sweep.pipeline, rng.random()) {
            Ok(out) => rec.fill(&out),
            Err(Error::PlannerFailure(_)) => {}
            Err(e) => return Err(e),
        }
        return Ok(rec);
    }
    Err(Error::PlannerFailure(format!("no admissible start/goal pair at density {density}")))
}

#[derive(Clone, Debug, PartialEq)]
pub struct EllSweep {
    pub pipeline: PipelineParams,
    /// Seed of the fixed obstacle scene.
    pub scene_seed: u64,
    /// Start and goal are drawn from slabs at either end of the first axis.
    pub start_slab: (f64, f64),
    pub goal_slab: (f64, f64),
}

impl Default for EllSweep {
    fn default() -> Self {
        Self {
            pipeline: PipelineParams {
                robot_radius: 0.035,
                ..Default::default()
            },
            scene_seed: 7,
            start_slab: (0.15, 0.45),
            goal_slab: (3.55, 3.85),
        }
    }
}

/// Fixed string scene; each trial draws one start/goal pair, free for the
/// widest corridor, and plans it for every `ℓ`.
pub fn ell_sweep(ells: &[f64], trials: usize, sweep: &EllSweep, seed: u64) -> Result<Vec<TrialRecord>> {
    if ells.is_empty() || ells.iter().any(|l| !(*l > 0.0)) {
        return invalid("ell_sweep: corridor widths must be positive");
    }
    let env = string_scene(sweep.scene_seed)?;
    let widest = ells.iter().copied().fold(0.0, f64::max);
    let strictest = env.inflate(sweep.pipeline.robot_radius + 1.5 * widest * 3f64.sqrt())?;
    let mut pairs = Vec::with_capacity(trials);
    for t in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(seed, usize::MAX >> 24, t));
        let pair = (0..10_000)
            .find_map(|_| {
                let ws = env.workspace();
                let mut draw = |slab: (f64, f64)| {
                    Vector3::new(
                        rng.random_range(slab.0..slab.1),
                        rng.random_range(ws.lower[1] + 0.2..ws.upper[1] - 0.2),
                        rng.random_range(ws.lower[2] + 0.2..ws.upper[2] - 0.2),
                    )
                };
                let (a, b) = (draw(sweep.start_slab), draw(sweep.goal_slab));
                (strictest.point_free(&a) && strictest.point_free(&b)).then_some((a, b))
            })
            .ok_or_else(|| Error::PlannerFailure("ell_sweep: no free start/goal pair".into()))?;
        pairs.push(pair);
    }
    let jobs: Vec<(usize, usize)> = (0..ells.len()).flat_map(|g| (0..trials).map(move |t| (g, t))).collect();
    jobs.par_iter()
        .map(|&(g, t)| {
            let s = trial_seed(seed, g, t);
            let params = PipelineParams {
                ell: ells[g],
                ..sweep.pipeline.clone()
            };
            let mut rec = TrialRecord::empty("ell", ells[g], t, s);
            match plan_trajectory(&env, pairs[t].0, pairs[t].1, &params, s) {
                Ok(out) => rec.fill(&out),
                Err(Error::PlannerFailure(_)) => {}
                Err(e) => return Err(e),
            }
            Ok(rec)
        })
        .collect()
}

/// Per-group means; flag means are rates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub sweep: String,
    pub value: f64,
    pub trials: usize,
    pub path_found_rate: f64,
    pub qp_optimal_rate: f64,
    pub verified_rate: f64,
    pub success_rate: f64,
    /// Successes among trials with a path.
    pub success_given_path: f64,
    pub mean_path_length: Option<f64>,
    pub mean_trajectory_length: Option<f64>,
    pub mean_max_speed: Option<f64>,
    pub mean_max_accel: Option<f64>,
    pub max_separation: Option<f64>,
    pub max_kkt_residual: Option<f64>,
    pub mean_steps: Option<f64>,
    pub mean_planning_time: Option<f64>,
}

fn mean_of(xs: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = xs.flatten().collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

fn max_of(xs: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    xs.flatten().fold(None, |m, x| Some(m.map_or(x, |m: f64| m.max(x))))
}

/// Groups by `(sweep, value)` in order of first appearance.
pub fn summarize(records: &[TrialRecord]) -> Vec<GroupSummary> {
    let mut keys: Vec<(String, f64)> = Vec::new();
    for r in records {
        if !keys.iter().any(|(s, v)| *s == r.sweep && *v == r.value) {
            keys.push((r.sweep.clone(), r.value));
        }
    }
    keys.into_iter()
        .map(|(sweep, value)| {
            let g: Vec<&TrialRecord> = records.iter().filter(|r| r.sweep == sweep && r.value == value).collect();
            let n = g.len() as f64;
            let rate = |f: fn(&TrialRecord) -> u8| g.iter().map(|r| f(r) as f64).sum::<f64>() / n;
            let found = g.iter().filter(|r| r.path_found == 1).count();
            let ok = g.iter().filter(|r| r.success == 1).count();
            GroupSummary {
                trials: g.len(),
                path_found_rate: rate(|r| r.path_found),
                qp_optimal_rate: rate(|r| r.qp_optimal),
                verified_rate: rate(|r| r.verified),
                success_rate: rate(|r| r.success),
                success_given_path: if found > 0 { ok as f64 / found as f64 } else { 0.0 },
                mean_path_length: mean_of(g.iter().map(|r| r.path_length)),
                mean_trajectory_length: mean_of(g.iter().map(|r| r.trajectory_length)),
                mean_max_speed: mean_of(g.iter().map(|r| r.max_speed)),
                mean_max_accel: mean_of(g.iter().map(|r| r.max_accel)),
                max_separation: max_of(g.iter().map(|r| r.max_separation)),
                max_kkt_residual: max_of(g.iter().map(|r| r.kkt_residual)),
                mean_steps: mean_of(g.iter().map(|r| r.steps.map(|k| k as f64))),
                mean_planning_time: mean_of(g.iter().map(|r| r.planning_time)),
                sweep,
                value,
            }
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EmitFormat {
    /// Trial rows followed by one `mean` row per group.
    Csv,
    /// Whitespace-separated group summaries for plotting.
    PlotData,
}

pub const CSV_COLUMNS: [&str; 23] = [
    "row",
    "sweep",
    "value",
    "trial",
    "seed",
    "path_found",
    "qp_optimal",
    "verified",
    "success",
    "path_length",
    "trajectory_length",
    "max_speed",
    "max_accel",
    "max_separation",
    "analytic_separation",
    "separation_bound",
    "kkt_residual",
    "steps",
    "qp_variables",
    "qp_iterations",
    "planning_time",
    "qp_time",
    "trials",
];

pub const PLOT_COLUMNS: [&str; 9] = [
    "value",
    "trials",
    "path_found_rate",
    "success_given_path",
    "mean_path_length",
    "mean_trajectory_length",
    "mean_max_speed",
    "max_separation",
    "mean_planning_time",
];

fn cell<T: ToString>(x: Option<T>) -> String {
    x.map_or_else(String::new, |v| v.to_string())
}

/// Writes records. In CSV form the `mean` rows hold per-group means, with
/// flag columns as rates and `trials` as the group size.
pub fn emit(records: &[TrialRecord], format: EmitFormat, out: impl Write) -> Result<()> {
    match format {
        EmitFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(CSV_COLUMNS)?;
            for r in records {
                w.write_record([
                    "trial".into(),
                    r.sweep.clone(),
                    r.value.to_string(),
                    r.trial.to_string(),
                    r.seed.to_string(),
                    r.path_found.to_string(),
                    r.qp_optimal.to_string(),
                    r.verified.to_string(),
                    r.success.to_string(),
                    cell(r.path_length),
                    cell(r.trajectory_length),
                    cell(r.max_speed),
                    cell(r.max_accel),
                    cell(r.max_separation),
                    cell(r.analytic_separation),
                    cell(r.separation_bound),
                    cell(r.kkt_residual),
                    cell(r.steps),
                    cell(r.qp_variables),
                    cell(r.qp_iterations),
                    cell(r.planning_time),
                    cell(r.qp_time),
                    String::new(),
                ])?;
            }
            for s in summarize(records) {
                let g: Vec<&TrialRecord> = records.iter().filter(|r| r.sweep == s.sweep && r.value == s.value).collect();
                let m = |f: fn(&TrialRecord) -> Option<f64>| cell(mean_of(g.iter().map(|r| f(r))));
                w.write_record([
                    "mean".into(),
                    s.sweep.clone(),
                    s.value.to_string(),
                    String::new(),
                    String::new(),
                    s.path_found_rate.to_string(),
                    s.qp_optimal_rate.to_string(),
                    s.verified_rate.to_string(),
                    s.success_rate.to_string(),
                    m(|r| r.path_length),
                    m(|r| r.trajectory_length),
                    m(|r| r.max_speed),
                    m(|r| r.max_accel),
                    m(|r| r.max_separation),
                    m(|r| r.analytic_separation),
                    m(|r| r.separation_bound),
                    m(|r| r.kkt_residual),
                    m(|r| r.steps.map(|k| k as f64)),
                    m(|r| r.qp_variables.map(|k| k as f64)),
                    m(|r| r.qp_iterations.map(|k| k as f64)),
                    m(|r| r.planning_time),
                    m(|r| r.qp_time),
                    s.trials.to_string(),
                ])?;
            }
            w.flush()?;
        }
        EmitFormat::PlotData => {
            let mut out = out;
            writeln!(out, "# {}", PLOT_COLUMNS.join(" "))?;
            for s in summarize(records) {
                let nan = |x: Option<f64>| x.map_or_else(|| "nan".to_string(), |v| v.to_string());
                writeln!(
                    out,
                    "{} {} {} {} {} {} {} {} {}",
                    s.value,
                    s.trials,
                    s.path_found_rate,
                    s.success_given_path,
                    nan(s.mean_path_length),
                    nan(s.mean_trajectory_length),
                    nan(s.mean_max_speed),
                    nan(s.max_separation),
                    nan(s.mean_planning_time),
                )?;
            }
        }
    }
    Ok(())
}

/// Verdict of one acceptance-gated assertion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Gate {
    pub fn new(name: &str, passed: bool, detail: String) -> Self {
        Self {
            name: name.to_string(),
            passed,
            detail,
        }
    }
}

impl std::fmt::Display for Gate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} {}: {}", if self.passed { "PASS" } else { "FAIL" }, self.name, self.detail)
    }
}

/// Largest accepted scaled KKT residual on benchmark solves.
pub const KKT_LIMIT: f64 = 1e-8;
/// Slack on the separation bound (m).
pub const SEPARATION_SLACK: f64 = 1e-9;
/// Rank correlation the density timing trend must exceed.
pub const TIMING_RHO: f64 = 0.8;

/// Every trial that found a path ended with an optimal QP and a verified
/// trajectory.
pub fn feasibility_gate(records: &[TrialRecord]) -> Gate {
    let found: Vec<_> = records.iter().filter(|r| r.path_found == 1).collect();
    let ok = found.iter().filter(|r| r.qp_optimal == 1 && r.verified == 1).count();
    let infeasible = found.iter().filter(|r| r.qp_optimal == 0).count();
    Gate::new(
        "feasibility",
        !found.is_empty() && ok == found.len(),
        format!("{ok}/{} trials with a path solved and verified ({infeasible} QP failures, {} without a path)", found.len(), records.len() - found.len()),
    )
}

/// Sampled and analytic separation stay within `1.5·ℓ·√d`.
pub fn separation_gate(records: &[TrialRecord]) -> Gate {
    let mut worst = f64::NEG_INFINITY;
    let mut n = 0;
    for r in records {
        if let (Some(b), Some(s), Some(a)) = (r.separation_bound, r.max_separation, r.analytic_separation) {
            worst = worst.max(s.max(a) - b);
            n += 1;
        }
    }
    Gate::new(
        "separation bound",
        n > 0 && worst <= SEPARATION_SLACK,
        format!("{n} trajectories, largest excess over the bound {worst:.3e} m"),
    )
}

pub fn kkt_gate(records: &[TrialRecord]) -> Gate {
    let res: Vec<f64> = records.iter().filter(|r| r.qp_optimal == 1).filter_map(|r| r.kkt_residual).collect();
    let worst = res.iter().copied().fold(0.0, f64::max);
    Gate::new(
        "kkt residual",
        !res.is_empty() && worst <= KKT_LIMIT,
        format!("{} solves, largest residual {worst:.3e}", res.len()),
    )
}

/// Spearman correlation between the swept value and the group mean of
/// `quantity` must exceed `threshold`.
pub fn trend_gate(name: &str, records: &[TrialRecord], quantity: fn(&GroupSummary) -> Option<f64>, threshold: f64) -> Gate {
    let groups = summarize(records);
    let pairs: Vec<(f64, f64)> = groups.iter().filter_map(|g| quantity(g).map(|q| (g.value, q))).collect();
    let (x, y): (Vec<f64>, Vec<f64>) = pairs.iter().copied().unzip();
    let rho = spearman(&x, &y);
    let shown: Vec<String> = pairs.iter().map(|(v, q)| format!("{v}:{q:.4}")).collect();
    Gate::new(
        name,
        rho.is_some_and(|r| r > threshold),
        format!("rho {} (need > {threshold}) over [{}]", rho.map_or("undefined".into(), |r| format!("{r:.3}")), shown.join(", ")),
    )
}

/// Gates for a density sweep; the timing trend needs three densities.
pub fn density_gates(records: &[TrialRecord]) -> Vec<Gate> {
    let mut gates = vec![feasibility_gate(records), separation_gate(records), kkt_gate(records)];
    if summarize(records).len() >= 3 {
        gates.push(trend_gate("planning time trend", records, |g| g.mean_planning_time, TIMING_RHO));
    }
    gates
}

/// Gates for a corridor-width sweep.
pub fn ell_gates(records: &[TrialRecord]) -> Vec<Gate> {
    vec![
        feasibility_gate(records),
        separation_gate(records),
        kkt_gate(records),
        trend_gate("path length trend", records, |g| g.mean_path_length, 0.0),
        trend_gate("max speed trend", records, |g| g.mean_max_speed, 0.0),
    ]
}

/// Spearman rank correlation with average ranks for ties. `None` when
/// either side is constant or the lengths differ.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    (sxx > 0.0 && syy > 0.0).then(|| sxy / (sxx * syy).sqrt())
}

fn ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut r = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spearman_known_values() {
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]), Some(1.0));
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]), Some(-1.0));
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[5.0, 5.0, 5.0]), None);
        // ties share the average rank
        assert_eq!(ranks(&[2.0, 1.0, 2.0, 3.0]), vec![2.5, 1.0, 2.5, 4.0]);
        let r = spearman(&[1.0, 2.0, 3.0, 4.0, 5.0], &[2.0, 1.0, 4.0, 3.0, 5.0]).unwrap();
        assert!((r - 0.8).abs() < 1e-12);
    }

    #[test]
    fn empty_records_give_header_only() {
        let mut buf = Vec::new();
        emit(&[], EmitFormat::Csv, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().trim_end(), CSV_COLUMNS.join(","));
    }

    #[test]
    fn trial_seeds_differ() {
        let mut s: Vec<u64> = (0..50).flat_map(|t| (0..6).map(move |g| trial_seed(1, g, t))).collect();
        s.sort();
        s.dedup();
        assert_eq!(s.len(), 300);
    }
}
