//! Continuous trajectories from per-step constant accelerations.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::corridor::{CorridorPlan, State};
use crate::env::Environment;
use crate::error::{invalid, Result};
use crate::geometry::{inf_norm, point_polyline_distance, Point};

/// States at the step boundaries. `x[k].a` is the acceleration held on step
/// `k`; the last acceleration is only recorded, not integrated.
pub fn integrate<const D: usize>(start: &State<D>, accels: &[Point<D>], h: f64) -> Vec<State<D>> {
    let mut out = Vec::with_capacity(accels.len());
    let (mut p, mut v) = (start.p, start.v);
    for a in accels {
        out.push(State { p, v, a: *a });
        p += v * h + a * (0.5 * h * h);
        v += a * h;
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory<const D: usize> {
    pub h: f64,
    /// Step-boundary states `x[0..=K]`.
    knots: Vec<State<D>>,
}

impl<const D: usize> Trajectory<D> {
    /// `accelerations` holds `a[0..=K]`; at least one entry.
    pub fn new(start: &State<D>, accelerations: &[Point<D>], h: f64) -> Result<Self> {
        if accelerations.is_empty() || !(h > 0.0) {
            return invalid("trajectory needs accelerations and h > 0");
        }
        if accelerations.iter().any(|a| a.iter().any(|x| !x.is_finite())) {
            return invalid("trajectory accelerations must be finite");
        }
        Ok(Self {
            h,
            knots: integrate(start, accelerations, h),
        })
    }

    pub fn steps(&self) -> usize {
        self.knots.len() - 1
    }

    pub fn duration(&self) -> f64 {
        self.steps() as f64 * self.h
    }

    pub fn knots(&self) -> &[State<D>] {
        &self.knots
    }

    pub fn start(&self) -> &State<D> {
        &self.knots[0]
    }

    pub fn end(&self) -> &State<D> {
        self.knots.last().expect("non-empty")
    }

    /// Step index and offset for time `t`, exact at grid times.
    fn locate(&self, t: f64) -> (usize, f64) {
        let kk = self.steps();
        let r = t / self.h;
        let n = r.round();
        if (r - n).abs() <= 1e-9 && n >= 0.0 {
            let k = (n as usize).min(kk);
            return (k, 0.0);
        }
        let k = (r.floor().max(0.0) as usize).min(kk);
        (k, (t - k as f64 * self.h).max(0.0))
    }

    /// State at time `t ∈ [0, t_f]`; acceleration is right-continuous.
    pub fn sample(&self, t: f64) -> Result<State<D>> {
        let tf = self.duration();
        let slack = 1e-12 * (1.0 + tf);
        if !(t >= -slack && t <= tf + slack) {
            return invalid(format!("sample time {t} outside [0, {tf}]"));
        }
        let (k, tau) = self.locate(t.clamp(0.0, tf));
        Ok(self.state_in_step(k, tau))
    }

    fn state_in_step(&self, k: usize, tau: f64) -> State<D> {
        let x = &self.knots[k];
        if tau == 0.0 {
            return *x;
        }
        State {
            p: x.p + x.v * tau + x.a * (0.5 * tau * tau),
            v: x.v + x.a * tau,
            a: x.a,
        }
    }

    /// Jerk between steps, `(a[k+1] − a[k]) / h`.
    pub fn jerk(&self, k: usize) -> Point<D> {
        (self.knots[k + 1].a - self.knots[k].a) / self.h
    }

    pub fn max_speed_inf(&self) -> f64 {
        // velocity is affine within a step, so its extremes sit on knots
        self.knots.iter().map(|x| inf_norm(&x.v)).fold(0.0, f64::max)
    }

    pub fn max_accel_inf(&self) -> f64 {
        self.knots.iter().map(|x| inf_norm(&x.a)).fold(0.0, f64::max)
    }

    /// Arc length by 5-point Gauss-Legendre per step.
    pub fn length(&self) -> f64 {
        const NODES: [f64; 5] = [
            0.0,
            -0.538_469_310_105_683_1,
            0.538_469_310_105_683_1,
            -0.906_179_845_938_664,
            0.906_179_845_938_664,
        ];
        const WEIGHTS: [f64; 5] = [
            0.568_888_888_888_888_9,
            0.478_628_670_499_366_5,
            0.478_628_670_499_366_5,
            0.236_926_885_056_189_1,
            0.236_926_885_056_189_1,
        ];
        let h = self.h;
        self.knots[..self.steps()]
            .iter()
            .map(|x| {
                NODES
                    .iter()
                    .zip(WEIGHTS)
                    .map(|(n, w)| w * (x.v + x.a * (0.5 * h * (1.0 + n))).norm())
                    .sum::<f64>()
                    * 0.5
                    * h
            })
            .sum()
    }

    /// Exact per-axis range of the position on `[k·h + t0, k·h + t1]`.
    fn arc_bounds(&self, k: usize, t0: f64, t1: f64) -> (Point<D>, Point<D>) {
        let x = &self.knots[k];
        let mut lo = Point::<D>::zeros();
        let mut hi = Point::<D>::zeros();
        for i in 0..D {
            let at = |t: f64| x.p[i] + x.v[i] * t + 0.5 * x.a[i] * t * t;
            let (mut a, mut b) = (at(t0), at(t1));
            if a > b {
                std::mem::swap(&mut a, &mut b);
            }
            if x.a[i] != 0.0 {
                let ts = -x.v[i] / x.a[i];
                if ts > t0 && ts < t1 {
                    let e = at(ts);
                    a = a.min(e);
                    b = b.max(e);
                }
            }
            lo[i] = a;
            hi[i] = b;
        }
        (lo, hi)
    }

    /// Time series `t, x.., v.., a..` sampled every `dt`, with time offset
    /// `t0` added to the first column. The final knot is always written.
    pub fn write_csv(&self, out: impl Write, dt: f64, t0: f64) -> Result<()> {
        self.write_csv_span(out, dt, t0, 0.0, self.duration())
    }

    /// As [`Trajectory::write_csv`], restricted to local times `from..=to`.
    pub fn write_csv_span(&self, out: impl Write, dt: f64, t0: f64, from: f64, to: f64) -> Result<()> {
        if !(dt > 0.0) {
            return invalid("csv sampling interval must be > 0");
        }
        if !(0.0 <= from && from <= to && to <= self.duration() + 1e-12) {
            return invalid("csv span must lie inside the trajectory");
        }
        let mut w = csv::Writer::from_writer(out);
        let axes = ["x", "y", "z"];
        let mut header = vec!["t".to_string()];
        for prefix in ["p", "v", "a"] {
            header.extend((0..D).map(|i| format!("{prefix}{}", axes[i])));
        }
        w.write_record(&header)?;
        let tf = to.min(self.duration());
        let n = ((tf - from) / dt).floor() as usize;
        let mut times: Vec<f64> = (0..=n).map(|i| from + i as f64 * dt).collect();
        if times.last().map_or(true, |t| tf - t > 1e-12) {
            times.push(tf);
        }
        for t in times {
            let s = self.sample(t)?;
            let mut row = vec![format!("{}", t0 + t)];
            for v in [&s.p, &s.v, &s.a] {
                row.extend(v.iter().map(|x| format!("{x}")));
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Distance from `p(t)` to the polyline.
pub fn separation<const D: usize>(traj: &Trajectory<D>, path: &[Point<D>], t: f64) -> Result<f64> {
    Ok(point_polyline_distance(&traj.sample(t)?.p, path))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    /// Largest sampled distance to the path (m).
    pub max_separation: f64,
    /// Largest per-step analytic upper bound on that distance (m).
    pub analytic_separation: f64,
    /// `1.5·ℓ·√d` (m).
    pub bound: f64,
    /// Largest sampled separation on steps through a doubled node.
    pub corner_max_separation: f64,
    /// Largest `‖p[k] − ϖ[k]‖∞ − ℓ`, clipped at zero.
    pub position_excess: f64,
    pub velocity_excess: f64,
    pub acceleration_excess: f64,
    /// Error of the end state against the corridor's last waypoint.
    pub terminal_error: f64,
    /// `p[k] ∈ Ω[k]` within tolerance, per `k`.
    pub in_region: Vec<bool>,
    /// Some sample was not strictly free.
    pub collision: bool,
    /// Every step's arc was certified free by bounding boxes.
    pub certified: bool,
    /// Smallest sampled clearance against the robot-inflated obstacles.
    pub min_clearance: f64,
    pub passed: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VerifyOptions {
    /// Sampling interval; defaults to `h/50`.
    pub dt: Option<f64>,
    pub robot_radius: f64,
    pub separation_tol: f64,
    pub box_tol: f64,
    /// Bisection depth for the bounding-box certificate.
    pub certify_depth: u32,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            dt: None,
            robot_radius: 0.0,
            separation_tol: 1e-9,
            box_tol: 1e-6,
            certify_depth: 14,
        }
    }
}

/// Checks a trajectory against its corridor, its path and the raw
/// obstacles grown by the robot radius.
pub fn verify<const D: usize>(
    traj: &Trajectory<D>,
    path: &[Point<D>],
    plan: &CorridorPlan<D>,
    env_raw: &Environment<D>,
    options: &VerifyOptions,
) -> Result<VerificationReport> {
    let h = traj.h;
    let dt = options.dt.unwrap_or(h / 50.0);
    if !(dt > 0.0) || dt > h / 20.0 + 1e-15 {
        return invalid("verify: dt must lie in (0, h/20]");
    }
    if traj.steps() != plan.steps() || (traj.h - plan.h).abs() > 1e-12 * plan.h {
        return invalid("verify: trajectory and corridor disagree on K or h");
    }
    if path.is_empty() {
        return invalid("verify: empty path");
    }
    let env = env_raw.inflate(options.robot_radius)?;
    let ell = plan.half_width;
    let bound = plan.separation_bound();
    let kk = traj.steps();
    let knots = traj.knots();

    let mut in_region = Vec::with_capacity(kk + 1);
    let (mut pos_ex, mut vel_ex, mut acc_ex) = (0.0_f64, 0.0_f64, 0.0_f64);
    for (k, x) in knots.iter().enumerate() {
        let dev = inf_norm(&(x.p - plan.waypoints[k]));
        in_region.push(dev <= ell + options.box_tol);
        pos_ex = pos_ex.max(dev - ell);
        vel_ex = vel_ex.max(inf_norm(&x.v) - plan.v_max);
        acc_ex = acc_ex.max(inf_norm(&x.a) - plan.a_max);
    }
    let terminal_error = (knots[kk].p - plan.goal()).norm();

    let samples_per_step = (h / dt).ceil() as usize;
    let mut max_sep = 0.0_f64;
    let mut corner_sep = 0.0_f64;
    let mut analytic = 0.0_f64;
    let mut collision = false;
    let mut min_clearance = f64::INFINITY;
    let mut certified = true;
    for k in 0..kk {
        let corner = plan.waypoints[k] == plan.waypoints[k + 1];
        for j in 0..=samples_per_step {
            let tau = (j as f64 * dt).min(h);
            let s = traj.state_in_step(k, tau);
            let b = point_polyline_distance(&s.p, path);
            max_sep = max_sep.max(b);
            if corner {
                corner_sep = corner_sep.max(b);
            }
            if !env.point_free(&s.p) {
                collision = true;
            }
            min_clearance = min_clearance.min(env.clearance(&s.p).min(env.workspace().boundary_distance(&s.p)));
        }
        analytic = analytic.max(step_deviation_bound(traj, plan, k));
        if !certify_step(traj, &env, k, 0.0, h, options.certify_depth) {
            certified = false;
        }
    }
    let passed = max_sep <= bound + options.separation_tol
        && analytic <= bound + options.separation_tol
        && pos_ex <= options.box_tol
        && vel_ex <= options.box_tol
        && acc_ex <= options.box_tol
        && terminal_error <= options.box_tol
        && !collision
        && certified;
    Ok(VerificationReport {
        max_separation: max_sep,
        analytic_separation: analytic,
        bound,
        corner_max_separation: corner_sep,
        position_excess: pos_ex.max(0.0),
        velocity_excess: vel_ex.max(0.0),
        acceleration_excess: acc_ex.max(0.0),
        terminal_error,
        in_region,
        collision,
        certified,
        min_clearance,
        passed,
    })
}

/// Upper bound on the distance from the step-`k` arc to the chord
/// `ϖ[k] → ϖ[k+1]`, which lies on the path. Per axis the gap to the chord
/// is a quadratic in time whose extremes are taken exactly.
pub fn step_deviation_bound<const D: usize>(traj: &Trajectory<D>, plan: &CorridorPlan<D>, k: usize) -> f64 {
    let h = traj.h;
    let x = &traj.knots()[k];
    let (w0, w1) = (plan.waypoints[k], plan.waypoints[k + 1]);
    let chord_rate = (w1 - w0) / h;
    let mut sum = 0.0;
    for i in 0..D {
        // e(τ) = (p − w0)_i + (v − chord)_i τ + a_i τ²/2
        let e0 = x.p[i] - w0[i];
        let e1 = x.v[i] - chord_rate[i];
        let e2 = 0.5 * x.a[i];
        let at = |t: f64| e0 + e1 * t + e2 * t * t;
        let mut m = at(0.0).abs().max(at(h).abs());
        if e2 != 0.0 {
            let ts = -e1 / (2.0 * e2);
            if ts > 0.0 && ts < h {
                m = m.max(at(ts).abs());
            }
        }
        sum += m * m;
    }
    sum.sqrt()
}

/// Certifies by bounding boxes that the position stays strictly free in
/// `env` for local times `from..=to`. Conservative: `false` may mean the
/// bisection ran out of depth.
pub fn interval_is_free<const D: usize>(traj: &Trajectory<D>, env: &Environment<D>, from: f64, to: f64, depth: u32) -> bool {
    let h = traj.h;
    let to = to.min(traj.duration());
    if !(from <= to) {
        return true;
    }
    let first = ((from / h).floor().max(0.0) as usize).min(traj.steps().saturating_sub(1));
    let last = ((to / h).ceil() as usize).min(traj.steps());
    (first..last).all(|k| {
        let t0 = (from - k as f64 * h).clamp(0.0, h);
        let t1 = (to - k as f64 * h).clamp(0.0, h);
        t0 >= t1 && env.point_free(&traj.state_in_step(k, t0).p) || t0 < t1 && certify_step(traj, env, k, t0, t1, depth)
    })
}

fn certify_step<const D: usize>(traj: &Trajectory<D>, env: &Environment<D>, k: usize, t0: f64, t1: f64, depth: u32) -> bool {
    let (lo, hi) = traj.arc_bounds(k, t0, t1);
    if env.box_free(&lo, &hi) {
        return true;
    }
    if depth == 0 {
        return false;
    }
    let mid = 0.5 * (t0 + t1);
    certify_step(traj, env, k, t0, mid, depth - 1) && certify_step(traj, env, k, mid, t1, depth - 1)
}
