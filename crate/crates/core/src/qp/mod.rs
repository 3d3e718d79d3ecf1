//! Jerk-minimising QP over per-step accelerations.
//!
//! Decision variables are the accelerations `a[0..=K]` of every axis.
//! Positions and velocities are affine in them:
//! `v[k] = v[0] + h Σ_{i<k} a[i]` and
//! `p[k] = p[0] + hk v[0] + (h²/2) Σ_{i<k} (2(k−i) − 1) a[i]`.
//! For `k = 1..K−1` each step must stay in its waypoint box and under the
//! velocity and acceleration caps; `a[0]`, `a[K]`, `p[K]` and `v[K]` are
//! pinned to the boundary states. The axes decouple, so each is solved on
//! its own.

mod axis;
mod banded;

use std::io::Write;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::corridor::{CorridorPlan, State};
use crate::error::{invalid, Result};
use crate::geometry::{inf_norm, Point};
use axis::{AxisProblem, AxisStatus, IpmSettings};

/// Boundary state with one entry per axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryState {
    pub p: Vec<f64>,
    pub v: Vec<f64>,
    pub a: Vec<f64>,
}

impl<const D: usize> From<&State<D>> for BoundaryState {
    fn from(s: &State<D>) -> Self {
        Self {
            p: s.p.iter().copied().collect(),
            v: s.v.iter().copied().collect(),
            a: s.a.iter().copied().collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QpInstance {
    /// Number of steps `K`; there are `K + 1` accelerations per axis.
    pub steps: usize,
    pub dim: usize,
    pub h: f64,
    pub half_width: f64,
    pub v_max: f64,
    pub a_max: f64,
    /// Waypoints, `centers[k][axis]`.
    pub centers: Vec<Vec<f64>>,
    pub start: BoundaryState,
    pub goal: BoundaryState,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QpStatus {
    Optimal,
    Infeasible,
    MaxIterations,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct KktResiduals {
    /// Largest constraint violation, in the row's own units.
    pub primal: f64,
    /// Largest entry of `2Ha + Gᵀy`, each divided by one plus the summed
    /// magnitudes of its terms. Long horizons sum many large terms that
    /// cancel, so an absolute figure would only measure rounding.
    pub stationarity: f64,
    /// Largest `|y_i| · slack_i` over `1 + ‖y‖∞`.
    pub complementarity: f64,
}

impl KktResiduals {
    pub fn max(&self) -> f64 {
        self.primal.max(self.stationarity).max(self.complementarity)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QpSolution {
    /// `accelerations[k][axis]` for `k = 0..=K`.
    pub accelerations: Vec<Vec<f64>>,
    pub objective: f64,
    pub status: QpStatus,
    pub residuals: KktResiduals,
    /// Per axis, multipliers of the state-space form (see
    /// [`kkt_residual`]) in SI units: `2K` dynamics rows, position then
    /// velocity for each step, followed by one bound multiplier per state
    /// variable in the order `p[k], v[k], a[k]`.
    pub multipliers: Vec<Vec<f64>>,
    /// Largest iteration count over the axes.
    pub iterations: usize,
}

impl QpSolution {
    pub fn accelerations_as<const D: usize>(&self) -> Vec<Point<D>> {
        self.accelerations.iter().map(|a| Point::<D>::from_fn(|i, _| a[i])).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverSettings {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 200,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Quantity {
    Position,
    Velocity,
    Acceleration,
}

/// One row `lower ≤ g·a ≤ upper` of the condensed per-axis problem.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RowLabel {
    pub quantity: Quantity,
    pub k: usize,
}

/// Per-axis problem in the acceleration variables only.
#[derive(Clone, Debug)]
pub struct Condensed {
    pub g: DMatrix<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub labels: Vec<RowLabel>,
}

/// Block-diagonal `I_d ⊗ WᵀW` where `W` is the `(n−1) × n` first-difference
/// operator scaled by `1/h`; `aᵀHa` is the summed squared jerk when `a`
/// stacks the `n` accelerations of each axis in turn.
pub fn jerk_hessian(n: usize, d: usize, h: f64) -> Result<DMatrix<f64>> {
    if n < 2 || d == 0 || !(h > 0.0) {
        return invalid("jerk_hessian: need n >= 2, d >= 1, h > 0");
    }
    let w = DMatrix::from_fn(n - 1, n, |i, j| {
        if i == j {
            -1.0 / h
        } else if j == i + 1 {
            1.0 / h
        } else {
            0.0
        }
    });
    let block = w.transpose() * w;
    let mut hm = DMatrix::zeros(n * d, n * d);
    for axis in 0..d {
        hm.view_mut((axis * n, axis * n), (n, n)).copy_from(&block);
    }
    Ok(hm)
}

/// Builds the QP for driving `x_start` to `x_goal` through `plan`.
pub fn assemble<const D: usize>(plan: &CorridorPlan<D>, x_start: &State<D>, x_goal: &State<D>) -> Result<QpInstance> {
    let steps = plan.steps();
    if steps < 2 {
        return invalid("assemble: need K >= 2");
    }
    let tol = 1e-9;
    for (name, s) in [("start", x_start), ("goal", x_goal)] {
        if !s.is_allowed(plan.v_max, plan.a_max, tol * (1.0 + plan.a_max)) {
            return invalid(&format!("assemble: {name} state exceeds the velocity or acceleration cap"));
        }
        if s.p.iter().chain(s.v.iter()).chain(s.a.iter()).any(|x| !x.is_finite()) {
            return invalid(&format!("assemble: {name} state is not finite"));
        }
    }
    if inf_norm(&(x_goal.p - plan.goal())) > plan.half_width {
        return invalid("assemble: goal position outside the last waypoint box");
    }
    Ok(QpInstance {
        steps,
        dim: D,
        h: plan.h,
        half_width: plan.half_width,
        v_max: plan.v_max,
        a_max: plan.a_max,
        centers: plan.waypoints.iter().map(|w| w.iter().copied().collect()).collect(),
        start: x_start.into(),
        goal: x_goal.into(),
    })
}

impl QpInstance {
    pub fn vars_per_axis(&self) -> usize {
        self.steps + 1
    }

    pub fn hessian(&self) -> DMatrix<f64> {
        jerk_hessian(self.vars_per_axis(), self.dim, self.h).expect("instance has K >= 2 and h > 0")
    }

    /// Coefficients of `a[0..=K]` in `p[k]`; the constant part is
    /// `p[0] + hk·v[0]`.
    pub fn position_coefficients(&self, k: usize) -> Vec<f64> {
        let h2 = 0.5 * self.h * self.h;
        (0..self.vars_per_axis())
            .map(|i| if i < k { h2 * (2 * (k - i) - 1) as f64 } else { 0.0 })
            .collect()
    }

    /// Coefficients of `a[0..=K]` in `v[k]`.
    pub fn velocity_coefficients(&self, k: usize) -> Vec<f64> {
        (0..self.vars_per_axis()).map(|i| if i < k { self.h } else { 0.0 }).collect()
    }

    /// `p[k]` on `axis` from that axis' accelerations.
    pub fn position(&self, axis: usize, k: usize, a: &[f64]) -> f64 {
        let c = self.position_coefficients(k);
        self.start.p[axis] + self.h * k as f64 * self.start.v[axis] + dot(&c, a)
    }

    pub fn velocity(&self, axis: usize, k: usize, a: &[f64]) -> f64 {
        let c = self.velocity_coefficients(k);
        self.start.v[axis] + dot(&c, a)
    }

    /// Accelerations of one axis from a `[k][axis]` table.
    pub fn axis_column(accel: &[Vec<f64>], axis: usize) -> Vec<f64> {
        accel.iter().map(|a| a[axis]).collect()
    }

    /// `Σ_axes aᵀ(WᵀW)a`, the summed squared jerk.
    pub fn objective(&self, accel: &[Vec<f64>]) -> f64 {
        let h2 = self.h * self.h;
        (0..self.dim)
            .map(|axis| {
                accel
                    .windows(2)
                    .map(|w| (w[1][axis] - w[0][axis]).powi(2) / h2)
                    .sum::<f64>()
            })
            .sum()
    }

    /// Row index in [`Self::condensed`] for a quantity at step `k`.
    pub fn row_index(&self, quantity: Quantity, k: usize) -> Option<usize> {
        let kk = self.steps;
        let interior = 3 * (kk - 1);
        match (quantity, k) {
            (q, k) if k >= 1 && k < kk => Some(
                3 * (k - 1)
                    + match q {
                        Quantity::Position => 0,
                        Quantity::Velocity => 1,
                        Quantity::Acceleration => 2,
                    },
            ),
            (Quantity::Acceleration, 0) => Some(interior),
            (Quantity::Acceleration, k) if k == kk => Some(interior + 1),
            (Quantity::Position, k) if k == kk => Some(interior + 2),
            (Quantity::Velocity, k) if k == kk => Some(interior + 3),
            _ => None,
        }
    }

    /// Per-axis constraint rows in the accelerations: box rows for
    /// `k = 1..K−1` (position, velocity, acceleration), then the pins
    /// `a[0]`, `a[K]`, `p[K]`, `v[K]`.
    pub fn condensed(&self, axis: usize) -> Condensed {
        let kk = self.steps;
        let n = self.vars_per_axis();
        let rows = 3 * (kk - 1) + 4;
        let mut g = DMatrix::zeros(rows, n);
        let mut lower = vec![0.0; rows];
        let mut upper = vec![0.0; rows];
        let mut labels = Vec::with_capacity(rows);
        let p0 = self.start.p[axis];
        let v0 = self.start.v[axis];
        let mut push = |r: usize, coeffs: &[f64], lo: f64, hi: f64, label: RowLabel| {
            for (j, c) in coeffs.iter().enumerate() {
                g[(r, j)] = *c;
            }
            lower[r] = lo;
            upper[r] = hi;
            labels.push(label);
        };
        let unit = |k: usize| {
            let mut e = vec![0.0; n];
            e[k] = 1.0;
            e
        };
        let mut r = 0;
        for k in 1..kk {
            let c = self.centers[k][axis];
            let off = p0 + self.h * k as f64 * v0;
            let (ell, vm, am) = (self.half_width, self.v_max, self.a_max);
            push(r, &self.position_coefficients(k), c - ell - off, c + ell - off, RowLabel {
                quantity: Quantity::Position,
                k,
            });
            push(r + 1, &self.velocity_coefficients(k), -vm - v0, vm - v0, RowLabel {
                quantity: Quantity::Velocity,
                k,
            });
            push(r + 2, &unit(k), -am, am, RowLabel {
                quantity: Quantity::Acceleration,
                k,
            });
            r += 3;
        }
        let a0 = self.start.a[axis];
        let ak = self.goal.a[axis];
        push(r, &unit(0), a0, a0, RowLabel {
            quantity: Quantity::Acceleration,
            k: 0,
        });
        push(r + 1, &unit(kk), ak, ak, RowLabel {
            quantity: Quantity::Acceleration,
            k: kk,
        });
        let pk = self.goal.p[axis] - p0 - self.h * kk as f64 * v0;
        push(r + 2, &self.position_coefficients(kk), pk, pk, RowLabel {
            quantity: Quantity::Position,
            k: kk,
        });
        let vk = self.goal.v[axis] - v0;
        push(r + 3, &self.velocity_coefficients(kk), vk, vk, RowLabel {
            quantity: Quantity::Velocity,
            k: kk,
        });
        Condensed { g, lower, upper, labels }
    }

    fn axis_problem(&self, axis: usize) -> AxisProblem {
        let kk = self.steps;
        let (ell, vm, am, h) = (self.half_width, self.v_max, self.a_max, self.h);
        let n = 3 * (kk + 1);
        let mut lower = vec![-1.0; n];
        let mut upper = vec![1.0; n];
        let pin = |lower: &mut Vec<f64>, upper: &mut Vec<f64>, i: usize, v: f64| {
            lower[i] = v;
            upper[i] = v;
        };
        pin(&mut lower, &mut upper, 0, (self.start.p[axis] - self.centers[0][axis]) / ell);
        pin(&mut lower, &mut upper, 1, self.start.v[axis] / vm);
        pin(&mut lower, &mut upper, 2, self.start.a[axis] / am);
        pin(&mut lower, &mut upper, 3 * kk, (self.goal.p[axis] - self.centers[kk][axis]) / ell);
        pin(&mut lower, &mut upper, 3 * kk + 1, self.goal.v[axis] / vm);
        pin(&mut lower, &mut upper, 3 * kk + 2, self.goal.a[axis] / am);
        let mut dyn_rhs = vec![0.0; 2 * kk];
        for k in 0..kk {
            dyn_rhs[2 * k] = (self.centers[k][axis] - self.centers[k + 1][axis]) / ell;
        }
        AxisProblem {
            steps: kk,
            cv: h * vm / ell,
            ca: 0.5 * h * h * am / ell,
            cva: h * am / vm,
            dyn_rhs,
            lower,
            upper,
        }
    }

    /// Lifted, normalised variables for one axis from SI accelerations.
    fn lift(&self, axis: usize, a: &[f64]) -> Vec<f64> {
        let (ell, vm, am, h) = (self.half_width, self.v_max, self.a_max, self.h);
        let mut x = Vec::with_capacity(3 * a.len());
        let (mut p, mut v) = (self.start.p[axis], self.start.v[axis]);
        for (k, ak) in a.iter().enumerate() {
            x.push((p - self.centers[k][axis]) / ell);
            x.push(v / vm);
            x.push(ak / am);
            p += h * v + 0.5 * h * h * ak;
            v += h * ak;
        }
        x
    }

    /// Lifted multipliers in SI units. The lifted objective is the SI one
    /// times `h²/A²` and every row is divided by its unit.
    fn unscale_multipliers(&self, y: &[f64]) -> Vec<f64> {
        let kk = self.steps;
        let (ell, vm, am, h) = (self.half_width, self.v_max, self.a_max, self.h);
        let c = h * h / (am * am);
        let nd = 2 * kk;
        let unit = [ell, vm, am];
        y.iter()
            .enumerate()
            .map(|(i, v)| {
                let u = if i < nd { unit[i % 2] } else { unit[(i - nd) % 3] };
                v / (u * c)
            })
            .collect()
    }

    /// Instance as plain text: a `key value` header, then per axis the
    /// Hessian block and the condensed constraint rows as
    /// `lower upper g_0 .. g_K`.
    pub fn write_text(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "# corridor qp instance")?;
        writeln!(out, "dim {}", self.dim)?;
        writeln!(out, "steps {}", self.steps)?;
        writeln!(out, "h {:e}", self.h)?;
        writeln!(out, "half_width {:e}", self.half_width)?;
        writeln!(out, "v_max {:e}", self.v_max)?;
        writeln!(out, "a_max {:e}", self.a_max)?;
        let n = self.vars_per_axis();
        let block = jerk_hessian(n, 1, self.h)?;
        for axis in 0..self.dim {
            writeln!(out, "axis {axis}")?;
            writeln!(out, "hessian {n} {n}")?;
            for i in 0..n {
                let row: Vec<String> = (0..n).map(|j| format!("{:e}", block[(i, j)])).collect();
                writeln!(out, "{}", row.join(" "))?;
            }
            let c = self.condensed(axis);
            writeln!(out, "constraints {} {}", c.labels.len(), n)?;
            for r in 0..c.labels.len() {
                let mut row = vec![format!("{:e}", c.lower[r]), format!("{:e}", c.upper[r])];
                row.extend((0..n).map(|j| format!("{:e}", c.g[(r, j)])));
                writeln!(out, "{}", row.join(" "))?;
            }
        }
        Ok(())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// KKT residuals of `solution` in SI units, on the state-space form of
/// the problem: per axis the variables are `p[k], v[k], a[k]`, tied by the
/// dynamics rows `p[k+1] − p[k] − h·v[k] − h²/2·a[k] = 0` and
/// `v[k+1] − v[k] − h·a[k] = 0`, with the boundary states pinned and the
/// box rows as bounds on the interior states.
///
/// Bound multipliers are `≤ 0` at a lower bound and `≥ 0` at an upper
/// bound, so stationarity reads `∇f + Eᵀλ + y = 0`. States are rolled
/// out from the accelerations, so the dynamics hold by construction.
/// Eliminating the states instead would run the multipliers through the
/// dynamics adjoint over the whole horizon, which magnifies rounding by
/// about `K²`.
///
/// The primal residual is in each row's own units. Stationarity and
/// complementarity are measured with every state in units of its bound
/// (`ℓ`, `V`, `A`) and the objective in units of `(A/h)²`, so that the
/// floor of one in their relative tests means the same for every row.
pub fn kkt_residual(inst: &QpInstance, solution: &QpSolution) -> KktResiduals {
    let mut res = KktResiduals::default();
    let kk = inst.steps;
    let (h, ell, vm, am) = (inst.h, inst.half_width, inst.v_max, inst.a_max);
    let h2 = h * h;
    let nd = 2 * kk;
    let nv = 3 * (kk + 1);
    // objective unit and per-state units
    let obj = am * am / h2;
    let unit = [ell, vm, am];
    for axis in 0..inst.dim {
        let a = QpInstance::axis_column(&solution.accelerations, axis);
        let zero = vec![0.0; nd + nv];
        let y = solution.multipliers.get(axis).filter(|y| y.len() == nd + nv).unwrap_or(&zero);
        let (lam, bound) = y.split_at(nd);
        let y_scale = 1.0 + (0..nv).map(|i| (bound[i] * unit[i % 3] / obj).abs()).fold(0.0_f64, f64::max);
        let (mut p, mut v) = (vec![inst.start.p[axis]; kk + 1], vec![inst.start.v[axis]; kk + 1]);
        for k in 0..kk {
            p[k + 1] = p[k] + h * v[k] + 0.5 * h2 * a[k];
            v[k + 1] = v[k] + h * a[k];
        }
        // (value, lower, upper) per state variable
        let boxes = |k: usize| -> [(f64, f64, f64); 3] {
            let pin = |x: f64| (x, x);
            let (pb, vb, ab) = if k == 0 {
                (pin(inst.start.p[axis]), pin(inst.start.v[axis]), pin(inst.start.a[axis]))
            } else if k == kk {
                (pin(inst.goal.p[axis]), pin(inst.goal.v[axis]), pin(inst.goal.a[axis]))
            } else {
                let c = inst.centers[k][axis];
                ((c - ell, c + ell), (-vm, vm), (-am, am))
            };
            [(p[k], pb.0, pb.1), (v[k], vb.0, vb.1), (a[k], ab.0, ab.1)]
        };
        for k in 0..=kk {
            for (q, (x, lo, hi)) in boxes(k).into_iter().enumerate() {
                res.primal = res.primal.max((lo - x).max(x - hi).max(0.0));
                let yi = bound[3 * k + q];
                let comp = if lo == hi {
                    0.0
                } else if yi > 0.0 {
                    yi * (hi - x).abs()
                } else {
                    -yi * (x - lo).abs()
                };
                res.complementarity = res.complementarity.max(comp / obj / y_scale);
            }
        }
        let mut worst = 0.0_f64;
        let mut check = |terms: &[f64], unit: f64| {
            let sum: f64 = terms.iter().sum::<f64>() * unit / obj;
            let mag: f64 = terms.iter().map(|t| t.abs()).sum::<f64>() * unit / obj;
            worst = worst.max(sum.abs() / (1.0 + mag));
        };
        for k in 0..=kk {
            let (lp, lv) = if k < kk { (lam[2 * k], lam[2 * k + 1]) } else { (0.0, 0.0) };
            let (lp_in, lv_in) = if k > 0 { (lam[2 * k - 2], lam[2 * k - 1]) } else { (0.0, 0.0) };
            let mut grad = 0.0;
            if k > 0 {
                grad += 2.0 * (a[k] - a[k - 1]) / h2;
            }
            if k < kk {
                grad -= 2.0 * (a[k + 1] - a[k]) / h2;
            }
            check(&[lp_in, -lp, bound[3 * k]], ell);
            check(&[lv_in, -h * lp, -lv, bound[3 * k + 1]], vm);
            check(&[grad, -0.5 * h2 * lp, -h * lv, bound[3 * k + 2]], am);
        }
        res.stationarity = res.stationarity.max(worst);
    }
    res
}

/// Solves the instance axis by axis. `warm` is an optional acceleration
/// table `[k][axis]` used as the starting iterate.
pub fn solve(inst: &QpInstance, settings: &SolverSettings, warm: Option<&[Vec<f64>]>) -> QpSolution {
    let kk = inst.steps;
    let mut accelerations = vec![vec![0.0; inst.dim]; kk + 1];
    let mut multipliers = Vec::with_capacity(inst.dim);
    let mut status = QpStatus::Optimal;
    let mut iterations = 0;
    let ipm = IpmSettings {
        max_iter: settings.max_iter,
        ..Default::default()
    };
    for axis in 0..inst.dim {
        let problem = inst.axis_problem(axis);
        let warm_x = warm
            .filter(|w| w.len() == kk + 1 && w.iter().all(|a| a.len() == inst.dim))
            .map(|w| inst.lift(axis, &QpInstance::axis_column(w, axis)));
        let mut accept = |x: &[f64], y: &[f64]| {
            let single = axis_solution(inst, axis, x, y);
            kkt_residual(&single.0, &single.1).max() <= settings.tol
        };
        let result = problem.solve(warm_x.as_deref(), &ipm, &mut accept);
        iterations = iterations.max(result.iterations);
        for (k, a) in axis_accelerations(inst, axis, &result.x).into_iter().enumerate() {
            accelerations[k][axis] = a;
        }
        multipliers.push(inst.unscale_multipliers(&result.y));
        status = match (status, result.status) {
            (QpStatus::Infeasible, _) | (_, AxisStatus::Infeasible) => QpStatus::Infeasible,
            (QpStatus::MaxIterations, _) | (_, AxisStatus::MaxIterations) => QpStatus::MaxIterations,
            _ => QpStatus::Optimal,
        };
    }
    let mut sol = QpSolution {
        objective: inst.objective(&accelerations),
        accelerations,
        status,
        residuals: KktResiduals::default(),
        multipliers,
        iterations,
    };
    sol.residuals = kkt_residual(inst, &sol);
    if sol.status == QpStatus::Optimal && sol.residuals.max() > settings.tol {
        sol.status = QpStatus::MaxIterations;
    }
    sol
}

/// SI accelerations of one axis, with the pinned ends copied exactly.
fn axis_accelerations(inst: &QpInstance, axis: usize, x: &[f64]) -> Vec<f64> {
    let kk = inst.steps;
    (0..=kk)
        .map(|k| match k {
            0 => inst.start.a[axis],
            k if k == kk => inst.goal.a[axis],
            k => x[3 * k + 2] * inst.a_max,
        })
        .collect()
}

/// Single-axis instance and solution for residual checks during a solve.
fn axis_solution(inst: &QpInstance, axis: usize, x: &[f64], y: &[f64]) -> (QpInstance, QpSolution) {
    let pick = |s: &BoundaryState| BoundaryState {
        p: vec![s.p[axis]],
        v: vec![s.v[axis]],
        a: vec![s.a[axis]],
    };
    let single = QpInstance {
        dim: 1,
        centers: inst.centers.iter().map(|c| vec![c[axis]]).collect(),
        start: pick(&inst.start),
        goal: pick(&inst.goal),
        ..inst.clone()
    };
    let accelerations: Vec<Vec<f64>> = axis_accelerations(inst, axis, x).into_iter().map(|a| vec![a]).collect();
    let sol = QpSolution {
        objective: 0.0,
        accelerations,
        status: QpStatus::Optimal,
        residuals: KktResiduals::default(),
        multipliers: vec![inst.unscale_multipliers(y)],
        iterations: 0,
    };
    (single, sol)
}
