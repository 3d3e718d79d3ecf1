//! Interior-point solver for one axis of the corridor QP.
//!
//! The axis is lifted to per-step variables `(p̂, v̂, â)` normalised by
//! `(ℓ, V, A)` and centred on the waypoints. Dynamics become equality rows
//! between neighbouring steps and every inequality is a plain variable
//! bound, so each Newton system is banded once multipliers and variables
//! are interleaved step by step. Near the optimum the active set is read
//! off and the equality-constrained QP on it is solved exactly; a short
//! primal-dual active-set loop repairs a wrong guess.

use super::banded::{Ldlt, SymBand};

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) enum AxisStatus {
    Solved,
    Infeasible,
    MaxIterations,
}

/// One lifted axis. Variable `3k` is `p̂_k`, `3k+1` is `v̂_k`, `3k+2` is `â_k`.
#[derive(Clone, Debug)]
pub(crate) struct AxisProblem {
    pub steps: usize,
    /// `p̂` gain of `v̂` in the position row.
    pub cv: f64,
    /// `p̂` gain of `â` in the position row.
    pub ca: f64,
    /// `v̂` gain of `â` in the velocity row.
    pub cva: f64,
    /// Right-hand side of the `2K` dynamics rows.
    pub dyn_rhs: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

pub(crate) struct AxisResult {
    pub x: Vec<f64>,
    /// Multipliers: `2K` dynamics rows followed by one per variable.
    pub y: Vec<f64>,
    pub iterations: usize,
    pub status: AxisStatus,
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct IpmSettings {
    pub max_iter: usize,
    /// Residual and barrier level below which the exact polish is tried.
    pub polish_below: f64,
    /// Barrier level below which the interior iterate itself is offered.
    pub interior_below: f64,
    /// Diagonal regularisation of the Newton matrix.
    pub regularization: f64,
}

impl Default for IpmSettings {
    fn default() -> Self {
        Self {
            max_iter: 200,
            polish_below: 1e-5,
            interior_below: 1e-12,
            regularization: 1e-10,
        }
    }
}

impl AxisProblem {
    pub fn n(&self) -> usize {
        3 * (self.steps + 1)
    }

    fn is_pinned(&self, i: usize) -> bool {
        self.lower[i] == self.upper[i]
    }

    /// Row `r` of the dynamics block as `(column, coefficient)` pairs.
    fn dyn_row(&self, r: usize) -> [(usize, f64); 4] {
        let k = r / 2;
        if r % 2 == 0 {
            [(3 * k + 3, 1.0), (3 * k, -1.0), (3 * k + 1, -self.cv), (3 * k + 2, -self.ca)]
        } else {
            [(3 * k + 4, 1.0), (3 * k + 1, -1.0), (3 * k + 2, -self.cva), (0, 0.0)]
        }
    }

    fn mul_a(&self, x: &[f64], out: &mut [f64]) {
        let nd = 2 * self.steps;
        for (r, o) in out[..nd].iter_mut().enumerate() {
            *o = self.dyn_row(r).iter().map(|(c, v)| v * x[*c]).sum();
        }
        out[nd..].copy_from_slice(x);
    }

    fn mul_at(&self, y: &[f64], out: &mut [f64]) {
        let nd = 2 * self.steps;
        out.copy_from_slice(&y[nd..]);
        for r in 0..nd {
            for (c, v) in self.dyn_row(r) {
                out[c] += v * y[r];
            }
        }
    }

    /// `P x` for `½xᵀPx = Σ (â_{k+1} − â_k)²`.
    pub fn mul_p(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for k in 0..self.steps {
            let (i, j) = (3 * k + 2, 3 * k + 5);
            let d = 2.0 * (x[i] - x[j]);
            out[i] += d;
            out[j] -= d;
        }
    }

    fn row_bounds(&self, i: usize) -> (f64, f64) {
        let nd = 2 * self.steps;
        if i < nd {
            (self.dyn_rhs[i], self.dyn_rhs[i])
        } else {
            (self.lower[i - nd], self.upper[i - nd])
        }
    }

    /// Position of every variable and dynamics multiplier in the interleaved
    /// KKT ordering: step `k` contributes the two dynamics rows into it,
    /// then its three variables. Half-bandwidth 5.
    fn kkt_order(&self) -> (Vec<usize>, Vec<usize>) {
        let mut pos_var = vec![0; self.n()];
        let mut pos_dyn = vec![0; 2 * self.steps];
        let mut next = 0;
        for k in 0..=self.steps {
            if k > 0 {
                pos_dyn[2 * k - 2] = next;
                pos_dyn[2 * k - 1] = next + 1;
                next += 2;
            }
            for i in 3 * k..3 * k + 3 {
                pos_var[i] = next;
                next += 1;
            }
        }
        (pos_var, pos_dyn)
    }

    /// Reduced Newton matrix `[[P + Σ, Eᵀ], [E, 0]]` with pinned variables
    /// replaced by identity rows, plus `reg` on both diagonal blocks.
    fn newton_matrix(&self, sigma: &[f64], reg: f64, pos_var: &[usize], pos_dyn: &[usize]) -> SymBand {
        let n = self.n();
        let mut m = SymBand::zeros(n + 2 * self.steps, 5);
        for k in 0..self.steps {
            let (i, j) = (3 * k + 2, 3 * k + 5);
            let (pi, pj) = (pos_var[i], pos_var[j]);
            if !self.is_pinned(i) {
                m.add(pi, pi, 2.0);
            }
            if !self.is_pinned(j) {
                m.add(pj, pj, 2.0);
            }
            if !self.is_pinned(i) && !self.is_pinned(j) {
                m.add(pi, pj, -2.0);
            }
        }
        for i in 0..n {
            if self.is_pinned(i) {
                m.add(pos_var[i], pos_var[i], 1.0);
            } else {
                m.add(pos_var[i], pos_var[i], sigma[i] + reg);
            }
        }
        for (r, &pr) in pos_dyn.iter().enumerate() {
            m.add(pr, pr, -reg);
            for (c, v) in self.dyn_row(r) {
                if v != 0.0 && !self.is_pinned(c) {
                    m.add(pr, pos_var[c], v);
                }
            }
        }
        m
    }

    /// Primal-dual interior point with Mehrotra's predictor-corrector on the
    /// lifted axis. Once the barrier parameter is small the active set is
    /// read off the slack/multiplier pairs and handed to the exact polish;
    /// `accept` decides whether the polished point is good enough.
    pub fn solve(
        &self,
        warm_x: Option<&[f64]>,
        settings: &IpmSettings,
        accept: &mut dyn FnMut(&[f64], &[f64]) -> bool,
    ) -> AxisResult {
        let n = self.n();
        let nd = 2 * self.steps;
        let pinned: Vec<bool> = (0..n).map(|i| self.is_pinned(i)).collect();
        let has_l: Vec<bool> = (0..n).map(|i| !pinned[i] && self.lower[i].is_finite()).collect();
        let has_u: Vec<bool> = (0..n).map(|i| !pinned[i] && self.upper[i].is_finite()).collect();
        let n_ineq = has_l.iter().chain(&has_u).filter(|b| **b).count().max(1) as f64;

        let mut x: Vec<f64> = (0..n)
            .map(|i| {
                let (l, u) = (self.lower[i], self.upper[i]);
                let guess = warm_x.map_or(0.0, |w| w[i]);
                if pinned[i] {
                    l
                } else if has_l[i] && has_u[i] {
                    let m = 0.1 * (u - l);
                    guess.clamp(l + m, u - m)
                } else if has_l[i] {
                    guess.max(l + 1.0)
                } else if has_u[i] {
                    guess.min(u - 1.0)
                } else {
                    guess
                }
            })
            .collect();
        let mut lam = vec![0.0; nd];
        let mut zl: Vec<f64> = has_l.iter().map(|b| if *b { 1.0 } else { 0.0 }).collect();
        let mut zu: Vec<f64> = has_u.iter().map(|b| if *b { 1.0 } else { 0.0 }).collect();
        let (pos_var, pos_dyn) = self.kkt_order();
        let total = n + nd;

        let mut px = vec![0.0; n];
        let mut ex = vec![0.0; nd + n];
        let mut ety = vec![0.0; n];
        let mut rd = vec![0.0; n];
        let mut rp = vec![0.0; nd];
        let mut sigma = vec![0.0; n];
        let mut rhs = vec![0.0; total];
        let mut y = vec![0.0; nd + n];
        let mut last_polish_mu = f64::INFINITY;

        for iter in 1..=settings.max_iter {
            self.mul_p(&x, &mut px);
            self.mul_a(&x, &mut ex);
            y[..nd].copy_from_slice(&lam);
            y[nd..].iter_mut().for_each(|v| *v = 0.0);
            self.mul_at(&y, &mut ety);
            for i in 0..n {
                rd[i] = if pinned[i] { 0.0 } else { px[i] + ety[i] - zl[i] + zu[i] };
            }
            for r in 0..nd {
                rp[r] = ex[r] - self.dyn_rhs[r];
            }
            let sl: Vec<f64> = (0..n).map(|i| if has_l[i] { x[i] - self.lower[i] } else { 1.0 }).collect();
            let su: Vec<f64> = (0..n).map(|i| if has_u[i] { self.upper[i] - x[i] } else { 1.0 }).collect();
            let mu = (0..n).map(|i| sl[i] * zl[i] + su[i] * zu[i]).sum::<f64>() / n_ineq;
            for i in 0..n {
                y[nd + i] = if pinned[i] { -(px[i] + ety[i]) } else { zu[i] - zl[i] };
            }

            let scale = 1.0 + inf(&y);
            let near = inf(&rp) <= settings.polish_below && inf(&rd) <= settings.polish_below * scale;
            if near && mu <= settings.polish_below {
                if mu < 0.1 * last_polish_mu {
                    last_polish_mu = mu;
                    let active: Vec<i8> = (0..n)
                        .map(|i| {
                            if pinned[i] {
                                2
                            } else if has_l[i] && sl[i] < zl[i] {
                                -1
                            } else if has_u[i] && su[i] < zu[i] {
                                1
                            } else {
                                0
                            }
                        })
                        .collect();
                    let pol = self.polish(active);
                    if let Some((xp, yp)) = pol {
                        if accept(&xp, &yp) {
                            return AxisResult {
                                x: xp,
                                y: yp,
                                iterations: iter,
                                status: AxisStatus::Solved,
                            };
                        }
                    }
                }
                if mu <= settings.interior_below && accept(&x, &y) {
                    return AxisResult {
                        x,
                        y,
                        iterations: iter,
                        status: AxisStatus::Solved,
                    };
                }
            }
            if scale > 1e6 {
                let unit: Vec<f64> = y.iter().map(|v| v / scale).collect();
                if self.infeasibility_certificate(&unit, &vec![0.0; nd + n]) {
                    return AxisResult {
                        x,
                        y,
                        iterations: iter,
                        status: AxisStatus::Infeasible,
                    };
                }
            }
            if mu < 1e-22 {
                break;
            }

            for i in 0..n {
                sigma[i] = if pinned[i] {
                    0.0
                } else {
                    (if has_l[i] { zl[i] / sl[i] } else { 0.0 }) + (if has_u[i] { zu[i] / su[i] } else { 0.0 })
                };
            }
            let exact = self.newton_matrix(&sigma, 0.0, &pos_var, &pos_dyn);
            let Some(f) = self.newton_matrix(&sigma, settings.regularization, &pos_var, &pos_dyn).ldlt() else {
                break;
            };
            let mut newton = |cl: &[f64], cu: &[f64]| -> Vec<f64> {
                for i in 0..n {
                    rhs[pos_var[i]] = if pinned[i] {
                        0.0
                    } else {
                        -rd[i] + (if has_l[i] { cl[i] / sl[i] } else { 0.0 }) - (if has_u[i] { cu[i] / su[i] } else { 0.0 })
                    };
                }
                for r in 0..nd {
                    rhs[pos_dyn[r]] = -rp[r];
                }
                refine_solve(&exact, &f, &rhs)
            };
            let directions = |sol: &[f64], cl: &[f64], cu: &[f64]| {
                let dx: Vec<f64> = (0..n).map(|i| sol[pos_var[i]]).collect();
                let dzl: Vec<f64> = (0..n)
                    .map(|i| if has_l[i] { (cl[i] - zl[i] * dx[i]) / sl[i] } else { 0.0 })
                    .collect();
                let dzu: Vec<f64> = (0..n)
                    .map(|i| if has_u[i] { (cu[i] + zu[i] * dx[i]) / su[i] } else { 0.0 })
                    .collect();
                (dx, dzl, dzu)
            };
            let max_step = |dx: &[f64], dzl: &[f64], dzu: &[f64]| {
                let mut a: f64 = 1.0;
                for i in 0..n {
                    if has_l[i] {
                        if dx[i] < 0.0 {
                            a = a.min(-sl[i] / dx[i]);
                        }
                        if dzl[i] < 0.0 {
                            a = a.min(-zl[i] / dzl[i]);
                        }
                    }
                    if has_u[i] {
                        if dx[i] > 0.0 {
                            a = a.min(su[i] / dx[i]);
                        }
                        if dzu[i] < 0.0 {
                            a = a.min(-zu[i] / dzu[i]);
                        }
                    }
                }
                a
            };

            // predictor
            let cl: Vec<f64> = (0..n).map(|i| -sl[i] * zl[i]).collect();
            let cu: Vec<f64> = (0..n).map(|i| -su[i] * zu[i]).collect();
            let sol = newton(&cl, &cu);
            let (dx, dzl, dzu) = directions(&sol, &cl, &cu);
            let a_aff = max_step(&dx, &dzl, &dzu);
            let mu_aff = (0..n)
                .map(|i| {
                    (if has_l[i] { (sl[i] + a_aff * dx[i]) * (zl[i] + a_aff * dzl[i]) } else { 0.0 })
                        + (if has_u[i] { (su[i] - a_aff * dx[i]) * (zu[i] + a_aff * dzu[i]) } else { 0.0 })
                })
                .sum::<f64>()
                / n_ineq;
            let centering = (mu_aff / mu).powi(3).min(1.0);

            // corrector
            let target = centering * mu;
            let cl: Vec<f64> = (0..n)
                .map(|i| if has_l[i] { target - sl[i] * zl[i] - dx[i] * dzl[i] } else { 0.0 })
                .collect();
            let cu: Vec<f64> = (0..n)
                .map(|i| if has_u[i] { target - su[i] * zu[i] + dx[i] * dzu[i] } else { 0.0 })
                .collect();
            let sol = newton(&cl, &cu);
            let (dx, dzl, dzu) = directions(&sol, &cl, &cu);
            let step = (0.995 * max_step(&dx, &dzl, &dzu)).min(1.0);
            for i in 0..n {
                x[i] += step * dx[i];
                zl[i] += step * dzl[i];
                zu[i] += step * dzu[i];
            }
            for r in 0..nd {
                lam[r] += step * sol[pos_dyn[r]];
            }
        }
        let status = if inf(&rp) > 1e-6 {
            AxisStatus::Infeasible
        } else {
            AxisStatus::MaxIterations
        };
        AxisResult {
            x,
            y,
            iterations: settings.max_iter,
            status,
        }
    }

    /// Primal infeasibility certificate on the last multiplier increment.
    fn infeasibility_certificate(&self, y: &[f64], y_prev: &[f64]) -> bool {
        let dy: Vec<f64> = y.iter().zip(y_prev).map(|(a, b)| a - b).collect();
        let norm = inf(&dy);
        if norm < 1e-10 {
            return false;
        }
        let mut aty = vec![0.0; self.n()];
        self.mul_at(&dy, &mut aty);
        let eps = 1e-7 * norm;
        if inf(&aty) > eps {
            return false;
        }
        let support: f64 = dy
            .iter()
            .enumerate()
            .map(|(i, d)| {
                let (l, u) = self.row_bounds(i);
                if *d > 0.0 {
                    u * d
                } else {
                    l * d
                }
            })
            .sum();
        support < -eps
    }

    /// Exact solution on the given active set (0 free, -1 at lower, +1 at
    /// upper, 2 pinned), repaired by a few primal-dual active-set passes.
    /// Returns `(x, y)` when the result is primal feasible with correctly
    /// signed multipliers.
    fn polish(&self, mut active: Vec<i8>) -> Option<(Vec<f64>, Vec<f64>)> {
        let n = self.n();
        let nd = 2 * self.steps;
        for _ in 0..POLISH_PASSES {
            let (xs, ys) = self.solve_active(&active)?;
            let scale = 1.0 + inf(&ys);
            let mut changed = false;
            for i in 0..n {
                if active[i] == 0 {
                    if xs[i] < self.lower[i] - 1e-11 {
                        active[i] = -1;
                        changed = true;
                    } else if xs[i] > self.upper[i] + 1e-11 {
                        active[i] = 1;
                        changed = true;
                    }
                }
            }
            if !changed {
                let tol = 1e-14 * scale;
                for i in 0..n {
                    let yi = ys[nd + i];
                    if (active[i] == -1 && yi > tol) || (active[i] == 1 && yi < -tol) {
                        active[i] = 0;
                        changed = true;
                    }
                }
            }
            if !changed {
                return Some((xs, ys));
            }
        }
        None
    }

    /// Solves the equality QP with the given active bounds through an
    /// interleaved quasi-definite KKT system and iterative refinement.
    fn solve_active(&self, active: &[i8]) -> Option<(Vec<f64>, Vec<f64>)> {
        let n = self.n();
        let nd = 2 * self.steps;
        let mut pos_var = vec![0usize; n];
        let mut pos_mu = vec![usize::MAX; n];
        let mut pos_dyn = vec![0usize; nd];
        // each multiplier sits just before the variable it pins, so the
        // zero-curvature states are never pivoted ahead of their constraint
        let mut next = 0usize;
        for k in 0..=self.steps {
            if k > 0 {
                pos_dyn[2 * k - 2] = next;
                pos_dyn[2 * k - 1] = next + 1;
                next += 2;
            }
            for i in 3 * k..3 * k + 3 {
                if active[i] != 0 {
                    pos_mu[i] = next;
                    next += 1;
                }
            }
            for i in 3 * k..3 * k + 3 {
                pos_var[i] = next;
                next += 1;
            }
        }
        let total = next;
        let mut entries: Vec<(usize, usize, f64)> = Vec::new();
        for k in 0..self.steps {
            let (i, j) = (pos_var[3 * k + 2], pos_var[3 * k + 5]);
            entries.push((i, i, 2.0));
            entries.push((j, j, 2.0));
            entries.push((i, j, -2.0));
        }
        for r in 0..nd {
            for (c, v) in self.dyn_row(r) {
                if v != 0.0 {
                    entries.push((pos_dyn[r], pos_var[c], v));
                }
            }
        }
        for i in 0..n {
            if active[i] != 0 {
                entries.push((pos_mu[i], pos_var[i], 1.0));
            }
        }
        let bw = entries.iter().map(|(a, b, _)| a.abs_diff(*b)).max().unwrap_or(0);
        let mut exact = SymBand::zeros(total, bw);
        for &(a, b, v) in &entries {
            exact.add(a, b, v);
        }
        let delta = 1e-8;
        let mut reg = exact.clone();
        for i in 0..n {
            reg.add(pos_var[i], pos_var[i], delta);
            if active[i] != 0 {
                reg.add(pos_mu[i], pos_mu[i], -delta);
            }
        }
        for &p in &pos_dyn {
            reg.add(p, p, -delta);
        }
        let f = reg.ldlt()?;
        let mut rhs = vec![0.0; total];
        for r in 0..nd {
            rhs[pos_dyn[r]] = self.dyn_rhs[r];
        }
        for i in 0..n {
            match active[i] {
                -1 | 2 => rhs[pos_mu[i]] = self.lower[i],
                1 => rhs[pos_mu[i]] = self.upper[i],
                _ => {}
            }
        }
        let sol = refine_solve(&exact, &f, &rhs);
        if sol.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let x: Vec<f64> = (0..n).map(|i| sol[pos_var[i]]).collect();
        let mut y = vec![0.0; nd + n];
        for r in 0..nd {
            y[r] = sol[pos_dyn[r]];
        }
        for i in 0..n {
            if active[i] != 0 {
                y[nd + i] = sol[pos_mu[i]];
            }
        }
        Some((x, y))
    }
}

/// Active-set repair passes before giving up on a polish. A good guess
/// settles in one or two; a poor one cycles, and the interior iterate is
/// used instead.
const POLISH_PASSES: usize = 4;

fn inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Solves `exact · x = rhs` with the factors of a nearby regularised
/// matrix, refining while the residual keeps halving.
fn refine_solve(exact: &SymBand, f: &Ldlt, rhs: &[f64]) -> Vec<f64> {
    let total = rhs.len();
    let mut sol = rhs.to_vec();
    f.solve_in_place(&mut sol);
    let mut resid = vec![0.0; total];
    let mut prev = f64::INFINITY;
    for _ in 0..12 {
        exact.mul(&sol, &mut resid);
        let mut worst: f64 = 0.0;
        for i in 0..total {
            resid[i] = rhs[i] - resid[i];
            worst = worst.max(resid[i].abs());
        }
        if worst <= 1e-15 * (1.0 + inf(&sol)) || worst > 0.5 * prev {
            break;
        }
        prev = worst;
        f.solve_in_place(&mut resid);
        for i in 0..total {
            sol[i] += resid[i];
        }
    }
    sol
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Two steps from rest at the first waypoint to rest one waypoint on.
    fn tiny() -> AxisProblem {
        let steps = 3;
        let n = 3 * (steps + 1);
        let mut lower = vec![-1.0; n];
        let mut upper = vec![1.0; n];
        for i in [0, 1, 2, n - 3, n - 2, n - 1] {
            lower[i] = 0.0;
            upper[i] = 0.0;
        }
        // waypoints 0, 0, 1, 1 in units of ℓ
        AxisProblem {
            steps,
            cv: 2.0,
            ca: 2.0,
            cva: 2.0,
            dyn_rhs: vec![0.0, 0.0, -1.0, 0.0, 0.0, 0.0],
            lower,
            upper,
        }
    }

    #[test]
    fn solves_and_satisfies_dynamics() {
        let p = tiny();
        let r = p.solve(None, &IpmSettings::default(), &mut |_, _| true);
        assert_eq!(r.status, AxisStatus::Solved);
        let mut ax = vec![0.0; 2 * p.steps + p.n()];
        p.mul_a(&r.x, &mut ax);
        for (i, v) in ax.iter().enumerate() {
            let (l, u) = p.row_bounds(i);
            assert!(*v >= l - 1e-12 && *v <= u + 1e-12, "row {i}: {v} not in [{l},{u}]");
        }
        // stationarity of the lifted problem
        let mut px = vec![0.0; p.n()];
        let mut aty = vec![0.0; p.n()];
        p.mul_p(&r.x, &mut px);
        p.mul_at(&r.y, &mut aty);
        for i in 0..p.n() {
            assert!((px[i] + aty[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn detects_infeasible_bounds() {
        let mut p = tiny();
        // must travel 3ℓ in three steps but the last box forbids it
        p.dyn_rhs[2] = -3.0;
        p.dyn_rhs[4] = -3.0;
        let r = p.solve(None, &IpmSettings::default(), &mut |_, _| true);
        assert_eq!(r.status, AxisStatus::Infeasible);
    }
}
