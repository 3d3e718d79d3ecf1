//! Time-indexed waypoint corridor.
//!
//! A path is subdivided so that consecutive waypoints are at most `ℓ` apart,
//! every path node appears twice in a row, and waypoint `k` carries the
//! closed box `‖p − ϖ[k]‖∞ ≤ ℓ`. With `V = √(ℓA)` and `h = 2√(ℓ/A)` a
//! double integrator can always stay inside consecutive boxes; the
//! step constructions below are those existence arguments made executable.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::geometry::{inf_norm, rotation_to_world, Point, Rotation};
use crate::sampler::Path;

/// Position, velocity and acceleration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct State<const D: usize> {
    pub p: Point<D>,
    pub v: Point<D>,
    pub a: Point<D>,
}

impl<const D: usize> State<D> {
    pub fn at_rest(p: Point<D>) -> Self {
        Self {
            p,
            v: Point::zeros(),
            a: Point::zeros(),
        }
    }

    pub fn is_at_rest(&self) -> bool {
        self.v.iter().chain(self.a.iter()).all(|x| *x == 0.0)
    }

    pub fn is_allowed(&self, v_max: f64, a_max: f64, tol: f64) -> bool {
        inf_norm(&self.v) <= v_max + tol && inf_norm(&self.a) <= a_max + tol
    }
}

/// `(V_max, h)` for corridor half-width `ell` and acceleration cap `a_max`.
pub fn timing_params(ell: f64, a_max: f64) -> Result<(f64, f64)> {
    if !(ell > 0.0) || !(a_max > 0.0) || !ell.is_finite() || !a_max.is_finite() {
        return invalid("timing_params: half-width and acceleration cap must be > 0");
    }
    Ok(((ell * a_max).sqrt(), 2.0 * (ell / a_max).sqrt()))
}

pub fn region_contains<const D: usize>(center: &Point<D>, ell: f64, p: &Point<D>) -> bool {
    inf_norm(&(p - center)) <= ell
}

/// Proper rotation taking the first axis onto the direction `a → b`.
pub fn segment_frame<const D: usize>(a: &Point<D>, b: &Point<D>) -> Result<Rotation<D>> {
    if a == b {
        return invalid("segment_frame: endpoints coincide");
    }
    rotation_to_world(&(b - a))
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorridorPlan<const D: usize> {
    pub waypoints: Vec<Point<D>>,
    /// Box half-width `ℓ` (m).
    pub half_width: f64,
    /// Time step (s).
    pub h: f64,
    pub v_max: f64,
    pub a_max: f64,
    /// Indices `k` with `ϖ[k] == ϖ[k+1]`, i.e. doubled path nodes.
    pub node_marks: Vec<usize>,
    /// Polyline the corridor follows; separation is measured against it.
    pub path: Vec<Point<D>>,
}

/// Builds the corridor for `path`.
///
/// The sequence is `η[0]`, then for each segment its `κ+1` subdivision
/// points from `η[s]` to `η[s+1]` inclusive, then `η[S]`; so every node,
/// including both ends, occurs twice in a row. Coincident path nodes are
/// collapsed first. A single-node path yields three copies of that node.
pub fn build_waypoints<const D: usize>(path: &Path<D>, ell: f64, a_max: f64) -> Result<CorridorPlan<D>> {
    timing_params(ell, a_max)?;
    let Some(first) = path.nodes.first() else {
        return invalid("build_waypoints: empty path");
    };
    if path.nodes.iter().any(|p| p.iter().any(|x| !x.is_finite())) {
        return invalid("build_waypoints: non-finite path node");
    }
    let mut nodes = vec![*first];
    for p in &path.nodes[1..] {
        if p != nodes.last().expect("non-empty") {
            nodes.push(*p);
        }
    }
    let mut waypoints = vec![nodes[0]];
    for w in nodes.windows(2) {
        let (a, b) = (w[0], w[1]);
        let kappa = subdivisions((b - a).norm(), ell);
        for i in 0..kappa {
            waypoints.push(a + (b - a) * (i as f64 / kappa as f64));
        }
        waypoints.push(b);
    }
    waypoints.push(*nodes.last().expect("non-empty"));
    if nodes.len() == 1 {
        waypoints.push(nodes[0]);
    }
    CorridorPlan::from_waypoints(waypoints, nodes, ell, a_max)
}

/// `⌈len/ℓ⌉`, guarded against a ratio that is an integer up to rounding.
pub fn subdivisions(len: f64, ell: f64) -> usize {
    let r = len / ell;
    let n = r.round();
    if (r - n).abs() <= 1e-12 * n.max(1.0) {
        (n as usize).max(1)
    } else {
        (r.ceil() as usize).max(1)
    }
}

impl<const D: usize> CorridorPlan<D> {
    /// Corridor over explicit waypoints. Consecutive waypoints must be no
    /// more than `ℓ` apart.
    pub fn from_waypoints(waypoints: Vec<Point<D>>, path: Vec<Point<D>>, ell: f64, a_max: f64) -> Result<Self> {
        let (v_max, h) = timing_params(ell, a_max)?;
        if waypoints.len() < 3 {
            return invalid("corridor needs at least three waypoints (K >= 2)");
        }
        if path.is_empty() {
            return invalid("corridor needs a reference path");
        }
        let tol = ell * 1e-9;
        if waypoints.windows(2).any(|w| (w[1] - w[0]).norm() > ell + tol) {
            return invalid("consecutive waypoints are more than the half-width apart");
        }
        let node_marks = waypoints
            .windows(2)
            .enumerate()
            .filter(|(_, w)| w[0] == w[1])
            .map(|(k, _)| k)
            .collect();
        Ok(Self {
            waypoints,
            half_width: ell,
            h,
            v_max,
            a_max,
            node_marks,
            path,
        })
    }

    /// Number of steps `K`.
    pub fn steps(&self) -> usize {
        self.waypoints.len() - 1
    }

    pub fn duration(&self) -> f64 {
        self.steps() as f64 * self.h
    }

    pub fn start(&self) -> &Point<D> {
        &self.waypoints[0]
    }

    pub fn goal(&self) -> &Point<D> {
        self.waypoints.last().expect("at least three waypoints")
    }

    pub fn region_contains(&self, k: usize, p: &Point<D>) -> bool {
        region_contains(&self.waypoints[k], self.half_width, p)
    }

    /// Worst-case distance between the continuous trajectory and the path.
    pub fn separation_bound(&self) -> f64 {
        1.5 * self.half_width * (D as f64).sqrt()
    }

    /// Subdivided segments as inclusive waypoint index ranges, or `None`
    /// when the sequence does not have the doubled-node layout produced by
    /// [`build_waypoints`].
    pub fn segments(&self) -> Option<Vec<(usize, usize)>> {
        let marks = &self.node_marks;
        let k = self.steps();
        if marks.first() != Some(&0) || marks.last() != Some(&(k - 1)) {
            return None;
        }
        if marks.len() == k {
            // all waypoints identical
            return Some(Vec::new());
        }
        let mut out = Vec::with_capacity(marks.len() - 1);
        for w in marks.windows(2) {
            if w[1] <= w[0] + 1 {
                return None;
            }
            out.push((w[0] + 1, w[1]));
        }
        Some(out)
    }
}

/// Constant acceleration carrying a state from box `k` to box `k+1` along a
/// subdivided segment.
///
/// In the segment frame the along-axis acceleration `2(s − h·v)/h²`
/// advances the position by exactly the spacing `s` and maps the speed to
/// `2s/h − v`; every cross axis uses `−2v/h`, which returns the position to
/// where it was and negates the velocity. The offset from the waypoint is
/// therefore preserved, so `p_next` is in box `k+1` whenever `p_k` is in
/// box `k`. Requires `0 ≤ v_along ≤ 2s/h` and frame components bounded by
/// `V_max`; for `s = ℓ` that is the full velocity range.
pub fn lemma1_step<const D: usize>(
    p_k: &Point<D>,
    v_k: &Point<D>,
    plan: &CorridorPlan<D>,
    k: usize,
) -> Result<(Point<D>, Point<D>, Point<D>)> {
    if k + 1 > plan.steps() {
        return invalid("lemma1_step: k out of range");
    }
    let (from, to) = (plan.waypoints[k], plan.waypoints[k + 1]);
    let spacing = (to - from).norm();
    if spacing == 0.0 {
        return invalid("lemma1_step: waypoints k and k+1 coincide; use lemma2_corner");
    }
    let tol = 1e-12 * (1.0 + plan.v_max);
    if !plan.region_contains(k, p_k) {
        return invalid("lemma1_step: p_k outside box k");
    }
    let c = segment_frame(&from, &to)?;
    let mut v = c.transpose() * v_k;
    let h = plan.h;
    if inf_norm(&v) > plan.v_max + tol || v[0] < -tol || v[0] > 2.0 * spacing / h + tol {
        return invalid("lemma1_step: velocity outside the admissible set for this spacing");
    }
    v[0] = v[0].max(0.0);
    let mut a = -v * (2.0 / h);
    a[0] = 2.0 * (spacing - h * v[0]) / (h * h);
    let a_world = c * a;
    let p_next = p_k + v_k * h + a_world * (0.5 * h * h);
    let v_next = v_k + a_world * h;
    Ok((a_world, p_next, v_next))
}

/// Two accelerations through a doubled node `ϖ[k] = ϖ[k+1]` that leave the
/// state at `ϖ[k+2]`'s box moving with speed `v_exit` along the outgoing
/// segment.
///
/// Works per world axis on normalised coordinates
/// `λx = (x/ℓ + 1)/2`, `λv = (v/V + 1)/2`:
/// `a₁ = A(1 − λx/2 − 3λv/2)` and `a₂ = A(λx₃ + λx₂ − 1/2)` with
/// `λx₂ = (λx + λv)/2` and `λx₃ = v_exit·u/(2V)` signed by the exit
/// direction `u`. Ends at offset `ℓ·v_exit·u/V` with velocity `v_exit·u`.
/// When there is no outgoing segment (end of corridor) only `v_exit = 0`
/// is meaningful and the last box is used as the target.
pub fn lemma2_corner<const D: usize>(
    p_k: &Point<D>,
    v_k: &Point<D>,
    v_exit: f64,
    plan: &CorridorPlan<D>,
    k: usize,
) -> Result<(Point<D>, Point<D>, [State<D>; 2])> {
    let kk = plan.steps();
    if k + 1 > kk || plan.waypoints[k] != plan.waypoints[k + 1] {
        return invalid("lemma2_corner: k is not a doubled node");
    }
    let (ell, vm, am, h) = (plan.half_width, plan.v_max, plan.a_max, plan.h);
    let tol = 1e-12 * (1.0 + vm);
    if !plan.region_contains(k, p_k) || inf_norm(v_k) > vm + tol {
        return invalid("lemma2_corner: state outside box k or over the velocity cap");
    }
    if !(0.0..=vm).contains(&v_exit) {
        return invalid("lemma2_corner: exit speed must lie in [0, V_max]");
    }
    let node = plan.waypoints[k];
    let dir = match plan.waypoints.get(k + 2) {
        Some(next) if *next != node => (next - node).normalize(),
        _ if v_exit == 0.0 => Point::zeros(),
        _ => return invalid("lemma2_corner: nonzero exit speed without an outgoing segment"),
    };
    let mut a1 = Point::<D>::zeros();
    let mut a2 = Point::<D>::zeros();
    for i in 0..D {
        let lx1 = (((p_k[i] - node[i]) / ell).clamp(-1.0, 1.0) + 1.0) / 2.0;
        let lv1 = ((v_k[i] / vm).clamp(-1.0, 1.0) + 1.0) / 2.0;
        let lx2 = (lx1 + lv1) / 2.0;
        let lx3 = v_exit * dir[i] / (2.0 * vm);
        a1[i] = am * (1.0 - lx1 / 2.0 - 1.5 * lv1);
        a2[i] = am * (lx3 + lx2 - 0.5);
    }
    let p1 = p_k + v_k * h + a1 * (0.5 * h * h);
    let v1 = v_k + a1 * h;
    let p2 = p1 + v1 * h + a2 * (0.5 * h * h);
    let v2 = v1 + a2 * h;
    Ok((
        a1,
        a2,
        [
            State { p: p1, v: v1, a: a2 },
            State {
                p: p2,
                v: v2,
                a: Point::zeros(),
            },
        ],
    ))
}

/// Feasible rest-to-rest state sequence `x[0..=K]` for a corridor built by
/// [`build_waypoints`]; `x[k].a` is the acceleration applied on step `k`
/// (zero at `K`).
///
/// Each segment with `κ` subdivisions is covered in `m` equal
/// displacements, `m = κ` for even `κ` and `κ + 1` otherwise, alternating
/// accelerate/brake so the state is at rest after every pair. Peak speed
/// is `2L/(mh) ≤ V_max` and peak acceleration `2L/(mh²) ≤ A_max/2`. When
/// `m = κ` the spare step at the doubled node is spent at rest.
pub fn witness_discrete<const D: usize>(plan: &CorridorPlan<D>, x_start: &State<D>) -> Result<Vec<State<D>>> {
    if !x_start.is_at_rest() || x_start.p != plan.waypoints[0] {
        return invalid("witness_discrete: start must be at rest on the first waypoint");
    }
    let segments = plan
        .segments()
        .ok_or_else(|| crate::Error::InvalidArgument("witness_discrete: corridor lacks the doubled-node layout".into()))?;
    let h = plan.h;
    let mut out = vec![State::at_rest(plan.waypoints[0]); 2];
    for (first, last) in segments {
        let kappa = last - first;
        let from = plan.waypoints[first];
        let to = plan.waypoints[last];
        let m = if kappa % 2 == 0 { kappa } else { kappa + 1 };
        let step = (to - from) / m as f64;
        let accel = step * (2.0 / (h * h));
        for i in 0..m {
            let prev = out.last_mut().expect("non-empty");
            prev.a = if i % 2 == 0 { accel } else { -accel };
            let v = if i % 2 == 0 { step * (2.0 / h) } else { Point::zeros() };
            let p = if i + 1 == m { to } else { from + step * (i + 1) as f64 };
            out.push(State { p, v, a: Point::zeros() });
        }
        if m == kappa {
            out.push(State::at_rest(to));
        }
    }
    if out.len() != plan.waypoints.len() {
        // only the degenerate single-node corridor has more waypoints
        while out.len() < plan.waypoints.len() {
            out.push(State::at_rest(plan.waypoints[0]));
        }
    }
    Ok(out)
}
