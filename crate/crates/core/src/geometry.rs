//! Small geometric helpers shared by the planner, corridor and verifier.

use nalgebra::{SMatrix, SVector};

use crate::error::{invalid, Result};

pub type Point<const D: usize> = SVector<f64, D>;
pub type Rotation<const D: usize> = SMatrix<f64, D, D>;

/// Proper rotation `C` with `C * e1 == direction`.
///
/// The remaining columns complete an orthonormal basis greedily from the
/// standard axes (largest residual first, lowest index on ties), so
/// `direction == e1` yields the identity. The last column is flipped if
/// needed to make `det C = +1`.
pub fn rotation_to_world<const D: usize>(direction: &Point<D>) -> Result<Rotation<D>> {
    let norm = direction.norm();
    if !(norm > 0.0) || !norm.is_finite() {
        return invalid("rotation_to_world: direction must be non-zero and finite");
    }
    let u = direction / norm;
    let mut basis: Vec<Point<D>> = Vec::with_capacity(D);
    basis.push(u);
    let mut used = [false; D];
    while basis.len() < D {
        let mut best: Option<(usize, Point<D>, f64)> = None;
        for (i, taken) in used.iter().enumerate() {
            if *taken {
                continue;
            }
            let mut r = Point::<D>::zeros();
            r[i] = 1.0;
            // two passes of Gram-Schmidt keep the residual orthogonal to ~1 ulp
            for _ in 0..2 {
                for b in &basis {
                    r -= b * b.dot(&r);
                }
            }
            let n = r.norm();
            if best.as_ref().map_or(true, |(_, _, bn)| n > *bn + 1e-12) {
                best = Some((i, r, n));
            }
        }
        let (i, r, n) = best.expect("a residual axis always exists while basis is incomplete");
        used[i] = true;
        basis.push(r / n);
    }
    let mut c = Rotation::<D>::from_columns(&basis);
    if determinant(&c) < 0.0 {
        let last = -c.column(D - 1);
        c.set_column(D - 1, &last);
    }
    Ok(c)
}

/// Determinant of a small square matrix with a generic size.
pub fn determinant<const D: usize>(m: &Rotation<D>) -> f64 {
    nalgebra::DMatrix::from_column_slice(D, D, m.as_slice()).determinant()
}

/// Parameter in `[0,1]` of the point on segment `a..b` closest to `p`.
pub fn closest_parameter<const D: usize>(p: &Point<D>, a: &Point<D>, b: &Point<D>) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return 0.0;
    }
    ((p - a).dot(&ab) / len2).clamp(0.0, 1.0)
}

pub fn point_segment_distance<const D: usize>(p: &Point<D>, a: &Point<D>, b: &Point<D>) -> f64 {
    let t = closest_parameter(p, a, b);
    (p - (a + (b - a) * t)).norm()
}

/// Distance from `p` to the polyline through `nodes` (a single node is a point).
pub fn point_polyline_distance<const D: usize>(p: &Point<D>, nodes: &[Point<D>]) -> f64 {
    match nodes {
        [] => f64::INFINITY,
        [only] => (p - only).norm(),
        _ => nodes
            .windows(2)
            .map(|w| point_segment_distance(p, &w[0], &w[1]))
            .fold(f64::INFINITY, f64::min),
    }
}

pub fn inf_norm<const D: usize>(v: &Point<D>) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Minimum of a convex function on `[lo, hi]` by golden-section search.
pub(crate) fn minimize_convex(lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..90 {
        if b - a <= 1e-15 * (1.0 + a.abs().max(b.abs())) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let mut best = if fc < fd { (c, fc) } else { (d, fd) };
    for t in [lo, hi] {
        let ft = f(t);
        if ft < best.1 {
            best = (t, ft);
        }
    }
    best
}
