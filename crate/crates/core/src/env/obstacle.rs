use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::geometry::{minimize_convex, Point};

/// Closed convex obstacle primitive.
///
/// Cylinders are vertical: their axis is the last coordinate, `base` is the
/// center of the bottom cap. In two dimensions a cylinder degenerates to the
/// rectangle `[base_x - r, base_x + r] x [base_y, base_y + height]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Obstacle<const D: usize> {
    Sphere { center: Point<D>, radius: f64 },
    Cylinder { base: Point<D>, radius: f64, height: f64 },
    Box { lower: Point<D>, upper: Point<D> },
}

#[inline]
fn horizontal_dist2<const D: usize>(p: &Point<D>, c: &Point<D>) -> f64 {
    (0..D - 1).map(|i| (p[i] - c[i]).powi(2)).sum()
}

impl<const D: usize> Obstacle<D> {
    pub fn validate(&self) -> Result<()> {
        let finite = |p: &Point<D>| p.iter().all(|x| x.is_finite());
        match self {
            Obstacle::Sphere { center, radius } => {
                if !finite(center) || !(*radius > 0.0) {
                    return invalid("sphere needs a finite center and radius > 0");
                }
            }
            Obstacle::Cylinder { base, radius, height } => {
                if !finite(base) || !(*radius > 0.0) || !(*height > 0.0) {
                    return invalid("cylinder needs radius > 0 and height > 0");
                }
            }
            Obstacle::Box { lower, upper } => {
                if !finite(lower) || !finite(upper) || (0..D).any(|i| !(lower[i] < upper[i])) {
                    return invalid("box needs lower < upper componentwise");
                }
            }
        }
        Ok(())
    }

    /// Signed Euclidean distance to the surface; negative inside.
    pub fn signed_distance(&self, p: &Point<D>) -> f64 {
        match self {
            Obstacle::Sphere { center, radius } => (p - center).norm() - radius,
            Obstacle::Cylinder { base, radius, height } => {
                let z = D - 1;
                let dh = horizontal_dist2(p, base).sqrt() - radius;
                let dz = (base[z] - p[z]).max(p[z] - (base[z] + height));
                if dh <= 0.0 && dz <= 0.0 {
                    dh.max(dz)
                } else {
                    (dh.max(0.0).powi(2) + dz.max(0.0).powi(2)).sqrt()
                }
            }
            Obstacle::Box { lower, upper } => {
                let mut outside = 0.0;
                let mut inside = f64::NEG_INFINITY;
                for i in 0..D {
                    let d = (lower[i] - p[i]).max(p[i] - upper[i]);
                    if d > 0.0 {
                        outside += d * d;
                    }
                    inside = inside.max(d);
                }
                if outside > 0.0 {
                    outside.sqrt()
                } else {
                    inside
                }
            }
        }
    }

    /// Exact closed-set intersection test against the segment `a..b`.
    pub fn intersects_segment(&self, a: &Point<D>, b: &Point<D>) -> bool {
        let d = b - a;
        match self {
            Obstacle::Sphere { center, radius } => {
                let len2 = d.norm_squared();
                let t = if len2 == 0.0 {
                    0.0
                } else {
                    ((center - a).dot(&d) / len2).clamp(0.0, 1.0)
                };
                (a + d * t - center).norm_squared() <= radius * radius
            }
            Obstacle::Cylinder { base, radius, height } => {
                let z = D - 1;
                let Some((mut lo, mut hi)) =
                    slab(a[z], d[z], base[z], base[z] + height).map(|(l, h)| (l.max(0.0), h.min(1.0)))
                else {
                    return false;
                };
                if lo > hi {
                    return false;
                }
                // |a_h - c_h + t d_h|^2 <= r^2
                let mut qa = 0.0;
                let mut qb = 0.0;
                let mut qc = -radius * radius;
                for i in 0..z {
                    let w = a[i] - base[i];
                    qa += d[i] * d[i];
                    qb += 2.0 * w * d[i];
                    qc += w * w;
                }
                if qa == 0.0 {
                    return qc <= 0.0;
                }
                let disc = qb * qb - 4.0 * qa * qc;
                if disc < 0.0 {
                    return false;
                }
                let sq = disc.sqrt();
                // numerically stable roots
                let q = -0.5 * (qb + qb.signum() * sq);
                let (mut t1, mut t2) = if q == 0.0 { (0.0, 0.0) } else { (q / qa, qc / q) };
                if t1 > t2 {
                    std::mem::swap(&mut t1, &mut t2);
                }
                lo = lo.max(t1);
                hi = hi.min(t2);
                lo <= hi
            }
            Obstacle::Box { lower, upper } => {
                let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
                for i in 0..D {
                    match slab(a[i], d[i], lower[i], upper[i]) {
                        None => return false,
                        Some((l, h)) => {
                            lo = lo.max(l);
                            hi = hi.min(h);
                        }
                    }
                    if lo > hi {
                        return false;
                    }
                }
                true
            }
        }
    }

    /// Minimum signed distance between the segment `a..b` and the obstacle.
    pub fn segment_distance(&self, a: &Point<D>, b: &Point<D>) -> f64 {
        if self.intersects_segment(a, b) {
            // the signed distance of a convex set is convex along a line
            let d = b - a;
            return minimize_convex(0.0, 1.0, |t| self.signed_distance(&(a + d * t))).1.min(0.0);
        }
        match self {
            Obstacle::Sphere { center, radius } => {
                crate::geometry::point_segment_distance(center, a, b) - radius
            }
            _ => {
                let d = b - a;
                minimize_convex(0.0, 1.0, |t| self.signed_distance(&(a + d * t))).1
            }
        }
    }

    /// Grown by `margin` on every side; a superset of the Minkowski sum
    /// with a ball of radius `margin`.
    pub fn grown(&self, margin: f64) -> Self {
        match self {
            Obstacle::Sphere { center, radius } => Obstacle::Sphere {
                center: *center,
                radius: radius + margin,
            },
            Obstacle::Cylinder { base, radius, height } => {
                let mut base = *base;
                base[D - 1] -= margin;
                Obstacle::Cylinder {
                    base,
                    radius: radius + margin,
                    height: height + 2.0 * margin,
                }
            }
            Obstacle::Box { lower, upper } => Obstacle::Box {
                lower: lower.add_scalar(-margin),
                upper: upper.add_scalar(margin),
            },
        }
    }

    pub fn aabb(&self) -> (Point<D>, Point<D>) {
        match self {
            Obstacle::Sphere { center, radius } => (center.add_scalar(-radius), center.add_scalar(*radius)),
            Obstacle::Cylinder { base, radius, height } => {
                let mut lo = base.add_scalar(-radius);
                let mut hi = base.add_scalar(*radius);
                lo[D - 1] = base[D - 1];
                hi[D - 1] = base[D - 1] + height;
                (lo, hi)
            }
            Obstacle::Box { lower, upper } => (*lower, *upper),
        }
    }

    /// True iff the closed axis-aligned box `[lo, hi]` is strictly separated
    /// from the obstacle.
    pub fn box_is_clear(&self, lo: &Point<D>, hi: &Point<D>) -> bool {
        match self {
            Obstacle::Sphere { center, radius } => {
                let mut d2 = 0.0;
                for i in 0..D {
                    let g = (lo[i] - center[i]).max(center[i] - hi[i]).max(0.0);
                    d2 += g * g;
                }
                d2 > radius * radius
            }
            Obstacle::Cylinder { base, radius, height } => {
                let z = D - 1;
                if lo[z] > base[z] + height || hi[z] < base[z] {
                    return true;
                }
                let mut d2 = 0.0;
                for i in 0..z {
                    let g = (lo[i] - base[i]).max(base[i] - hi[i]).max(0.0);
                    d2 += g * g;
                }
                d2 > radius * radius
            }
            Obstacle::Box { lower, upper } => (0..D).any(|i| hi[i] < lower[i] || lo[i] > upper[i]),
        }
    }

    pub fn volume(&self) -> f64 {
        match self {
            Obstacle::Sphere { radius, .. } => unit_ball_volume(D) * radius.powi(D as i32),
            Obstacle::Cylinder { radius, height, .. } => {
                unit_ball_volume(D - 1) * radius.powi(D as i32 - 1) * height
            }
            Obstacle::Box { lower, upper } => (upper - lower).iter().product(),
        }
    }
}

/// Parameter interval of `x0 + t*dx` inside `[lo, hi]`, or `None`.
fn slab(x0: f64, dx: f64, lo: f64, hi: f64) -> Option<(f64, f64)> {
    if dx == 0.0 {
        return if x0 >= lo && x0 <= hi {
            Some((f64::NEG_INFINITY, f64::INFINITY))
        } else {
            None
        };
    }
    let t1 = (lo - x0) / dx;
    let t2 = (hi - x0) / dx;
    Some(if t1 <= t2 { (t1, t2) } else { (t2, t1) })
}

/// Lebesgue measure of the unit ball in `n` dimensions.
pub fn unit_ball_volume(n: usize) -> f64 {
    use std::f64::consts::PI;
    match n {
        0 => 1.0,
        1 => 2.0,
        _ => unit_ball_volume(n - 2) * 2.0 * PI / n as f64,
    }
}
