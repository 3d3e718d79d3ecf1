use rand::Rng;
use rand_distr::StandardNormal;

use crate::env::Workspace;
use crate::error::{invalid, Result};
use crate::geometry::{rotation_to_world, Point, Rotation};

/// Connection radius `min(gamma * (ln n / n)^(1/d), max_step)`.
pub fn rewire_radius(n: usize, dim: usize, gamma: f64, max_step: f64) -> Result<f64> {
    if n == 0 || dim == 0 || !(gamma > 0.0) || !(max_step > 0.0) {
        return invalid("rewire_radius: need n >= 1, d >= 1, gamma > 0, max_step > 0");
    }
    let n = n as f64;
    Ok((gamma * ((n.ln() / n).powf(1.0 / dim as f64))).min(max_step))
}

/// Uniform point in the workspace box.
pub fn uniform_sample<const D: usize>(ws: &Workspace<D>, rng: &mut impl Rng) -> Point<D> {
    Point::<D>::from_fn(|i, _| ws.lower[i] + rng.random::<f64>() * (ws.upper[i] - ws.lower[i]))
}

/// Uniform point in the unit ball.
fn unit_ball<const D: usize>(rng: &mut impl Rng) -> Point<D> {
    loop {
        let g = Point::<D>::from_fn(|_, _| rng.sample::<f64, _>(StandardNormal));
        let n = g.norm();
        if n > 0.0 {
            let r = rng.random::<f64>().powf(1.0 / D as f64);
            return g * (r / n);
        }
    }
}

/// Prolate hyperspheroid with foci `start` and `goal`.
#[derive(Clone, Debug)]
pub struct Spheroid<const D: usize> {
    rotation: Rotation<D>,
    centre: Point<D>,
    focal: f64,
}

impl<const D: usize> Spheroid<D> {
    pub fn new(start: &Point<D>, goal: &Point<D>) -> Result<Self> {
        let axis = goal - start;
        Ok(Self {
            rotation: rotation_to_world(&axis)?,
            centre: (start + goal) / 2.0,
            focal: axis.norm(),
        })
    }

    /// Uniform sample from `{x : |x - start| + |x - goal| <= c_best}`.
    pub fn sample(&self, c_best: f64, rng: &mut impl Rng) -> Result<Point<D>> {
        if !(c_best >= self.focal) || !c_best.is_finite() {
            return invalid("informed sample: c_best must be finite and >= |goal - start|");
        }
        let minor = (c_best * c_best - self.focal * self.focal).max(0.0).sqrt() / 2.0;
        let x = unit_ball::<D>(rng);
        let mut scaled = x * minor;
        scaled[0] = x[0] * c_best / 2.0;
        Ok(self.rotation * scaled + self.centre)
    }
}

/// One sample from the informed set, or from the workspace when no
/// solution is known yet (`c_best` infinite).
pub fn informed_sample<const D: usize>(
    start: &Point<D>,
    goal: &Point<D>,
    c_best: f64,
    workspace: &Workspace<D>,
    rng: &mut impl Rng,
) -> Result<Point<D>> {
    if c_best == f64::INFINITY {
        return Ok(uniform_sample(workspace, rng));
    }
    Spheroid::new(start, goal)?.sample(c_best, rng)
}
