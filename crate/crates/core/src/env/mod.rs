//! Workspace and obstacle model.
//!
//! An [`Environment`] carries the obstacle primitives together with the
//! margin they were already grown by. Planning runs against an inflated
//! environment so that the robot's bounding ball and the trajectory
//! deviation bound reduce to point and segment tests.

mod index;
mod obstacle;
pub mod scenario;
pub mod scenes;

use serde::{Deserialize, Serialize};

pub use obstacle::{unit_ball_volume, Obstacle};
pub use scenario::{apply_update, AnyScenario, EventKind, Scenario, ScenarioEvent, StartState};
pub use scenes::{maze, maze_scenario, poisson_forest, string_scene, ForestParams};

use crate::error::{invalid, Result};
use crate::geometry::Point;
use index::GridIndex;

/// Axis-aligned box bounding every admissible position.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Workspace<const D: usize> {
    pub lower: Point<D>,
    pub upper: Point<D>,
}

impl<const D: usize> Workspace<D> {
    pub fn new(lower: Point<D>, upper: Point<D>) -> Result<Self> {
        let ws = Self { lower, upper };
        ws.validate()?;
        Ok(ws)
    }

    pub fn validate(&self) -> Result<()> {
        if !(D == 2 || D == 3) {
            return invalid("workspace dimension must be 2 or 3");
        }
        if (0..D).any(|i| !(self.lower[i] < self.upper[i]) || !self.upper[i].is_finite() || !self.lower[i].is_finite()) {
            return invalid("workspace needs finite lower < upper componentwise");
        }
        Ok(())
    }

    pub fn contains(&self, p: &Point<D>) -> bool {
        (0..D).all(|i| p[i] >= self.lower[i] && p[i] <= self.upper[i])
    }

    pub fn contains_strictly(&self, p: &Point<D>) -> bool {
        (0..D).all(|i| p[i] > self.lower[i] && p[i] < self.upper[i])
    }

    /// Distance to the nearest face (negative outside).
    pub fn boundary_distance(&self, p: &Point<D>) -> f64 {
        (0..D)
            .map(|i| (p[i] - self.lower[i]).min(self.upper[i] - p[i]))
            .fold(f64::INFINITY, f64::min)
    }

    /// Shrunk inward by `margin`; may be empty (lower >= upper).
    pub fn shrunk(&self, margin: f64) -> Self {
        Self {
            lower: self.lower.add_scalar(margin),
            upper: self.upper.add_scalar(-margin),
        }
    }

    pub fn is_empty(&self) -> bool {
        (0..D).any(|i| !(self.lower[i] < self.upper[i]))
    }

    pub fn volume(&self) -> f64 {
        (0..D).map(|i| (self.upper[i] - self.lower[i]).max(0.0)).product()
    }

    pub fn extent(&self) -> Point<D> {
        self.upper - self.lower
    }
}

/// Obstacles in a workspace, already grown by `inflation`.
///
/// Immutable after construction and `Sync`, so one environment can serve
/// many concurrent queries.
#[derive(Clone, Debug)]
pub struct Environment<const D: usize> {
    workspace: Workspace<D>,
    obstacles: Vec<Obstacle<D>>,
    inflation: f64,
    index: GridIndex<D>,
}

impl<const D: usize> Environment<D> {
    pub fn new(workspace: Workspace<D>, obstacles: Vec<Obstacle<D>>) -> Result<Self> {
        workspace.validate()?;
        for o in &obstacles {
            o.validate()?;
        }
        let index = GridIndex::build(&workspace, &obstacles);
        Ok(Self {
            workspace,
            obstacles,
            inflation: 0.0,
            index,
        })
    }

    pub fn workspace(&self) -> &Workspace<D> {
        &self.workspace
    }

    pub fn obstacles(&self) -> &[Obstacle<D>] {
        &self.obstacles
    }

    /// Total margin the obstacles carry relative to the raw geometry.
    pub fn inflation(&self) -> f64 {
        self.inflation
    }

    /// Obstacles grown by `margin`, workspace shrunk by `margin`.
    ///
    /// A margin that leaves no free space is accepted; the planner reports
    /// the failure downstream.
    pub fn inflate(&self, margin: f64) -> Result<Self> {
        if !(margin >= 0.0) || !margin.is_finite() {
            return invalid("inflation margin must be finite and >= 0");
        }
        if margin == 0.0 {
            return Ok(self.clone());
        }
        let workspace = self.workspace.shrunk(margin);
        let obstacles: Vec<_> = self.obstacles.iter().map(|o| o.grown(margin)).collect();
        let index = GridIndex::build(&self.workspace, &obstacles);
        Ok(Self {
            workspace,
            obstacles,
            inflation: self.inflation + margin,
            index,
        })
    }

    /// Same workspace and margin with a different obstacle set.
    pub fn with_obstacles(&self, obstacles: Vec<Obstacle<D>>) -> Result<Self> {
        for o in &obstacles {
            o.validate()?;
        }
        let index = GridIndex::build(&self.workspace, &obstacles);
        Ok(Self {
            workspace: self.workspace.clone(),
            obstacles,
            inflation: self.inflation,
            index,
        })
    }

    /// True iff `p` lies strictly inside the workspace and strictly outside
    /// every (closed) obstacle.
    pub fn point_free(&self, p: &Point<D>) -> bool {
        if self.workspace.is_empty() || !self.workspace.contains_strictly(p) {
            return false;
        }
        self.index
            .candidates(p, p)
            .into_iter()
            .all(|i| self.obstacles[i].signed_distance(p) > 0.0)
    }

    /// True iff the closed segment `a..b` misses every obstacle and stays
    /// strictly inside the workspace. Exact primitive tests, no sampling.
    pub fn segment_free(&self, a: &Point<D>, b: &Point<D>) -> bool {
        if self.workspace.is_empty() || !self.workspace.contains_strictly(a) || !self.workspace.contains_strictly(b) {
            return false;
        }
        let lo = a.inf(b);
        let hi = a.sup(b);
        self.index
            .candidates(&lo, &hi)
            .into_iter()
            .all(|i| !self.obstacles[i].intersects_segment(a, b))
    }

    /// Signed distance to the nearest obstacle surface, or to the workspace
    /// boundary when there are no obstacles.
    pub fn clearance(&self, p: &Point<D>) -> f64 {
        if self.obstacles.is_empty() {
            return self.workspace.boundary_distance(p);
        }
        self.obstacles
            .iter()
            .map(|o| o.signed_distance(p))
            .fold(f64::INFINITY, f64::min)
    }

    /// Minimum signed distance from the segment to any obstacle.
    pub fn segment_clearance(&self, a: &Point<D>, b: &Point<D>) -> f64 {
        if self.obstacles.is_empty() {
            return self.workspace.boundary_distance(a).min(self.workspace.boundary_distance(b));
        }
        self.obstacles
            .iter()
            .map(|o| o.segment_distance(a, b))
            .fold(f64::INFINITY, f64::min)
    }

    /// True iff the closed box `[lo, hi]` is inside the workspace and
    /// strictly separated from every obstacle.
    pub fn box_free(&self, lo: &Point<D>, hi: &Point<D>) -> bool {
        if !self.workspace.contains(lo) || !self.workspace.contains(hi) {
            return false;
        }
        self.index
            .candidates(lo, hi)
            .into_iter()
            .all(|i| self.obstacles[i].box_is_clear(lo, hi))
    }

    /// Workspace volume minus summed obstacle volume (overlaps ignored),
    /// floored at 5% of the workspace.
    pub fn free_volume_estimate(&self) -> f64 {
        let total = self.workspace.volume();
        let occupied: f64 = self.obstacles.iter().map(|o| o.volume()).sum();
        (total - occupied).max(0.05 * total)
    }
}
