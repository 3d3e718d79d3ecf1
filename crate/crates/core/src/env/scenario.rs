//! JSON scenario files.
//!
//! ```json
//! {
//!   "dim": 2,
//!   "workspace": { "lower": [0, 0], "upper": [5, 3] },
//!   "obstacles": [ { "type": "box", "lower": [0.975, 0], "upper": [1.025, 1] } ],
//!   "start": { "p": [0.5, 0.5] },
//!   "goal": [4.5, 2.5],
//!   "goals": [[0.5, 2.5]],
//!   "ell": 0.05,
//!   "a_max": 20,
//!   "robot_radius": 0.1,
//!   "seed": 1,
//!   "events": [ { "time": 2.0, "kind": "goal_change", "goal": [2.5, 1.5] } ]
//! }
//! ```
//!
//! Lengths are meters, times seconds, accelerations m/s². `start.v` and
//! `start.a` default to zero. `goals` lists further goals, each issued
//! once the previous one is reached. Events are `goal_change { goal }` or
//! `obstacle_update { add, remove }`, where `remove` holds indices into the
//! obstacle list as it stood before the update and `add` is appended after
//! the removals.

use serde::{Deserialize, Serialize};

use super::{Environment, Obstacle, Workspace};
use crate::corridor::{timing_params, State};
use crate::error::{Error, Result};
use crate::geometry::Point;

fn zero<const D: usize>() -> Point<D> {
    Point::zeros()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StartState<const D: usize> {
    pub p: Point<D>,
    #[serde(default = "zero")]
    pub v: Point<D>,
    #[serde(default = "zero")]
    pub a: Point<D>,
}

impl<const D: usize> From<StartState<D>> for State<D> {
    fn from(s: StartState<D>) -> Self {
        State { p: s.p, v: s.v, a: s.a }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind<const D: usize> {
    GoalChange {
        goal: Point<D>,
    },
    ObstacleUpdate {
        #[serde(default)]
        add: Vec<Obstacle<D>>,
        #[serde(default)]
        remove: Vec<usize>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioEvent<const D: usize> {
    /// Seconds from the start of the run.
    pub time: f64,
    #[serde(flatten)]
    pub kind: EventKind<D>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario<const D: usize> {
    pub dim: usize,
    pub workspace: Workspace<D>,
    #[serde(default)]
    pub obstacles: Vec<Obstacle<D>>,
    pub start: StartState<D>,
    pub goal: Point<D>,
    #[serde(default)]
    pub goals: Vec<Point<D>>,
    pub ell: f64,
    pub a_max: f64,
    #[serde(default)]
    pub robot_radius: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub events: Vec<ScenarioEvent<D>>,
}

fn bad<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Scenario(msg.into()))
}

impl<const D: usize> Scenario<D> {
    pub fn validate(&self) -> Result<()> {
        if self.dim != D {
            return bad(format!("dim {} does not match {D}-dimensional data", self.dim));
        }
        self.workspace.validate()?;
        for o in &self.obstacles {
            o.validate()?;
        }
        let (v_max, _) = timing_params(self.ell, self.a_max)?;
        if !(self.robot_radius >= 0.0 && self.robot_radius.is_finite()) {
            return bad("robot_radius must be finite and >= 0");
        }
        let start: State<D> = self.start.clone().into();
        if !start.is_allowed(v_max, self.a_max, 1e-12) {
            return bad("start velocity or acceleration exceeds the limits");
        }
        for p in std::iter::once(&start.p).chain(std::iter::once(&self.goal)).chain(&self.goals) {
            if !self.workspace.contains(p) {
                return bad(format!("point {:?} outside the workspace", p.as_slice()));
            }
        }
        let mut last = 0.0;
        for e in &self.events {
            if !(e.time >= last && e.time.is_finite()) {
                return bad("event times must be finite, >= 0 and non-decreasing");
            }
            last = e.time;
            match &e.kind {
                EventKind::GoalChange { goal } if !self.workspace.contains(goal) => {
                    return bad("goal change outside the workspace");
                }
                EventKind::ObstacleUpdate { add, .. } => {
                    for o in add {
                        o.validate()?;
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Raw environment at time zero.
    pub fn environment(&self) -> Result<Environment<D>> {
        Environment::new(self.workspace.clone(), self.obstacles.clone())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Obstacle list after an update: removals by index, then additions.
pub fn apply_update<const D: usize>(obstacles: &[Obstacle<D>], add: &[Obstacle<D>], remove: &[usize]) -> Result<Vec<Obstacle<D>>> {
    if let Some(i) = remove.iter().find(|&&i| i >= obstacles.len()) {
        return bad(format!("obstacle index {i} out of range"));
    }
    let mut out: Vec<_> = obstacles
        .iter()
        .enumerate()
        .filter(|(i, _)| !remove.contains(i))
        .map(|(_, o)| o.clone())
        .collect();
    out.extend_from_slice(add);
    Ok(out)
}

/// A scenario of either supported dimension.
#[derive(Clone, Debug, PartialEq)]
pub enum AnyScenario {
    Planar(Scenario<2>),
    Spatial(Scenario<3>),
}

impl AnyScenario {
    /// Parses and validates; the `dim` field selects the variant.
    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Probe {
            dim: usize,
        }
        let Probe { dim } = serde_json::from_str(text)?;
        let s = match dim {
            2 => AnyScenario::Planar(serde_json::from_str(text)?),
            3 => AnyScenario::Spatial(serde_json::from_str(text)?),
            d => return bad(format!("unsupported dim {d}; expected 2 or 3")),
        };
        match &s {
            AnyScenario::Planar(s) => s.validate()?,
            AnyScenario::Spatial(s) => s.validate()?,
        }
        Ok(s)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
