//! Asymptotically optimal sampling-based path search.
//!
//! RRT* with incremental rewiring; once a solution exists, samples are drawn
//! from the prolate hyperspheroid of points that could still shorten it.
//! Planning proceeds in rounds: the spheroid is refreshed at each round
//! boundary and the search stops early when a round brings no improvement.

mod informed;
mod tree;

use std::borrow::Cow;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use informed::{informed_sample, rewire_radius, uniform_sample, Spheroid};
pub use tree::Tree;

use crate::env::{unit_ball_volume, Environment};
use crate::error::{invalid, Error, Result};
use crate::geometry::Point;

#[derive(Clone, Debug, PartialEq)]
pub struct PlannerConfig {
    /// Upper bound on the number of rounds.
    pub rounds: usize,
    pub iters_per_round: usize,
    /// Steering step: maximum distance a new node is placed from its
    /// nearest neighbour (m).
    pub step: f64,
    /// Upper clamp of the rewiring radius (m). Clamping at the steering
    /// step itself stalls convergence in open space.
    pub max_radius: f64,
    /// Fraction of samples placed on the goal before the first solution.
    pub goal_bias: f64,
    /// Nodes within this distance of the goal count as reaching it (m).
    pub goal_radius: f64,
    /// Rewiring constant; derived from the free volume when `None`.
    pub gamma: Option<f64>,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            rounds: 4,
            iters_per_round: 2000,
            step: 0.5,
            max_radius: 1.0,
            goal_bias: 0.05,
            goal_radius: 0.005,
            gamma: None,
        }
    }
}

/// Collision-free polyline from start to goal.
#[derive(Clone, Debug, PartialEq)]
pub struct Path<const D: usize> {
    pub nodes: Vec<Point<D>>,
    /// Clearance of each node against the planning environment.
    pub node_clearance: Vec<f64>,
    /// Minimum clearance along each edge against the planning environment.
    pub edge_clearance: Vec<f64>,
}

impl<const D: usize> Path<D> {
    /// Path without clearance bookkeeping.
    pub fn from_nodes(nodes: Vec<Point<D>>) -> Self {
        Self {
            nodes,
            node_clearance: Vec::new(),
            edge_clearance: Vec::new(),
        }
    }

    /// Path with clearances measured in `env`.
    pub fn measured(nodes: Vec<Point<D>>, env: &Environment<D>) -> Self {
        let node_clearance = nodes.iter().map(|p| env.clearance(p)).collect();
        let edge_clearance = nodes.windows(2).map(|w| env.segment_clearance(&w[0], &w[1])).collect();
        Self {
            nodes,
            node_clearance,
            edge_clearance,
        }
    }

    pub fn start(&self) -> &Point<D> {
        &self.nodes[0]
    }

    pub fn end(&self) -> &Point<D> {
        self.nodes.last().expect("path has at least one node")
    }

    pub fn cost(&self) -> f64 {
        self.nodes.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
    }

    /// Smallest recorded edge clearance, if measured.
    pub fn min_clearance(&self) -> Option<f64> {
        self.edge_clearance.iter().copied().reduce(f64::min)
    }

    pub fn is_free_in(&self, env: &Environment<D>) -> bool {
        match self.nodes.as_slice() {
            [p] => env.point_free(p),
            nodes => nodes.windows(2).all(|w| env.segment_free(&w[0], &w[1])),
        }
    }
}

/// Incremental RRT* search over one environment, borrowed or owned.
pub struct Planner<'a, const D: usize> {
    env: Cow<'a, Environment<D>>,
    config: PlannerConfig,
    goal: Point<D>,
    gamma: f64,
    /// `None` when start and goal coincide.
    spheroid: Option<Spheroid<D>>,
    rng: ChaCha8Rng,
    tree: Tree<D>,
    /// Spheroid parameter used for sampling; refreshed between rounds.
    sampling_cost: f64,
    round_costs: Vec<f64>,
}

impl<'a, const D: usize> Planner<'a, D> {
    pub fn new(
        env: &'a Environment<D>,
        start: Point<D>,
        goal: Point<D>,
        config: PlannerConfig,
        seed: u64,
    ) -> Result<Self> {
        Self::build(Cow::Borrowed(env), start, goal, config, seed)
    }

    fn build(env: Cow<'a, Environment<D>>, start: Point<D>, goal: Point<D>, config: PlannerConfig, seed: u64) -> Result<Self> {
        if !(config.step > 0.0) || !(config.max_radius > 0.0) || !(config.goal_radius >= 0.0) || !(0.0..1.0).contains(&config.goal_bias) {
            return invalid("planner config: step > 0, max_radius > 0, goal_radius >= 0, goal_bias in [0,1)");
        }
        if !env.point_free(&start) {
            return Err(Error::PlannerFailure("start is not in free space".into()));
        }
        if !env.point_free(&goal) {
            return Err(Error::PlannerFailure("goal is not in free space".into()));
        }
        let cell = config.step;
        let gamma = match config.gamma {
            Some(g) if g > 0.0 => g,
            Some(_) => return invalid("gamma must be > 0"),
            None => default_gamma(D, env.free_volume_estimate()),
        };
        Ok(Self {
            env,
            config,
            goal,
            gamma,
            spheroid: Spheroid::new(&start, &goal).ok(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            tree: Tree::with_cell(start, cell),
            sampling_cost: f64::INFINITY,
            round_costs: Vec::new(),
        })
    }

    /// Like [`Planner::new`], keeping its own copy of the environment.
    pub fn owning(env: Environment<D>, start: Point<D>, goal: Point<D>, config: PlannerConfig, seed: u64) -> Result<Planner<'static, D>> {
        Planner::build(Cow::Owned(env), start, goal, config, seed)
    }

    pub fn tree(&self) -> &Tree<D> {
        &self.tree
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Best cost found after each completed round.
    pub fn round_costs(&self) -> &[f64] {
        &self.round_costs
    }

    /// Cost of the best goal-reaching branch, `INFINITY` if none yet.
    pub fn best_cost(&self) -> f64 {
        self.best_goal_node().map_or(f64::INFINITY, |(_, c)| c)
    }

    fn best_goal_node(&self) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for (i, p) in self.tree.nodes().iter().enumerate() {
            let gap = (p - self.goal).norm();
            if gap <= self.config.goal_radius {
                let c = self.tree.cost(i) + gap;
                if best.map_or(true, |(_, bc)| c < bc) {
                    best = Some((i, c));
                }
            }
        }
        best
    }

    /// Runs the configured rounds. Stops early when a round fails to reduce
    /// the cost reached by the previous one.
    pub fn plan(&mut self) -> Result<Path<D>> {
        for _ in 0..self.config.rounds {
            self.iterate(self.config.iters_per_round);
            let cost = self.best_cost();
            let stalled = match self.round_costs.last() {
                Some(prev) if prev.is_finite() => cost >= *prev,
                _ => false,
            };
            self.round_costs.push(cost);
            self.sampling_cost = cost;
            if stalled {
                break;
            }
        }
        self.path()
    }

    /// Continues the search for `budget` iterations inside the current
    /// spheroid. The returned path never costs more than before.
    pub fn refine(&mut self, budget: usize) -> Result<Path<D>> {
        self.sampling_cost = self.best_cost();
        self.iterate(budget);
        self.path()
    }

    /// Best path currently in the tree.
    pub fn path(&self) -> Result<Path<D>> {
        let (node, _) = self.best_goal_node().ok_or_else(|| {
            Error::PlannerFailure(format!(
                "no path to goal after {} nodes",
                self.tree.len()
            ))
        })?;
        let mut nodes = self.tree.branch(node);
        let last = *nodes.last().expect("branch is non-empty");
        if last != self.goal && self.env.segment_free(&last, &self.goal) {
            nodes.push(self.goal);
        }
        let path = Path::measured(nodes, &self.env);
        if path.nodes.len() > 1 && path.min_clearance().map_or(true, |c| !(c > 0.0)) {
            return Err(Error::PlannerFailure("path has no positive clearance".into()));
        }
        Ok(path)
    }

    fn sample(&mut self) -> Point<D> {
        let ws = self.env.workspace();
        if let (true, Some(sph)) = (self.sampling_cost.is_finite(), &self.spheroid) {
            loop {
                let x = sph
                    .sample(self.sampling_cost, &mut self.rng)
                    .expect("sampling cost never drops below the straight-line distance");
                if ws.contains_strictly(&x) {
                    return x;
                }
            }
        }
        if self.best_cost().is_infinite() && self.rng.random::<f64>() < self.config.goal_bias {
            return self.goal;
        }
        uniform_sample(ws, &mut self.rng)
    }

    fn iterate(&mut self, iters: usize) {
        for _ in 0..iters {
            let target = self.sample();
            self.extend(&target);
        }
    }

    /// One RRT* extension toward `target`. Returns the new node index.
    fn extend(&mut self, target: &Point<D>) -> Option<usize> {
        let step = self.config.step;
        let n = self.tree.len();
        let radius = if n >= 1 {
            rewire_radius(n + 1, D, self.gamma, self.config.max_radius).unwrap_or(step)
        } else {
            step
        };
        let nearest = self.tree.nearest(target);
        let from = self.tree.node(nearest);
        let delta = target - from;
        let dist = delta.norm();
        let new = if dist > step { from + delta * (step / dist) } else { *target };
        if dist == 0.0 || !self.env.point_free(&new) {
            return None;
        }
        let mut near = self.tree.within(&new, radius);
        if !near.contains(&nearest) {
            near.push(nearest);
        }
        // cheapest collision-free parent, ties to the lowest index
        let mut candidates: Vec<(f64, usize)> = near
            .iter()
            .map(|&j| (self.tree.cost(j) + (self.tree.node(j) - new).norm(), j))
            .collect();
        candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let (cost, parent) = candidates
            .iter()
            .copied()
            .find(|&(_, j)| self.env.segment_free(self.tree.node(j), &new))?;
        let id = self.tree.push(new, parent, cost);
        near.sort_unstable();
        for j in near {
            if j == parent {
                continue;
            }
            let via = cost + (self.tree.node(j) - new).norm();
            if via < self.tree.cost(j) - 1e-12 && self.env.segment_free(&new, self.tree.node(j)) {
                self.tree.rewire(j, id);
            }
        }
        Some(id)
    }

    pub fn write_tree_csv(&self, out: impl Write) -> Result<()> {
        self.tree.write_csv(out)
    }
}

/// Rewiring constant from the standard optimality condition, with the free
/// volume estimated from the environment.
pub fn default_gamma(dim: usize, free_volume: f64) -> f64 {
    let d = dim as f64;
    2.0 * ((1.0 + 1.0 / d) * free_volume / unit_ball_volume(dim)).powf(1.0 / d)
}

/// Plans a path between two free points.
pub fn plan_path<const D: usize>(
    env: &Environment<D>,
    start: Point<D>,
    goal: Point<D>,
    config: PlannerConfig,
    seed: u64,
) -> Result<Path<D>> {
    Planner::new(env, start, goal, config, seed)?.plan()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{Obstacle, Workspace};
    use nalgebra::{Vector2, Vector3};

    fn empty3() -> Environment<3> {
        Environment::new(Workspace::new(Vector3::zeros(), Vector3::repeat(10.0)).unwrap(), vec![]).unwrap()
    }

    #[test]
    fn straight_line_in_empty_space() {
        let env = empty3();
        let s = Vector3::new(1.0, 1.0, 1.0);
        let g = Vector3::new(9.0, 8.0, 7.0);
        let path = plan_path(&env, s, g, PlannerConfig::default(), 3).unwrap();
        assert_eq!(path.start(), &s);
        assert_eq!(path.end(), &g);
        assert!(path.cost() <= 1.05 * (g - s).norm(), "cost {}", path.cost());
        assert!(path.is_free_in(&env));
    }

    #[test]
    fn goal_inside_obstacle_fails() {
        let ws = Workspace::new(Vector2::zeros(), Vector2::repeat(4.0)).unwrap();
        let env = Environment::new(
            ws,
            vec![Obstacle::Sphere {
                center: Vector2::new(3.0, 3.0),
                radius: 0.5,
            }],
        )
        .unwrap();
        let err = plan_path(&env, Vector2::new(0.5, 0.5), Vector2::new(3.0, 3.0), PlannerConfig::default(), 1)
            .unwrap_err();
        assert!(matches!(err, Error::PlannerFailure(_)));
    }

    #[test]
    fn walled_off_goal_fails_after_budget() {
        let ws = Workspace::new(Vector2::zeros(), Vector2::repeat(4.0)).unwrap();
        let wall = Obstacle::Box {
            lower: Vector2::new(1.9, -1.0),
            upper: Vector2::new(2.1, 5.0),
        };
        let env = Environment::new(ws, vec![wall]).unwrap();
        let cfg = PlannerConfig {
            iters_per_round: 300,
            ..Default::default()
        };
        let err = plan_path(&env, Vector2::new(0.5, 0.5), Vector2::new(3.5, 3.5), cfg, 1).unwrap_err();
        assert!(matches!(err, Error::PlannerFailure(_)));
    }

    #[test]
    fn detours_around_an_obstacle() {
        let ws = Workspace::new(Vector2::zeros(), Vector2::new(6.0, 4.0)).unwrap();
        let wall = Obstacle::Box {
            lower: Vector2::new(2.8, 0.0),
            upper: Vector2::new(3.2, 3.0),
        };
        let env = Environment::new(ws, vec![wall]).unwrap();
        let path = plan_path(&env, Vector2::new(1.0, 1.0), Vector2::new(5.0, 1.0), PlannerConfig::default(), 9)
            .unwrap();
        assert!(path.is_free_in(&env));
        assert!(path.min_clearance().unwrap() > 0.0);
        // must climb over the wall top at y = 3
        assert!(path.nodes.iter().any(|p| p[1] > 3.0));
        assert!((path.end() - Vector2::new(5.0, 1.0)).norm() <= 0.005);
    }

    #[test]
    fn refine_never_increases_cost() {
        let env = empty3();
        let cfg = PlannerConfig {
            rounds: 1,
            iters_per_round: 400,
            ..Default::default()
        };
        let mut planner = Planner::new(&env, Vector3::repeat(1.0), Vector3::repeat(6.0), cfg, 4).unwrap();
        let mut path = planner.plan().unwrap();
        let same = planner.refine(0).unwrap();
        assert_eq!(same, path);
        for _ in 0..5 {
            let next = planner.refine(200).unwrap();
            assert!(next.cost() <= path.cost() + 1e-12);
            assert_eq!(next.start(), path.start());
            assert_eq!(next.end(), path.end());
            path = next;
        }
    }

    #[test]
    fn round_costs_are_monotone() {
        let ws = Workspace::new(Vector3::zeros(), Vector3::repeat(10.0)).unwrap();
        let env = crate::env::poisson_forest(1.0, &ws, Default::default(), 2)
            .unwrap()
            .inflate(0.2)
            .unwrap();
        let mut s = Vector3::new(1.0, 1.0, 3.0);
        let mut g = Vector3::new(9.0, 9.0, 3.0);
        while !env.point_free(&s) {
            s[0] += 0.1;
        }
        while !env.point_free(&g) {
            g[0] -= 0.1;
        }
        let mut planner = Planner::new(&env, s, g, PlannerConfig::default(), 17).unwrap();
        let path = planner.plan().unwrap();
        let costs = planner.round_costs();
        for w in costs.windows(2) {
            assert!(w[1] <= w[0]);
        }
        assert!(path.is_free_in(&env));
        assert!(planner.tree().check_costs(1e-9));
    }

    #[test]
    fn tree_csv_has_header_and_rows() {
        let env = empty3();
        let cfg = PlannerConfig {
            rounds: 1,
            iters_per_round: 50,
            ..Default::default()
        };
        let mut planner = Planner::new(&env, Vector3::repeat(1.0), Vector3::repeat(2.0), cfg, 4).unwrap();
        let _ = planner.plan();
        let mut buf = Vec::new();
        planner.write_tree_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "node,parent,cost,x0,x1,x2");
        assert_eq!(lines.count(), planner.tree().len());
    }
}
