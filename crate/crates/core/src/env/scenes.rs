//! Generators for the benchmark environments.

use nalgebra::{Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use super::{Environment, Obstacle, Scenario, StartState, Workspace};
use crate::error::{invalid, Result};

/// Tree shape distribution for [`poisson_forest`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ForestParams {
    /// Uniform tree height range (m).
    pub height_range: (f64, f64),
    /// Uniform trunk radius range (m).
    pub radius_range: (f64, f64),
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            height_range: (5.0, 10.0),
            radius_range: (0.05, 0.15),
        }
    }
}

/// Poisson forest of vertical trunks standing on the workspace floor.
///
/// The tree count is Poisson with mean `density * floor_area`; trunk
/// positions are uniform over the floor. Same seed, same forest.
pub fn poisson_forest(
    density: f64,
    workspace: &Workspace<3>,
    params: ForestParams,
    seed: u64,
) -> Result<Environment<3>> {
    if workspace.validate().is_err() || workspace.is_empty() {
        return invalid("poisson_forest: empty workspace");
    }
    if !(density > 0.0) || !density.is_finite() {
        return invalid("poisson_forest: density must be > 0");
    }
    let (h0, h1) = params.height_range;
    let (r0, r1) = params.radius_range;
    if !(h0 > 0.0 && h0 <= h1 && r0 > 0.0 && r0 <= r1) {
        return invalid("poisson_forest: ranges must be positive and ordered");
    }
    let ext = workspace.extent();
    let area = ext[0] * ext[1];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = Poisson::new(density * area)
        .map_err(|e| crate::Error::InvalidArgument(format!("poisson_forest: {e}")))?
        .sample(&mut rng) as usize;
    let mut trees = Vec::with_capacity(count);
    for _ in 0..count {
        let x = workspace.lower[0] + rng.random::<f64>() * ext[0];
        let y = workspace.lower[1] + rng.random::<f64>() * ext[1];
        let height = uniform(&mut rng, h0, h1);
        let radius = uniform(&mut rng, r0, r1);
        trees.push(Obstacle::Cylinder {
            base: Vector3::new(x, y, workspace.lower[2]),
            radius,
            height,
        });
    }
    Environment::new(workspace.clone(), trees)
}

fn uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

/// A cluttered 4 m x 2 m x 2 m volume with 200 thin axis-aligned rods
/// (5 mm thick, 0.2-0.6 m long) and 20 vertical poles (1 cm radius).
pub fn string_scene(seed: u64) -> Result<Environment<3>> {
    let ws = Workspace::new(Vector3::zeros(), Vector3::new(4.0, 2.0, 2.0))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut obstacles = Vec::with_capacity(220);
    for _ in 0..20 {
        let x = rng.random_range(0.5..3.5);
        let y = rng.random_range(0.1..1.9);
        obstacles.push(Obstacle::Cylinder {
            base: Vector3::new(x, y, 0.0),
            radius: 0.01,
            height: 2.0,
        });
    }
    let thickness = 0.005;
    for _ in 0..200 {
        let axis = rng.random_range(0..3usize);
        let len = rng.random_range(0.2..0.6);
        let c = Vector3::new(
            rng.random_range(0.5..3.5),
            rng.random_range(0.0..2.0),
            rng.random_range(0.0..2.0),
        );
        let mut half = Vector3::repeat(thickness / 2.0);
        half[axis] = len / 2.0;
        obstacles.push(Obstacle::Box {
            lower: c - half,
            upper: c + half,
        });
    }
    Environment::new(ws, obstacles)
}

/// Planar 5 m x 3 m maze on a 1 m cell grid, carved by a seeded
/// depth-first search. Returns the environment and the cell centers.
pub fn maze(seed: u64) -> Result<(Environment<2>, Vec<Vector2<f64>>)> {
    const NX: usize = 5;
    const NY: usize = 3;
    const WALL: f64 = 0.05;
    let ws = Workspace::new(Vector2::zeros(), Vector2::new(NX as f64, NY as f64))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // open[x][y][0]: passage to +x neighbour; open[x][y][1]: to +y neighbour
    let mut open = [[[false; 2]; NY]; NX];
    let mut visited = [[false; NY]; NX];
    let mut stack = vec![(0usize, 0usize)];
    visited[0][0] = true;
    while let Some(&(x, y)) = stack.last() {
        let mut nbrs = Vec::with_capacity(4);
        if x + 1 < NX && !visited[x + 1][y] {
            nbrs.push((x + 1, y));
        }
        if x > 0 && !visited[x - 1][y] {
            nbrs.push((x - 1, y));
        }
        if y + 1 < NY && !visited[x][y + 1] {
            nbrs.push((x, y + 1));
        }
        if y > 0 && !visited[x][y - 1] {
            nbrs.push((x, y - 1));
        }
        if nbrs.is_empty() {
            stack.pop();
            continue;
        }
        let (nx, ny) = nbrs[rng.random_range(0..nbrs.len())];
        if nx != x {
            open[x.min(nx)][y][0] = true;
        } else {
            open[x][y.min(ny)][1] = true;
        }
        visited[nx][ny] = true;
        stack.push((nx, ny));
    }
    let mut walls = Vec::new();
    for x in 0..NX {
        for y in 0..NY {
            if x + 1 < NX && !open[x][y][0] {
                let wx = (x + 1) as f64;
                walls.push(Obstacle::Box {
                    lower: Vector2::new(wx - WALL / 2.0, y as f64),
                    upper: Vector2::new(wx + WALL / 2.0, (y + 1) as f64),
                });
            }
            if y + 1 < NY && !open[x][y][1] {
                let wy = (y + 1) as f64;
                walls.push(Obstacle::Box {
                    lower: Vector2::new(x as f64, wy - WALL / 2.0),
                    upper: Vector2::new((x + 1) as f64, wy + WALL / 2.0),
                });
            }
        }
    }
    let centers = (0..NX)
        .flat_map(|x| (0..NY).map(move |y| Vector2::new(x as f64 + 0.5, y as f64 + 0.5)))
        .collect();
    Ok((Environment::new(ws, walls)?, centers))
}

/// Maze tour: start in one cell, then visit `legs` further cell centers in
/// seeded random order, each leg starting where the previous one ended.
pub fn maze_scenario(seed: u64, legs: usize) -> Result<Scenario<2>> {
    if legs == 0 {
        return invalid("maze tour needs at least one leg");
    }
    let (env, centers) = maze(seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut at = rng.random_range(0..centers.len());
    let start = centers[at];
    let mut goals = Vec::with_capacity(legs);
    for _ in 0..legs {
        let mut next = rng.random_range(0..centers.len() - 1);
        if next >= at {
            next += 1;
        }
        goals.push(centers[next]);
        at = next;
    }
    let s = Scenario {
        dim: 2,
        workspace: env.workspace().clone(),
        obstacles: env.obstacles().to_vec(),
        start: StartState {
            p: start,
            v: Vector2::zeros(),
            a: Vector2::zeros(),
        },
        goal: goals[0],
        goals: goals[1..].to_vec(),
        ell: 0.05,
        a_max: 20.0,
        robot_radius: 0.1,
        seed,
        events: Vec::new(),
    };
    s.validate()?;
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cube() -> Workspace<3> {
        Workspace::new(Vector3::zeros(), Vector3::repeat(10.0)).unwrap()
    }

    #[test]
    fn forest_is_reproducible() {
        let a = poisson_forest(3.2, &cube(), ForestParams::default(), 42).unwrap();
        let b = poisson_forest(3.2, &cube(), ForestParams::default(), 42).unwrap();
        assert_eq!(a.obstacles(), b.obstacles());
        let c = poisson_forest(3.2, &cube(), ForestParams::default(), 43).unwrap();
        assert_ne!(a.obstacles(), c.obstacles());
    }

    #[test]
    fn forest_count_mean_matches_density_times_area() {
        // mean of Poisson(3.2 * 100) is 320; the sample mean over 200 seeds
        // has standard error sqrt(320/200) ~ 1.26
        let n = 200;
        let total: usize = (0..n)
            .map(|s| poisson_forest(3.2, &cube(), ForestParams::default(), s).unwrap().obstacles().len())
            .sum();
        let mean = total as f64 / n as f64;
        assert!((mean - 320.0).abs() < 5.0, "mean {mean}");
    }

    #[test]
    fn forest_trees_respect_ranges() {
        let env = poisson_forest(1.0, &cube(), ForestParams::default(), 5).unwrap();
        for o in env.obstacles() {
            let Obstacle::Cylinder { base, radius, height } = o else {
                panic!("trees are cylinders")
            };
            assert!((5.0..=10.0).contains(height));
            assert!((0.05..=0.15).contains(radius));
            assert_eq!(base[2], 0.0);
        }
    }

    #[test]
    fn tiny_density_is_almost_surely_empty() {
        let env = poisson_forest(1e-12, &cube(), ForestParams::default(), 1).unwrap();
        assert!(env.obstacles().is_empty());
    }

    #[test]
    fn bad_arguments_rejected() {
        assert!(poisson_forest(0.0, &cube(), ForestParams::default(), 1).is_err());
        let flat = Workspace {
            lower: Vector3::zeros(),
            upper: Vector3::new(10.0, 0.0, 10.0),
        };
        assert!(poisson_forest(1.0, &flat, ForestParams::default(), 1).is_err());
    }

    #[test]
    fn maze_is_a_spanning_tree() {
        let (env, centers) = maze(3).unwrap();
        assert_eq!(centers.len(), 15);
        // 15 cells, 14 passages; 22 interior cell boundaries, so 8 walls
        assert_eq!(env.obstacles().len(), 22 - 14);
    }

    #[test]
    fn maze_tour_never_stays_put() {
        let s = maze_scenario(4, 6).unwrap();
        assert_eq!(s.goals.len(), 5);
        let mut prev = s.start.p;
        for g in std::iter::once(&s.goal).chain(&s.goals) {
            assert_ne!(*g, prev);
            prev = *g;
        }
    }

    #[test]
    fn string_scene_has_220_obstacles() {
        let env = string_scene(1).unwrap();
        assert_eq!(env.obstacles().len(), 220);
    }
}
