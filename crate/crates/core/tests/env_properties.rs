use hypercorridor::env::{poisson_forest, Environment, ForestParams, Obstacle, Workspace};
use nalgebra::Vector3;
use proptest::prelude::*;
use proptest::test_runner::Config;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_obstacle(rng: &mut impl Rng) -> Obstacle<3> {
    let c = Vector3::from_fn(|_, _| rng.random_range(0.5..2.5));
    match rng.random_range(0..3) {
        0 => Obstacle::Sphere {
            center: c,
            radius: rng.random_range(0.05..0.5),
        },
        1 => Obstacle::Cylinder {
            base: c,
            radius: rng.random_range(0.05..0.4),
            height: rng.random_range(0.1..1.0),
        },
        _ => {
            let half = Vector3::from_fn(|_, _| rng.random_range(0.05..0.4));
            Obstacle::Box {
                lower: c - half,
                upper: c + half,
            }
        }
    }
}

fn random_env(rng: &mut impl Rng) -> Environment<3> {
    let ws = Workspace::new(Vector3::zeros(), Vector3::repeat(3.0)).unwrap();
    let n = rng.random_range(0..6);
    Environment::new(ws, (0..n).map(|_| random_obstacle(rng)).collect()).unwrap()
}

#[test]
fn free_after_inflation_means_clear_of_raw_obstacles() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut envs: Vec<(Environment<3>, f64, Environment<3>)> = Vec::new();
    for _ in 0..200 {
        let raw = random_env(&mut rng);
        let margin = rng.random_range(0.0..0.3);
        let grown = raw.inflate(margin).unwrap();
        envs.push((raw, margin, grown));
    }
    let mut free = 0;
    for i in 0..100_000 {
        let (raw, margin, grown) = &envs[i % envs.len()];
        let p = Vector3::from_fn(|_, _| rng.random_range(0.0..3.0));
        if grown.point_free(&p) {
            free += 1;
            assert!(raw.clearance(&p) > *margin, "p={p:?} margin={margin}");
        }
    }
    assert!(free > 10_000, "too few free samples ({free}) to mean anything");
}

#[test]
fn segment_test_agrees_with_dense_sampling() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let step = 1e-4;
    let (mut hits, mut grazes) = (0, 0);
    for i in 0..10_000 {
        // new scene every 50 segments
        let env = random_env(&mut ChaCha8Rng::seed_from_u64(i / 50));
        // aim through a jittered obstacle center so that about half the segments hit
        let target = match env.obstacles() {
            [] => Vector3::repeat(1.5),
            obs => {
                let (lo, hi) = obs[rng.random_range(0..obs.len())].aabb();
                (lo + hi) / 2.0
            }
        } + Vector3::from_fn(|_, _| rng.random_range(-0.4..0.4));
        let dir = Vector3::<f64>::from_fn(|_, _| rng.random_range(-1.0..1.0)).normalize() * rng.random_range(0.01..0.6);
        let clip = |p: Vector3<f64>| p.map(|x| x.clamp(0.05, 2.95));
        let (a, b) = (clip(target - dir), clip(target + dir));
        let n = ((b - a).norm() / step).ceil() as usize;
        let sampled_free = (0..=n).all(|j| env.point_free(&(a + (b - a) * (j as f64 / n as f64))));
        let exact = env.segment_free(&a, &b);
        if sampled_free && !exact {
            // contact between samples; the exact distance must be tiny
            assert!(env.segment_clearance(&a, &b) <= step, "{a:?} -> {b:?}");
            grazes += 1;
        } else {
            assert_eq!(sampled_free, exact, "{a:?} -> {b:?}");
        }
        hits += !exact as usize;
    }
    eprintln!("{hits} blocked, {grazes} grazing");
    assert!(hits > 500, "only {hits} blocked segments");
    assert!(grazes < 50);
}

#[test]
fn forest_reproducible_bit_for_bit() {
    let ws = Workspace::new(Vector3::zeros(), Vector3::repeat(10.0)).unwrap();
    for seed in 0..20 {
        let a = poisson_forest(2.2, &ws, ForestParams::default(), seed).unwrap();
        let b = poisson_forest(2.2, &ws, ForestParams::default(), seed).unwrap();
        let bits = |e: &Environment<3>| serde_json::to_string(e.obstacles()).unwrap();
        assert_eq!(bits(&a), bits(&b));
    }
    let a = poisson_forest(2.2, &ws, ForestParams::default(), 1).unwrap();
    let b = poisson_forest(2.2, &ws, ForestParams::default(), 2).unwrap();
    assert_ne!(a.obstacles(), b.obstacles());
}

#[test]
fn boundary_point_is_in_collision() {
    let ws = Workspace::new(Vector3::zeros(), Vector3::repeat(3.0)).unwrap();
    let env = Environment::new(
        ws,
        vec![Obstacle::Box {
            lower: Vector3::repeat(1.0),
            upper: Vector3::repeat(2.0),
        }],
    )
    .unwrap();
    let p = Vector3::new(2.0, 1.5, 1.5);
    assert_eq!(env.clearance(&p), 0.0);
    assert!(!env.point_free(&p));
    assert!(env.point_free(&Vector3::new(2.0 + 1e-12, 1.5, 1.5)));
}

proptest! {
    #![proptest_config(Config { failure_persistence: None, ..Config::default() })]

    #[test]
    fn inflated_obstacles_contain_the_originals(seed in 0u64..1000, margin in 0.0f64..0.5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let o = random_obstacle(&mut rng);
        let g = o.grown(margin);
        for _ in 0..50 {
            let p = Vector3::from_fn(|_, _| rng.random_range(0.0..3.0));
            let d = o.signed_distance(&p);
            // growth is at least the Minkowski sum, never less
            prop_assert!(g.signed_distance(&p) <= d - margin + 1e-12);
        }
    }

    #[test]
    fn clearance_is_min_of_obstacle_distances(seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let env = random_env(&mut rng);
        prop_assume!(!env.obstacles().is_empty());
        let p = Vector3::from_fn(|_, _| rng.random_range(0.0..3.0));
        let brute = env.obstacles().iter().map(|o| o.signed_distance(&p)).fold(f64::INFINITY, f64::min);
        prop_assert_eq!(env.clearance(&p), brute);
    }
}
