use hypercorridor::corridor::{build_waypoints, State};
use hypercorridor::env::{Environment, Workspace};
use hypercorridor::qp::{assemble, solve, QpStatus, SolverSettings};
use hypercorridor::sampler::Path;
use hypercorridor::trajectory::{integrate, separation, step_deviation_bound, verify, Trajectory, VerifyOptions};
use nalgebra::{Vector1, Vector2, Vector3};
use proptest::prelude::*;
use proptest::test_runner::Config;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_trajectory(seed: u64, steps: usize) -> Trajectory<3> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = State {
        p: Vector3::from_fn(|_, _| rng.random_range(-1.0..1.0)),
        v: Vector3::from_fn(|_, _| rng.random_range(-1.0..1.0)),
        a: Vector3::zeros(),
    };
    let accel: Vec<Vector3<f64>> = (0..=steps).map(|_| Vector3::from_fn(|_, _| rng.random_range(-20.0..20.0))).collect();
    let mut start = start;
    start.a = accel[0];
    Trajectory::new(&start, &accel, rng.random_range(0.02..0.2)).unwrap()
}

fn close(a: &Vector3<f64>, b: &Vector3<f64>, rel: f64) -> bool {
    (a - b).norm() <= rel * (1.0 + a.norm().max(b.norm()))
}

proptest! {
    #![proptest_config(Config { failure_persistence: None, ..Config::default() })]

    #[test]
    fn grid_samples_equal_the_knots(seed in any::<u64>(), steps in 2usize..60) {
        let tr = random_trajectory(seed, steps);
        for (k, knot) in tr.knots().iter().enumerate() {
            let s = tr.sample(k as f64 * tr.h).unwrap();
            prop_assert!(close(&s.p, &knot.p, 1e-12));
            prop_assert!(close(&s.v, &knot.v, 1e-12));
        }
    }

    #[test]
    fn position_and_velocity_are_continuous(seed in any::<u64>(), steps in 2usize..60) {
        let tr = random_trajectory(seed, steps);
        let h = tr.h;
        for k in 1..=tr.steps() {
            // left limit from the previous step's polynomial
            let x = &tr.knots()[k - 1];
            let p = x.p + x.v * h + x.a * (h * h / 2.0);
            let v = x.v + x.a * h;
            let right = &tr.knots()[k];
            prop_assert!(close(&p, &right.p, 1e-12));
            prop_assert!(close(&v, &right.v, 1e-12));
        }
    }

    #[test]
    fn knots_match_the_affine_qp_maps(seed in any::<u64>(), steps in 2usize..40) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let nodes: Vec<Vector3<f64>> = vec![Vector3::zeros(), Vector3::from_fn(|_, _| rng.random_range(0.5..1.0))];
        let ell = (nodes[1].norm() / steps as f64).max(0.01);
        let plan = build_waypoints(&Path::from_nodes(nodes), ell, 20.0).unwrap();
        let start = State { p: plan.waypoints[0], v: Vector3::new(0.3, -0.2, 0.1) * plan.v_max, a: Vector3::zeros() };
        let inst = assemble(&plan, &start, &State::at_rest(*plan.goal())).unwrap();
        let accel: Vec<Vector3<f64>> = (0..=plan.steps())
            .map(|k| if k == 0 { Vector3::zeros() } else { Vector3::from_fn(|_, _| rng.random_range(-20.0..20.0)) })
            .collect();
        let knots = integrate(&start, &accel, plan.h);
        for axis in 0..3 {
            let col: Vec<f64> = accel.iter().map(|a| a[axis]).collect();
            for (k, x) in knots.iter().enumerate() {
                let p = inst.position(axis, k, &col);
                let v = inst.velocity(axis, k, &col);
                prop_assert!((p - x.p[axis]).abs() <= 1e-12 * (1.0 + p.abs()) * (k.max(1) as f64));
                prop_assert!((v - x.v[axis]).abs() <= 1e-12 * (1.0 + v.abs()) * (k.max(1) as f64));
            }
        }
    }

    #[test]
    fn step_bound_covers_dense_samples(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ell = 0.05;
        let nodes = vec![Vector3::zeros(), Vector3::from_fn(|_, _| rng.random_range(0.3..1.0))];
        let plan = build_waypoints(&Path::from_nodes(nodes), ell, 20.0).unwrap();
        let accel: Vec<Vector3<f64>> = (0..=plan.steps()).map(|_| Vector3::from_fn(|_, _| rng.random_range(-20.0..20.0))).collect();
        let tr = Trajectory::new(&State { a: accel[0], ..State::at_rest(plan.waypoints[0]) }, &accel, plan.h).unwrap();
        for k in 0..plan.steps() {
            let bound = step_deviation_bound(&tr, &plan, k);
            let (w0, w1) = (plan.waypoints[k], plan.waypoints[k + 1]);
            let mut worst = 0.0f64;
            for j in 0..=200 {
                let tau = tr.h * j as f64 / 200.0;
                let p = tr.sample(k as f64 * tr.h + tau).unwrap().p;
                let chord = w0 + (w1 - w0) * (tau / tr.h);
                worst = worst.max((p - chord).norm());
            }
            prop_assert!(worst <= bound * (1.0 + 1e-12) + 1e-15, "k {}: {} > {}", k, worst, bound);
        }
    }

    #[test]
    fn single_axis_bound_is_tight(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ell = 0.05;
        let plan = build_waypoints(&Path::from_nodes(vec![Vector1::new(0.0), Vector1::new(0.4)]), ell, 20.0).unwrap();
        let accel: Vec<Vector1<f64>> = (0..=plan.steps()).map(|_| Vector1::new(rng.random_range(-20.0..20.0))).collect();
        let tr = Trajectory::new(&State { a: accel[0], ..State::at_rest(plan.waypoints[0]) }, &accel, plan.h).unwrap();
        for k in 0..plan.steps() {
            let bound = step_deviation_bound(&tr, &plan, k);
            let (w0, w1) = (plan.waypoints[k], plan.waypoints[k + 1]);
            let n = 20_000;
            let worst = (0..=n)
                .map(|j| {
                    let tau = tr.h * j as f64 / n as f64;
                    let p = tr.sample(k as f64 * tr.h + tau).unwrap().p;
                    (p - (w0 + (w1 - w0) * (tau / tr.h)))[0].abs()
                })
                .fold(0.0, f64::max);
            prop_assert!(bound >= worst - 1e-15);
            prop_assert!(bound - worst <= 1e-6 * (1.0 + bound));
        }
    }
}

#[test]
fn separation_matches_a_parameter_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..20 {
        let path: Vec<Vector2<f64>> = (0..4).map(|_| Vector2::from_fn(|_, _| rng.random_range(-1.0..1.0))).collect();
        let accel: Vec<Vector2<f64>> = (0..12).map(|_| Vector2::from_fn(|_, _| rng.random_range(-5.0..5.0))).collect();
        let start = State {
            p: Vector2::from_fn(|_, _| rng.random_range(-1.0..1.0)),
            v: Vector2::zeros(),
            a: accel[0],
        };
        let tr = Trajectory::new(&start, &accel, 0.1).unwrap();
        for j in 0..10 {
            let t = tr.duration() * j as f64 / 9.0;
            let p = tr.sample(t).unwrap().p;
            let n = 10_000;
            let grid = path
                .windows(2)
                .flat_map(|w| (0..=n).map(move |i| (p - (w[0] + (w[1] - w[0]) * (i as f64 / n as f64))).norm()))
                .fold(f64::INFINITY, f64::min);
            let exact = separation(&tr, &path, t).unwrap();
            assert!(exact <= grid + 1e-12);
            assert!(grid - exact <= 1e-6 * 1.0f64.max(path.windows(2).map(|w| (w[1] - w[0]).norm()).fold(0.0, f64::max)));
        }
    }
}

#[test]
fn qp_trajectories_verify_in_free_space() {
    let ws = Workspace::new(Vector3::repeat(-1.0), Vector3::repeat(3.0)).unwrap();
    let env = Environment::new(ws, vec![]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..6 {
        let nodes = (0..4).map(|_| Vector3::from_fn(|_, _| rng.random_range(0.0..2.0))).collect();
        let plan = build_waypoints(&Path::from_nodes(nodes), 0.05, 20.0).unwrap();
        let inst = assemble(&plan, &State::at_rest(*plan.start()), &State::at_rest(*plan.goal())).unwrap();
        let sol = solve(&inst, &SolverSettings::default(), None);
        assert_eq!(sol.status, QpStatus::Optimal);
        let tr = Trajectory::new(&State::at_rest(*plan.start()), &sol.accelerations_as::<3>(), plan.h).unwrap();
        let rep = verify(&tr, &plan.path, &plan, &env, &VerifyOptions::default()).unwrap();
        assert!(rep.passed, "{rep:?}");
        assert!(rep.max_separation <= plan.separation_bound() + 1e-9);
        assert!(rep.max_separation <= rep.analytic_separation + 1e-12);
        assert!(rep.in_region.iter().all(|&b| b));
    }
}

#[test]
fn out_of_range_times_are_rejected() {
    let tr = random_trajectory(1, 5);
    assert!(tr.sample(-1e-9).is_err());
    assert!(tr.sample(tr.duration() + 1e-6).is_err());
    assert!(tr.sample(tr.duration()).is_ok());
}

#[test]
fn coarse_verification_step_is_rejected() {
    let plan = build_waypoints(&Path::from_nodes(vec![Vector3::zeros(), Vector3::repeat(0.3)]), 0.05, 20.0).unwrap();
    let accel = vec![Vector3::zeros(); plan.steps() + 1];
    let tr = Trajectory::new(&State::at_rest(*plan.start()), &accel, plan.h).unwrap();
    let env = Environment::new(Workspace::new(Vector3::repeat(-1.0), Vector3::repeat(1.0)).unwrap(), vec![]).unwrap();
    let opts = VerifyOptions {
        dt: Some(plan.h / 10.0),
        ..Default::default()
    };
    assert!(verify(&tr, &plan.path, &plan, &env, &opts).is_err());
}

#[test]
fn csv_rows_cover_the_duration() {
    let tr = random_trajectory(2, 10);
    let dt = tr.h / 4.0;
    let mut out = Vec::new();
    tr.write_csv(&mut out, dt, 0.0).unwrap();
    let text = String::from_utf8(out).unwrap();
    let mut rows = csv::Reader::from_reader(text.as_bytes());
    assert_eq!(rows.headers().unwrap().len(), 10);
    let times: Vec<f64> = rows.records().map(|r| r.unwrap()[0].parse().unwrap()).collect();
    assert_eq!(times[0], 0.0);
    assert!((times.last().unwrap() - tr.duration()).abs() < 1e-12);
    assert!(times.windows(2).all(|w| w[1] > w[0]));
}
