use hypercorridor::bench::{
    density_sweep, ell_sweep, emit, feasibility_gate, separation_gate, summarize, trend_gate, EllSweep, EmitFormat,
    ForestSweep, TrialRecord, CSV_COLUMNS, PLOT_COLUMNS,
};
use hypercorridor::sampler::PlannerConfig;

fn light_forest() -> ForestSweep {
    let mut sweep = ForestSweep::default();
    sweep.pipeline.planner = PlannerConfig {
        rounds: 2,
        iters_per_round: 1500,
        ..Default::default()
    };
    sweep
}

fn without_timing(mut r: TrialRecord) -> TrialRecord {
    r.planning_time = None;
    r.qp_time = None;
    r
}

fn synthetic(value: f64, trial: usize, path_length: Option<f64>) -> TrialRecord {
    TrialRecord {
        sweep: "density".into(),
        value,
        trial,
        seed: trial as u64,
        path_found: path_length.is_some() as u8,
        qp_optimal: path_length.is_some() as u8,
        verified: path_length.is_some() as u8,
        success: path_length.is_some() as u8,
        path_length,
        trajectory_length: path_length.map(|l| l * 1.01),
        max_speed: path_length.map(|l| l / 10.0),
        max_accel: Some(20.0),
        max_separation: Some(0.05),
        analytic_separation: Some(0.06),
        separation_bound: Some(0.1299),
        kkt_residual: Some(1e-10),
        steps: Some(100 + trial),
        qp_variables: Some(3 * (101 + trial)),
        qp_iterations: Some(12),
        planning_time: Some(0.1 * (trial + 1) as f64),
        qp_time: Some(0.01),
    }
}

#[test]
fn density_sweep_is_deterministic_and_honest() {
    let sweep = light_forest();
    let a = density_sweep(&[0.7, 2.2], 2, &sweep, 5).unwrap();
    let b = density_sweep(&[0.7, 2.2], 2, &sweep, 5).unwrap();
    assert_eq!(a.len(), 4);
    let strip = |v: Vec<TrialRecord>| v.into_iter().map(without_timing).collect::<Vec<_>>();
    assert_eq!(strip(a.clone()), strip(b));
    for r in &a {
        if r.success == 1 {
            assert_eq!((r.qp_optimal, r.verified, r.path_found), (1, 1, 1));
        }
        if r.path_found == 1 {
            assert_eq!(r.success, 1, "trial {} at {} failed after finding a path", r.trial, r.value);
            assert!(r.max_separation.unwrap() <= r.separation_bound.unwrap() + 1e-9);
        }
    }
    assert!(density_sweep(&[5.0], 1, &sweep, 5).is_err());
}

#[test]
fn narrowest_corridor_has_the_most_variables() {
    let mut sweep = EllSweep::default();
    sweep.pipeline.planner.rounds = 2;
    let ells = [0.02, 0.035];
    let recs = ell_sweep(&ells, 2, &sweep, 3).unwrap();
    let mut compared = 0;
    for t in 0..2 {
        let vars = |ell: f64| recs.iter().find(|r| r.value == ell && r.trial == t).and_then(|r| r.qp_variables);
        if let (Some(narrow), Some(wide)) = (vars(0.02), vars(0.035)) {
            assert!(narrow > wide, "trial {t}: {narrow} vs {wide}");
            compared += 1;
        }
    }
    assert!(compared > 0);
    assert!(recs.iter().all(|r| r.success == r.path_found));
}

#[test]
fn csv_means_equal_recomputed_means() {
    let recs: Vec<TrialRecord> = (0..6)
        .map(|i| synthetic(if i < 4 { 0.7 } else { 3.2 }, i, (i != 2).then_some(8.0 + i as f64)))
        .collect();
    let mut out = Vec::new();
    emit(&recs, EmitFormat::Csv, &mut out).unwrap();
    let mut reader = csv::Reader::from_reader(out.as_slice());
    assert_eq!(reader.headers().unwrap().iter().collect::<Vec<_>>(), CSV_COLUMNS);
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    let trials: Vec<_> = rows.iter().filter(|r| &r[0] == "trial").collect();
    let means: Vec<_> = rows.iter().filter(|r| &r[0] == "mean").collect();
    assert_eq!(trials.len(), 6);
    assert_eq!(means.len(), 2);
    let col = |name: &str| CSV_COLUMNS.iter().position(|c| *c == name).unwrap();
    for m in means {
        let group: Vec<_> = trials.iter().filter(|r| r[col("value")] == m[col("value")]).collect();
        assert_eq!(m[col("trials")].parse::<usize>().unwrap(), group.len());
        for name in ["path_found", "success", "path_length", "max_speed", "max_separation", "steps", "planning_time"] {
            let xs: Vec<f64> = group.iter().filter_map(|r| r[col(name)].parse().ok()).collect();
            let expect = xs.iter().sum::<f64>() / xs.len() as f64;
            let got: f64 = m[col(name)].parse().unwrap();
            assert!((got - expect).abs() <= 1e-12 * expect.abs().max(1.0), "{name}: {got} vs {expect}");
        }
    }
}

#[test]
fn empty_input_gives_headers_only() {
    let mut out = Vec::new();
    emit(&[], EmitFormat::Csv, &mut out).unwrap();
    assert_eq!(String::from_utf8(out).unwrap().trim_end(), CSV_COLUMNS.join(","));
    let mut out = Vec::new();
    emit(&[], EmitFormat::PlotData, &mut out).unwrap();
    assert_eq!(String::from_utf8(out).unwrap().trim_end(), format!("# {}", PLOT_COLUMNS.join(" ")));
}

#[test]
fn plot_data_has_one_line_per_group() {
    let recs: Vec<TrialRecord> = (0..9).map(|i| synthetic(0.7 + (i % 3) as f64, i, Some(9.0))).collect();
    let mut out = Vec::new();
    emit(&recs, EmitFormat::PlotData, &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let lines: Vec<_> = text.lines().skip(1).collect();
    assert_eq!(lines.len(), 3);
    assert!(lines.iter().all(|l| l.split_whitespace().count() == PLOT_COLUMNS.len()));
    assert_eq!(summarize(&recs).len(), 3);
}

#[test]
fn gates_catch_failures() {
    let good: Vec<TrialRecord> = (0..4).map(|i| synthetic(0.7, i, Some(9.0))).collect();
    assert!(feasibility_gate(&good).passed);
    assert!(separation_gate(&good).passed);

    let mut bad = good.clone();
    bad[1].qp_optimal = 0;
    bad[1].success = 0;
    assert!(!feasibility_gate(&bad).passed);

    let mut wide = good.clone();
    wide[2].analytic_separation = Some(0.2);
    assert!(!separation_gate(&wide).passed);

    // a trial without a path does not count against feasibility
    let mut missing = good;
    missing.push(synthetic(0.7, 9, None));
    assert!(feasibility_gate(&missing).passed);
    assert!(!feasibility_gate(&[synthetic(0.7, 0, None)]).passed);
}

#[test]
fn trend_gate_reads_group_means() {
    let rising: Vec<TrialRecord> = (0..4).map(|i| synthetic(0.5 + i as f64, i, Some(8.0 + i as f64))).collect();
    assert!(trend_gate("len", &rising, |g| g.mean_path_length, 0.0).passed);
    let falling: Vec<TrialRecord> = (0..4).map(|i| synthetic(0.5 + i as f64, i, Some(8.0 - i as f64))).collect();
    assert!(!trend_gate("len", &falling, |g| g.mean_path_length, 0.0).passed);
    // a constant quantity has no defined correlation
    let flat: Vec<TrialRecord> = (0..4).map(|i| synthetic(0.5 + i as f64, i, Some(8.0))).collect();
    assert!(!trend_gate("len", &flat, |g| g.mean_path_length, 0.0).passed);
}
