use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use hypercorridor::bench::{
    density_gates, ell_gates, emit, sample_endpoints, summarize, EllSweep, EmitFormat, ForestSweep, Gate, TrialRecord,
    KKT_LIMIT, SEPARATION_SLACK,
};
use hypercorridor::corridor::State;
use hypercorridor::env::{maze_scenario, poisson_forest, AnyScenario, Environment, Scenario, Workspace};
use hypercorridor::geometry::Point;
use hypercorridor::pipeline::{trajectory_along, PipelineParams};
use hypercorridor::qp::QpStatus;
use hypercorridor::replan::{run, RunParams};
use hypercorridor::sampler::Planner;
use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const DEFAULT_SEED: u64 = 2024;

#[derive(Parser)]
#[command(name = "hypercorridor", version, about = "Corridor-constrained trajectory planning benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Success rate, separation and timing over Poisson forests of varying density.
    ForestSweep(ForestArgs),
    /// Path length, speed and problem size over a grid of corridor half-widths.
    EllSweep(EllArgs),
    /// Online replanning over a scenario file or a generated maze tour.
    RunScenario(ScenarioArgs),
    /// Plan one query and dump every intermediate artifact.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct Common {
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct ForestArgs {
    /// Tree densities (trees/m²), comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [0.7, 1.2, 1.7, 2.2, 2.7, 3.2])]
    densities: Vec<f64>,
    #[arg(long, default_value_t = 50)]
    trials: usize,
    /// Corridor half-width (m).
    #[arg(long, default_value_t = 0.05)]
    ell: f64,
    #[arg(long, default_value_t = 20.0)]
    a_max: f64,
    #[arg(long, default_value_t = 0.0)]
    robot_radius: f64,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct EllArgs {
    /// Corridor half-widths (m), comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [0.010, 0.015, 0.020, 0.025, 0.030, 0.035])]
    ells: Vec<f64>,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    /// Seed of the fixed obstacle scene.
    #[arg(long, default_value_t = 7)]
    scene_seed: u64,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct ScenarioArgs {
    /// Scenario JSON file.
    #[arg(required_unless_present = "maze", conflicts_with = "maze")]
    file: Option<PathBuf>,
    /// Generate a maze tour from this seed instead of reading a file.
    #[arg(long)]
    maze: Option<u64>,
    /// Goals in the generated maze tour.
    #[arg(long, default_value_t = 5)]
    legs: usize,
    /// Commit horizon (s).
    #[arg(long, default_value_t = 0.5)]
    commit_horizon: f64,
    /// Rewiring iterations between commits.
    #[arg(long, default_value_t = 200)]
    refine_budget: usize,
    /// Sampling interval of the leg CSVs (s).
    #[arg(long, default_value_t = 0.01)]
    dt: f64,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct VerifyArgs {
    /// Take start, first goal and parameters from this scenario file
    /// instead of drawing a forest query.
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long, default_value_t = 2.2)]
    density: f64,
    #[arg(long, default_value_t = 0.05)]
    ell: f64,
    #[arg(long, default_value_t = 20.0)]
    a_max: f64,
    /// Sampling interval of the trajectory CSV (s).
    #[arg(long, default_value_t = 0.01)]
    dt: f64,
    #[command(flatten)]
    common: Common,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let gates = match cli.command {
        Command::ForestSweep(a) => forest_sweep(a),
        Command::EllSweep(a) => ell_sweep(a),
        Command::RunScenario(a) => run_scenario(a),
        Command::Verify(a) => verify(a),
    };
    match gates {
        Ok(gates) => {
            for g in &gates {
                println!("{g}");
            }
            if gates.iter().all(|g| g.passed) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    Ok(BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?))
}

fn write_sweep(records: &[TrialRecord], gates: &[Gate], dir: &Path, stem: &str) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    emit(records, EmitFormat::Csv, create(dir, &format!("{stem}.csv"))?)?;
    emit(records, EmitFormat::PlotData, create(dir, &format!("{stem}.dat"))?)?;
    serde_json::to_writer_pretty(create(dir, &format!("{stem}_gates.json"))?, gates)?;
    println!("{:>8} {:>6} {:>7} {:>8} {:>9} {:>9} {:>9} {:>10}", "value", "trials", "found", "success", "length", "v_max", "sep_max", "plan_s");
    let show = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.4}"));
    for g in summarize(records) {
        println!(
            "{:>8} {:>6} {:>7.3} {:>8.3} {:>9} {:>9} {:>9} {:>10}",
            g.value,
            g.trials,
            g.path_found_rate,
            g.success_given_path,
            show(g.mean_path_length),
            show(g.mean_max_speed),
            show(g.max_separation),
            show(g.mean_planning_time),
        );
    }
    Ok(())
}

fn forest_sweep(a: ForestArgs) -> Result<Vec<Gate>> {
    let mut sweep = ForestSweep::default();
    sweep.pipeline.ell = a.ell;
    sweep.pipeline.a_max = a.a_max;
    sweep.pipeline.robot_radius = a.robot_radius;
    let records = hypercorridor::bench::density_sweep(&a.densities, a.trials, &sweep, a.common.seed.unwrap_or(DEFAULT_SEED))?;
    let gates = density_gates(&records);
    write_sweep(&records, &gates, &a.common.out, "forest_sweep")?;
    Ok(gates)
}

fn ell_sweep(a: EllArgs) -> Result<Vec<Gate>> {
    let sweep = EllSweep {
        scene_seed: a.scene_seed,
        ..Default::default()
    };
    let records = hypercorridor::bench::ell_sweep(&a.ells, a.trials, &sweep, a.common.seed.unwrap_or(DEFAULT_SEED))?;
    let gates = ell_gates(&records);
    write_sweep(&records, &gates, &a.common.out, "ell_sweep")?;
    Ok(gates)
}

fn run_scenario(a: ScenarioArgs) -> Result<Vec<Gate>> {
    let scenario = match (&a.file, a.maze) {
        (_, Some(seed)) => AnyScenario::Planar(maze_scenario(seed, a.legs)?),
        (Some(file), None) => AnyScenario::load(file).with_context(|| format!("loading {}", file.display()))?,
        (None, None) => bail!("give a scenario file or --maze SEED"),
    };
    let params = RunParams {
        commit_horizon: a.commit_horizon,
        refine_budget: a.refine_budget,
        ..Default::default()
    };
    match scenario {
        AnyScenario::Planar(s) => run_one(&s, &params, &a),
        AnyScenario::Spatial(s) => run_one(&s, &params, &a),
    }
}

fn run_one<const D: usize>(s: &Scenario<D>, params: &RunParams, a: &ScenarioArgs) -> Result<Vec<Gate>> {
    let out = &a.common.out;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    fs::write(out.join("scenario.json"), s.to_json()?)?;
    let log = run(s, params, a.common.seed.unwrap_or(s.seed))?;
    log.write(out, a.dt)?;
    println!("{} legs, {} pieces, {} decisions, outcome {:?}", log.legs.len(), log.pieces.len(), log.decisions.len(), log.outcome);
    Ok(log.gates())
}

fn verify(a: VerifyArgs) -> Result<Vec<Gate>> {
    let seed = a.common.seed.unwrap_or(DEFAULT_SEED);
    if let Some(file) = &a.scenario {
        let scenario = AnyScenario::load(file).with_context(|| format!("loading {}", file.display()))?;
        return match scenario {
            AnyScenario::Planar(s) => verify_scenario(&s, seed, &a),
            AnyScenario::Spatial(s) => verify_scenario(&s, seed, &a),
        };
    }
    let params = PipelineParams {
        ell: a.ell,
        a_max: a.a_max,
        ..Default::default()
    };
    let ws = Workspace::new(Vector3::zeros(), Vector3::repeat(10.0))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..100 {
        let forest = poisson_forest(a.density, &ws, Default::default(), rng.random())?;
        let inflated = forest.inflate(params.inflation(3))?;
        if let Some((start, goal)) = sample_endpoints(&inflated, 8.0, 2000, &mut rng) {
            return verify_query(&forest, start, goal, &params, rng.random(), &a);
        }
    }
    bail!("no admissible start/goal pair at density {}", a.density)
}

fn verify_scenario<const D: usize>(s: &Scenario<D>, seed: u64, a: &VerifyArgs) -> Result<Vec<Gate>> {
    if s.start.v.norm() > 0.0 || s.start.a.norm() > 0.0 {
        bail!("verify plans from rest; the scenario starts in motion");
    }
    let params = PipelineParams {
        ell: s.ell,
        a_max: s.a_max,
        robot_radius: s.robot_radius,
        ..Default::default()
    };
    verify_query(&s.environment()?, s.start.p, s.goal, &params, seed, a)
}

/// Plans one rest-to-rest query and writes tree, path, QP, trajectory and
/// report files.
fn verify_query<const D: usize>(
    env_raw: &Environment<D>,
    start: Point<D>,
    goal: Point<D>,
    params: &PipelineParams,
    seed: u64,
    a: &VerifyArgs,
) -> Result<Vec<Gate>> {
    let out = &a.common.out;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let inflated = env_raw.inflate(params.inflation(D))?;
    let mut planner = Planner::new(&inflated, start, goal, params.planner.clone(), seed)?;
    let path = planner.plan();
    planner.write_tree_csv(create(out, "tree.csv")?)?;
    let path = path?;
    let outcome = trajectory_along(env_raw, path, &State::at_rest(start), params)?;
    {
        use std::io::Write;
        let mut w = create(out, "path.csv")?;
        let axes = ["x", "y", "z"];
        writeln!(w, "{}", axes[..D].join(","))?;
        for p in &outcome.path.nodes {
            let row: Vec<String> = p.iter().map(|x| x.to_string()).collect();
            writeln!(w, "{}", row.join(","))?;
        }
    }
    outcome.instance.write_text(create(out, "qp.txt")?)?;
    if let Some(tr) = &outcome.trajectory {
        tr.write_csv(create(out, "trajectory.csv")?, a.dt, 0.0)?;
    }
    let sol = &outcome.solution;
    let kkt = sol.residuals.max();
    let mut gates = vec![
        Gate::new("qp optimal", sol.status == QpStatus::Optimal, format!("{:?} after {} iterations, K = {}", sol.status, sol.iterations, outcome.plan.steps())),
        Gate::new("kkt residual", kkt <= KKT_LIMIT, format!("{kkt:.3e}")),
    ];
    if let Some(rep) = &outcome.report {
        let excess = rep.max_separation.max(rep.analytic_separation) - rep.bound;
        gates.push(Gate::new("separation bound", excess <= SEPARATION_SLACK, format!("excess {excess:.3e} m over {:.4} m", rep.bound)));
        gates.push(Gate::new(
            "verification",
            rep.passed,
            format!("certified {}, collision {}, min clearance {:.4} m", rep.certified, rep.collision, rep.min_clearance),
        ));
    }
    let report = serde_json::json!({
        "start": start.as_slice(),
        "goal": goal.as_slice(),
        "path_length": outcome.path.cost(),
        "steps": outcome.plan.steps(),
        "h": outcome.plan.h,
        "qp_status": sol.status,
        "qp_objective": sol.objective,
        "qp_iterations": sol.iterations,
        "kkt": sol.residuals,
        "verification": outcome.report,
        "gates": gates,
    });
    serde_json::to_writer_pretty(create(out, "report.json")?, &report)?;
    Ok(gates)
}
