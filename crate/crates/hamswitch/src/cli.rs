//! Subcommand dispatch: `simulate`, `validate`, `zvonkin`, `report`.
//! Exit codes: 0 success, 1 validation failure, 2 usage or config error.

use crate::config::{load_config, LoadedRun, ModeConfig};
use crate::montecarlo::run_ensemble_columns;
use crate::report::{self, fmt_float, render_table, ValidationSummary};
use crate::validation::{run_suites, Suite, ValidationContext};
use clap::{Args, Parser, Subcommand};
use hamswitch_core::rng::PathRng;
use hamswitch_core::sde::{simulate_hybrid, SwitchingMode};
use hamswitch_core::weights::switch_weight;
use hamswitch_core::zvonkin::{lambda_star, scan_lambda, GridSpec};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

type CliError = Box<dyn std::error::Error + Send + Sync>;

#[derive(Parser)]
#[command(
    name = "hamswitch",
    about = "Monte Carlo simulation and validation for regime-switching stochastic \
             Hamiltonian systems with infinite history",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Override the number of Monte Carlo paths.
    #[arg(long)]
    paths: Option<u64>,
    /// Override the base seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores; env HAMSWITCH_THREADS).
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory (overrides the config's output.dir).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the hybrid system and write ensemble estimates.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        /// Write per-path trajectories to trace.jsonl (slow; small runs).
        #[arg(long)]
        trace: bool,
    },
    /// Run the statistical validation battery.
    Validate {
        #[command(flatten)]
        common: CommonArgs,
        /// Which suite to run.
        #[arg(long, default_value = "all")]
        suite: String,
    },
    /// Solve the elliptic drift-removal equation over a lambda ladder.
    Zvonkin {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Render previously written JSON validation summaries.
    Report {
        /// Summary files to render.
        #[arg(long, required = true, num_args = 1..)]
        input: Vec<PathBuf>,
    },
}

fn thread_count(requested: Option<usize>) -> Option<usize> {
    requested.or_else(|| {
        std::env::var("HAMSWITCH_THREADS")
            .ok()
            .and_then(|s| s.parse().ok())
    })
}

/// Run everything inside a dedicated rayon pool so `--threads` applies
/// regardless of global state.
fn with_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    match threads {
        None => f(),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .expect("thread pool");
            pool.install(f)
        }
    }
}

pub fn dispatch() -> i32 {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            2
        }
    }
}

fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Simulate { common, trace } => {
            let mut run = load_config(&common.config)?;
            apply_overrides(&mut run, &common);
            let threads = thread_count(common.threads);
            with_pool(threads, || simulate_command(&run, trace))
        }
        Command::Validate { common, suite } => {
            let Some(suite) = Suite::parse(&suite) else {
                eprintln!(
                    "error: unknown suite '{suite}' \
                     (expected martingale, girsanov, reweight, mt-continuity, feller, all)"
                );
                return Ok(2);
            };
            let mut run = load_config(&common.config)?;
            apply_overrides(&mut run, &common);
            let threads = thread_count(common.threads);
            with_pool(threads, || validate_command(&run, suite))
        }
        Command::Zvonkin { common } => {
            let mut run = load_config(&common.config)?;
            apply_overrides(&mut run, &common);
            zvonkin_command(&run)
        }
        Command::Report { input } => report_command(&input),
    }
}

fn apply_overrides(run: &mut LoadedRun, common: &CommonArgs) {
    if let Some(paths) = common.paths {
        run.config.simulation.paths = paths;
    }
    if let Some(seed) = common.seed {
        run.config.simulation.seed = seed;
    }
    if let Some(out) = &common.out {
        run.config.output.dir = Some(out.display().to_string());
    }
}

fn out_dir(run: &LoadedRun) -> PathBuf {
    PathBuf::from(run.config.output.dir.clone().unwrap_or_else(|| "out".into()))
}

fn simulate_command(run: &LoadedRun, trace: bool) -> Result<i32, CliError> {
    let sim = &run.config.simulation;
    let mode = match sim.mode {
        ModeConfig::Markovian => SwitchingMode::Markovian,
        ModeConfig::StateDependent => SwitchingMode::StateDependent,
    };
    let model = run.model.clone();
    let phi0 = run.initial.clone();
    let k0 = run.initial_regime;
    let (horizon, step, seed) = (sim.horizon, sim.step, sim.seed);
    let include_b2 = sim.include_b2;
    let markovian = mode == SwitchingMode::Markovian;
    let trace_on = trace || run.config.output.trace;

    // Per-path functionals: terminal moments, history norm, jump count,
    // regime occupation, and (Markovian mode) the switching weight.
    let labels = [
        "X_T", "Y_T", "X_T^2", "Y_T^2", "X_T*Y_T", "history_norm_T", "jumps", "final_regime",
        "switch_weight",
    ];
    let columns = run_ensemble_columns(sim.paths, seed, labels.len(), |idx, out| {
        let mut rng = PathRng::new(seed, idx);
        let path = simulate_hybrid(&model, &phi0, k0, horizon, step, &mut rng, mode, include_b2)
            .expect("simulation failed");
        let n = path.n_steps();
        let x = path.position(n)[0];
        let y = path.velocity(n)[0];
        out[0] = x;
        out[1] = y;
        out[2] = x * x;
        out[3] = y * y;
        out[4] = x * y;
        out[5] = path.norms[n];
        out[6] = path.count_jumps(horizon) as f64;
        out[7] = (path.final_regime() + 1) as f64;
        out[8] = if markovian {
            switch_weight(&path, &model.rates, horizon).expect("switching weight")
        } else {
            1.0
        };
    });

    let dir = out_dir(run);
    let mut rows = Vec::new();
    for (i, label) in labels.iter().enumerate() {
        let m = columns.summarize(i);
        rows.push(vec![
            (*label).to_string(),
            fmt_float(m.mean),
            fmt_float(m.stderr),
            fmt_float(m.min),
            fmt_float(m.max),
            m.n.to_string(),
        ]);
    }
    report::write_csv(
        &dir.join("estimates.csv"),
        &["functional", "mean", "stderr", "min", "max", "n"],
        &rows,
    )?;

    #[derive(serde::Serialize)]
    struct SimulateSummary<'a> {
        paths: u64,
        seed: u64,
        horizon: f64,
        step: f64,
        mode: &'a str,
        include_b2: bool,
        estimates: Vec<SimulateEstimate<'a>>,
        wall_secs: f64,
    }
    #[derive(serde::Serialize)]
    struct SimulateEstimate<'a> {
        functional: &'a str,
        mean: f64,
        stderr: f64,
        min: f64,
        max: f64,
    }
    let estimates: Vec<SimulateEstimate> = labels
        .iter()
        .enumerate()
        .map(|(i, label)| {
            let m = columns.summarize(i);
            SimulateEstimate {
                functional: label,
                mean: m.mean,
                stderr: m.stderr,
                min: m.min,
                max: m.max,
            }
        })
        .collect();
    report::write_json(
        &dir.join("summary.json"),
        &SimulateSummary {
            paths: sim.paths,
            seed,
            horizon,
            step,
            mode: if markovian { "markovian" } else { "state-dependent" },
            include_b2,
            estimates,
            wall_secs: columns.wall_secs,
        },
    )?;

    if trace_on {
        write_trace(run, &dir.join("trace.jsonl"))?;
    }
    println!(
        "simulated {} paths in {:.2} s; estimates in {}",
        sim.paths,
        columns.wall_secs,
        dir.display()
    );
    Ok(0)
}

fn write_trace(run: &LoadedRun, path: &Path) -> Result<(), CliError> {
    let sim = &run.config.simulation;
    let mode = match sim.mode {
        ModeConfig::Markovian => SwitchingMode::Markovian,
        ModeConfig::StateDependent => SwitchingMode::StateDependent,
    };
    let mut text = String::new();
    for idx in 0..sim.paths {
        let mut rng = PathRng::new(sim.seed, idx);
        let p = simulate_hybrid(
            &run.model,
            &run.initial,
            run.initial_regime,
            sim.horizon,
            sim.step,
            &mut rng,
            mode,
            sim.include_b2,
        )?;
        for i in 0..=p.n_steps() {
            let _ = writeln!(
                text,
                "{{\"path\":{idx},\"t\":{},\"x\":{},\"y\":{},\"regime\":{}}}",
                fmt_float(i as f64 * sim.step),
                fmt_float(p.position(i)[0]),
                fmt_float(p.velocity(i)[0]),
                p.regimes[i] + 1
            );
        }
    }
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, text)?;
    Ok(())
}

fn validate_command(run: &LoadedRun, suite: Suite) -> Result<i32, CliError> {
    let sim = &run.config.simulation;
    let val = &run.config.validation;
    let mut ctx = ValidationContext::new(
        run.model.clone(),
        run.initial.clone(),
        run.initial_regime,
        sim.horizon,
        val.step.unwrap_or(sim.step),
        val.paths.unwrap_or(20_000),
        sim.seed,
    );
    if let Some(ladder) = &val.ladder {
        ctx.ladder = ladder.clone();
    }
    if let Some(gh) = val.girsanov_horizon {
        ctx.girsanov_horizon = gh;
    }
    let summary = run_suites(suite, &ctx);
    let dir = out_dir(run);
    report::write_json(&dir.join("validation.json"), &summary)?;
    print!("{}", render_table(&summary));
    Ok(if summary.pass { 0 } else { 1 })
}

fn zvonkin_command(run: &LoadedRun) -> Result<i32, CliError> {
    let z = &run.config.zvonkin;
    let grid = GridSpec {
        x_max: z.x_max,
        y_max: z.y_max,
        nx: z.nx,
        ny: z.ny,
    };
    let rows = scan_lambda(&run.model, z.regime - 1, &z.lambdas, grid)?;
    let dir = out_dir(run);
    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                fmt_float(r.lambda),
                fmt_float(r.residual),
                fmt_float(r.gradient_bound),
                fmt_float(r.sup_f),
            ]
        })
        .collect();
    report::write_csv(
        &dir.join("zvonkin.csv"),
        &["lambda", "residual", "gradient_bound", "sup_f"],
        &csv_rows,
    )?;
    for r in &rows {
        println!(
            "lambda {:>10}: residual {:.3e}  gradient bound {:.6}  sup|f| {:.6}",
            r.lambda, r.residual, r.gradient_bound, r.sup_f
        );
    }
    match lambda_star(&rows) {
        Some(ls) => println!("lambda* = {ls} (first scanned lambda with bound < 1/2)"),
        None => println!("no scanned lambda reaches a gradient bound below 1/2"),
    }
    Ok(0)
}

fn report_command(inputs: &[PathBuf]) -> Result<i32, CliError> {
    let mut all_pass = true;
    for path in inputs {
        let text = std::fs::read_to_string(path)?;
        let summary: ValidationSummary = serde_json::from_str(&text)
            .map_err(|e| format!("{} is not a validation summary: {e}", path.display()))?;
        println!("# {}", path.display());
        print!("{}", render_table(&summary));
        all_pass &= summary.pass;
    }
    Ok(if all_pass { 0 } else { 1 })
}
