//! `seqbit` command-line runner.
//!
//! Exit codes: 0 goal reached, 1 bad input, 2 crashed, 3 timed out.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use seqbit::report::{bench_csv, parse_trace, render_svg, write_trace, BenchRow};
use seqbit::scenario::{bundled_text, load_scenario, Scenario};
use seqbit::sim::{aggregate, run, Outcome, PlannerKind, RunResult};

#[derive(Parser)]
#[command(
    name = "seqbit",
    version,
    about = "Sequential BIT* and DOVS simulation runner"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Planner {
    Seqbit,
    Dovs,
}

impl From<Planner> for PlannerKind {
    fn from(p: Planner) -> Self {
        match p {
            Planner::Seqbit => PlannerKind::SequentialBitStar,
            Planner::Dovs => PlannerKind::Dovs,
        }
    }
}

#[derive(clap::Args)]
struct SimArgs {
    /// Override the scenario's step length (seconds).
    #[arg(long)]
    dt: Option<f64>,
    /// Override the scenario's time limit (seconds).
    #[arg(long)]
    tmax: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one run; writes a trace log and an SVG plot.
    Run {
        /// Scenario file, or the name of a bundled scenario.
        scenario: String,
        #[arg(long, value_enum, default_value = "seqbit")]
        planner: Planner,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Repeated seeded runs per (planner, scenario); writes bench.csv.
    Bench {
        /// Scenario files or bundled names.
        #[arg(required = true)]
        scenarios: Vec<String>,
        /// Planners to run (repeatable); both when omitted.
        #[arg(long, value_enum)]
        planner: Vec<Planner>,
        #[arg(long, default_value_t = 30)]
        runs: usize,
        /// Base seed; run k uses seed + k.
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Render trace logs as SVG path plots.
    Plot {
        #[arg(required = true)]
        traces: Vec<PathBuf>,
        /// Output directory; defaults to next to each trace.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn fail(msg: impl AsRef<str>) -> ExitCode {
    eprintln!("error: {}", msg.as_ref());
    ExitCode::from(1)
}

fn load(arg: &str, sim: &SimArgs) -> Result<Scenario, String> {
    let path = Path::new(arg);
    let text = if path.is_file() {
        fs::read_to_string(path).map_err(|e| format!("{arg}: {e}"))?
    } else if let Some(t) = bundled_text(arg) {
        t.to_string()
    } else {
        return Err(format!("{arg}: no such file or bundled scenario"));
    };
    let mut sc = load_scenario(&text).map_err(|e| format!("{arg}: {e}"))?;
    if sc.name.is_empty() {
        sc.name = path
            .file_stem()
            .map_or_else(|| "scenario".into(), |s| s.to_string_lossy().into_owned());
    }
    if let Some(dt) = sim.dt {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(format!("--dt must be > 0, got {dt}"));
        }
        sc.sim.dt = dt;
    }
    if let Some(t) = sim.tmax {
        if !(t > 0.0 && t.is_finite()) {
            return Err(format!("--tmax must be > 0, got {t}"));
        }
        sc.sim.t_max = t;
    }
    Ok(sc)
}

fn outcome_name(o: Outcome) -> &'static str {
    match o {
        Outcome::Reached => "reached",
        Outcome::Crashed => "crashed",
        Outcome::Timeout => "timeout",
    }
}

fn exit_code(o: Outcome) -> ExitCode {
    ExitCode::from(match o {
        Outcome::Reached => 0,
        Outcome::Crashed => 2,
        Outcome::Timeout => 3,
    })
}

fn write(path: &Path, text: &str) -> Result<(), String> {
    fs::write(path, text).map_err(|e| format!("{}: {e}", path.display()))
}

fn cmd_run(scenario: &str, planner: Planner, seed: u64, out: &Path, sim: &SimArgs) -> ExitCode {
    let sc = match load(scenario, sim) {
        Ok(s) => s,
        Err(e) => return fail(e),
    };
    let kind = PlannerKind::from(planner);
    let r = run(&sc, kind, seed);
    if let Err(e) = fs::create_dir_all(out) {
        return fail(format!("{}: {e}", out.display()));
    }
    let stem = format!("{}-{}-{}", sc.name, kind.name(), seed);
    let trace_path = out.join(format!("{stem}.trace.csv"));
    let svg_path = out.join(format!("{stem}.svg"));
    let written = write(&trace_path, &write_trace(&r.trace))
        .and_then(|_| write(&svg_path, &render_svg(&r.trace)));
    if let Err(e) = written {
        return fail(e);
    }
    println!(
        "scenario={} planner={} seed={} outcome={} path_length={:.3} time_to_goal={:.2} plan_time={:.4} virtuals={} min_clearance={:.3} trace={}",
        sc.name,
        kind.name(),
        seed,
        outcome_name(r.outcome),
        r.path_length,
        r.time_to_goal,
        r.plan_time,
        r.virtuals_used,
        r.min_clearance,
        trace_path.display()
    );
    exit_code(r.outcome)
}

fn cmd_bench(
    scenarios: &[String],
    planners: &[Planner],
    runs: usize,
    seed: u64,
    out: &Path,
    sim: &SimArgs,
) -> ExitCode {
    if runs == 0 {
        return fail("--runs must be >= 1");
    }
    let planners: Vec<Planner> = if planners.is_empty() {
        vec![Planner::Seqbit, Planner::Dovs]
    } else {
        planners.to_vec()
    };
    let mut loaded = Vec::new();
    for s in scenarios {
        match load(s, sim) {
            Ok(sc) => loaded.push(sc),
            Err(e) => return fail(e),
        }
    }
    let mut rows = Vec::new();
    for &p in &planners {
        for sc in &loaded {
            let kind = PlannerKind::from(p);
            let results: Vec<RunResult> = (0..runs as u64)
                .into_par_iter()
                .map(|k| run(sc, kind, seed + k))
                .collect();
            let stats = aggregate(&results).expect("runs >= 1");
            rows.push(BenchRow {
                planner: kind.name().to_string(),
                n_dynamic: sc.world.dynamics.len(),
                stats,
            });
        }
    }
    let csv = bench_csv(&rows);
    if let Err(e) = fs::create_dir_all(out).map_err(|e| e.to_string()) {
        return fail(e);
    }
    if let Err(e) = write(&out.join("bench.csv"), &csv) {
        return fail(e);
    }
    print!("{csv}");
    ExitCode::SUCCESS
}

fn cmd_plot(traces: &[PathBuf], out: Option<&Path>) -> ExitCode {
    for path in traces {
        let text = match fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => return fail(format!("{}: {e}", path.display())),
        };
        let trace = match parse_trace(&text) {
            Ok(t) => t,
            Err(e) => return fail(format!("{}: {e}", path.display())),
        };
        let name = path
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let stem = name
            .strip_suffix(".trace.csv")
            .or_else(|| name.strip_suffix(".csv"))
            .unwrap_or(&name);
        let dir = out.map_or_else(
            || path.parent().unwrap_or(Path::new(".")).to_path_buf(),
            Path::to_path_buf,
        );
        if let Err(e) = fs::create_dir_all(&dir) {
            return fail(format!("{}: {e}", dir.display()));
        }
        let svg_path = dir.join(format!("{stem}.svg"));
        if let Err(e) = write(&svg_path, &render_svg(&trace)) {
            return fail(e);
        }
        println!("{}", svg_path.display());
    }
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match cli.command {
        Command::Run {
            scenario,
            planner,
            seed,
            out,
            sim,
        } => cmd_run(&scenario, planner, seed, &out, &sim),
        Command::Bench {
            scenarios,
            planner,
            runs,
            seed,
            out,
            sim,
        } => cmd_bench(&scenarios, &planner, runs, seed, &out, &sim),
        Command::Plot { traces, out } => cmd_plot(&traces, out.as_deref()),
    }
}
