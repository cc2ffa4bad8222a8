//! Command-line front end: single runs, parameter sweeps, Leontief-limit
//! tables, and summaries of existing trajectories.
//!
//! Everything written is a pure function of (config, overrides, seed):
//! repeating an invocation reproduces every output byte for byte. Exit
//! code 2 flags configuration problems (bad config file, override, or
//! range), exit code 1 engine or I/O failures.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand};

use bbcycle::params::ModelParams;
use bbcycle::{dynamics, equilibrium, indicators, sweep};

#[derive(Parser)]
#[command(
    name = "bbcycle",
    version,
    about = "Deterministic business-cycle simulator with confidence feedback"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one trajectory; write trajectory.csv and summary.json
    Simulate(SimulateArgs),
    /// Run a two-axis parameter sweep; write grid.csv and manifest.json
    Sweep(SweepArgs),
    /// Tabulate the no-substitution (rho -> inf) closed forms over (k, G)
    Leontief(LeontiefArgs),
    /// Summarize an existing trajectory CSV
    Report(ReportArgs),
}

#[derive(Args)]
struct ConfigArgs {
    /// Config file; built-in defaults when omitted
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Override one config key (repeatable), e.g. --override delta=0.02
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Master seed, overriding the config
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Directory for trajectory.csv and summary.json
    #[arg(long, value_name = "DIR", default_value = "out")]
    output_dir: PathBuf,
    /// Also write histogram CSVs (consumption, labour, Sharpe)
    #[arg(long)]
    histograms: bool,
    /// Skip trajectory.csv (summary only; for very long runs)
    #[arg(long)]
    no_trajectory: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// First swept key: key=lo:hi:count (inclusive) or key=v1,v2,...
    #[arg(long, value_name = "KEY=RANGE")]
    axis1: String,
    /// Second swept key, same syntax
    #[arg(long, value_name = "KEY=RANGE")]
    axis2: String,
    /// Independent replicas per grid cell
    #[arg(long, default_value_t = 5)]
    seeds_per_cell: u64,
    /// Recorded periods per run; config value when omitted
    #[arg(long)]
    horizon: Option<u64>,
    /// Warm-up periods per run; config value when omitted
    #[arg(long)]
    burn_in: Option<u64>,
    /// Worker threads; all cores when omitted
    #[arg(long)]
    workers: Option<usize>,
    /// Directory for grid.csv and manifest.json
    #[arg(long, value_name = "DIR", default_value = "out")]
    output_dir: PathBuf,
}

#[derive(Args)]
struct LeontiefArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Capital grid: lo:hi:count (inclusive) or v1,v2,...
    #[arg(long, value_name = "RANGE", default_value = "0.1:3:30")]
    k: String,
    /// Consumption-rate grid, same syntax
    #[arg(long, value_name = "RANGE", default_value = "0.05:0.95:19")]
    g: String,
    /// Output file; stdout when omitted
    #[arg(long, value_name = "FILE")]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// Trajectory CSV produced by `simulate`
    trajectory: PathBuf,
    #[command(flatten)]
    config: ConfigArgs,
    /// Also write summary.json (and histograms on request) here
    #[arg(long, value_name = "DIR")]
    output_dir: Option<PathBuf>,
    /// Write histogram CSVs alongside the summary
    #[arg(long)]
    histograms: bool,
}

/// Error split driving the exit code: configuration mistakes exit 2,
/// engine and I/O failures exit 1.
enum CliError {
    Config(anyhow::Error),
    Engine(anyhow::Error),
}

trait IntoCliError<T> {
    fn config_err(self) -> Result<T, CliError>;
    fn engine_err(self) -> Result<T, CliError>;
}

impl<T, E: Into<anyhow::Error>> IntoCliError<T> for Result<T, E> {
    fn config_err(self) -> Result<T, CliError> {
        self.map_err(|e| CliError::Config(e.into()))
    }
    fn engine_err(self) -> Result<T, CliError> {
        self.map_err(|e| CliError::Engine(e.into()))
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(CliError::Engine(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate(args) => simulate(args),
        Command::Sweep(args) => run_sweep(args),
        Command::Leontief(args) => leontief(args),
        Command::Report(args) => report(args),
    }
}

/// Load the config file (or defaults), then apply overrides and the seed.
fn load_params(args: &ConfigArgs) -> Result<ModelParams<f64>, CliError> {
    let mut p = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))
                .config_err()?;
            ModelParams::load(&text)
                .with_context(|| format!("parsing config {}", path.display()))
                .config_err()?
        }
        None => ModelParams::defaults(),
    };
    for pair in &args.overrides {
        let (key, value) = pair
            .split_once('=')
            .ok_or_else(|| anyhow!("override `{pair}` is not of the form KEY=VALUE"))
            .config_err()?;
        p.set_key(key.trim(), value.trim())
            .with_context(|| format!("applying override `{pair}`"))
            .config_err()?;
    }
    if let Some(seed) = args.seed {
        p.engine.seed = seed;
    }
    p.validate().config_err()?;
    Ok(p)
}

/// Parse `lo:hi:count` (inclusive linear grid) or `v1,v2,...`.
fn parse_values(spec: &str) -> Result<Vec<f64>> {
    let parse_one = |s: &str| -> Result<f64> {
        let v: f64 = s
            .trim()
            .parse()
            .map_err(|_| anyhow!("`{s}` is not a number"))?;
        if !v.is_finite() {
            return Err(anyhow!("`{s}` is not finite"));
        }
        Ok(v)
    };
    if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(anyhow!("range `{spec}` is not of the form lo:hi:count"));
        }
        let lo = parse_one(parts[0])?;
        let hi = parse_one(parts[1])?;
        let count: usize = parts[2]
            .trim()
            .parse()
            .map_err(|_| anyhow!("count `{}` is not a non-negative integer", parts[2]))?;
        Ok(match count {
            0 => Vec::new(),
            1 => vec![lo],
            // Convex form keeps both endpoints exact.
            _ => (0..count)
                .map(|i| {
                    let t = i as f64 / (count - 1) as f64;
                    lo * (1.0 - t) + hi * t
                })
                .collect(),
        })
    } else {
        spec.split(',').map(parse_one).collect()
    }
}

/// Parse `key=range` axis syntax.
fn parse_axis(spec: &str) -> Result<sweep::Axis> {
    let (key, range) = spec
        .split_once('=')
        .ok_or_else(|| anyhow!("axis `{spec}` is not of the form KEY=RANGE"))?;
    Ok(sweep::Axis {
        key: key.trim().to_string(),
        values: parse_values(range).with_context(|| format!("axis `{key}`"))?,
    })
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)
        .with_context(|| format!("creating output directory {}", dir.display()))
        .engine_err()
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes)
        .with_context(|| format!("writing {}", path.display()))
        .engine_err()
}

fn write_histograms(report: &indicators::CrisisReport<f64>, dir: &Path) -> Result<(), CliError> {
    for (name, hist) in [
        ("hist_consumption.csv", &report.hist_c),
        ("hist_labor.csv", &report.hist_n),
        ("hist_sharpe.csv", &report.hist_sharpe),
    ] {
        let mut buf = Vec::new();
        indicators::write_histogram_csv(hist, &mut buf)
            .context("formatting histogram")
            .engine_err()?;
        write_file(&dir.join(name), &buf)?;
    }
    Ok(())
}

fn summary_json(report: &indicators::CrisisReport<f64>) -> Result<String, CliError> {
    serde_json::to_string_pretty(&report.summary())
        .context("serializing summary")
        .engine_err()
        .map(|mut s| {
            s.push('\n');
            s
        })
}

fn simulate(args: SimulateArgs) -> Result<(), CliError> {
    let p = load_params(&args.config)?;
    let traj = dynamics::run(&p).engine_err()?;
    let report = indicators::CrisisReport::from_states(&traj.states, &p)
        .context("summarizing trajectory")
        .engine_err()?;

    create_dir(&args.output_dir)?;
    if !args.no_trajectory {
        let traj_path = args.output_dir.join("trajectory.csv");
        let file = fs::File::create(&traj_path)
            .with_context(|| format!("creating {}", traj_path.display()))
            .engine_err()?;
        let mut out = BufWriter::new(file);
        dynamics::write_trajectory_csv(&traj, &mut out)
            .and_then(|()| out.flush())
            .with_context(|| format!("writing {}", traj_path.display()))
            .engine_err()?;
    }

    let json = summary_json(&report)?;
    write_file(&args.output_dir.join("summary.json"), json.as_bytes())?;
    if args.histograms {
        write_histograms(&report, &args.output_dir)?;
    }
    print!("{json}");
    eprintln!(
        "simulate: {} periods recorded to {}",
        traj.states.len(),
        args.output_dir.display()
    );
    Ok(())
}

fn run_sweep(args: SweepArgs) -> Result<(), CliError> {
    let base = load_params(&args.config)?;
    let axis1 = parse_axis(&args.axis1).config_err()?;
    let axis2 = parse_axis(&args.axis2).config_err()?;
    let plan = sweep::SweepPlan {
        horizon: args.horizon.unwrap_or(base.engine.horizon),
        burn_in: args.burn_in.unwrap_or(base.engine.burn_in),
        base,
        axis1,
        axis2,
        seeds_per_cell: args.seeds_per_cell,
    };
    plan.validate().config_err()?;

    create_dir(&args.output_dir)?;
    let manifest_path = args.output_dir.join("manifest.json");
    let manifest = |m: &sweep::SweepManifest| -> Result<String, CliError> {
        serde_json::to_string_pretty(m)
            .context("serializing manifest")
            .engine_err()
            .map(|mut s| {
                s.push('\n');
                s
            })
    };
    // Mark the sweep in progress so an interrupted run leaves a valid,
    // explicitly incomplete manifest behind.
    write_file(&manifest_path, manifest(&plan.manifest(None))?.as_bytes())?;
    eprintln!(
        "sweep: {} x {} cells, {} seeds each, horizon {}",
        plan.axis1.values.len(),
        plan.axis2.values.len(),
        plan.seeds_per_cell,
        plan.horizon
    );

    let grid = sweep::run_sweep(&plan, args.workers).engine_err()?;

    let mut csv = Vec::new();
    sweep::write_grid_csv(&grid, &mut csv)
        .context("formatting grid")
        .engine_err()?;
    write_file(&args.output_dir.join("grid.csv"), &csv)?;
    write_file(
        &manifest_path,
        manifest(&plan.manifest(Some(&grid)))?.as_bytes(),
    )?;

    let failed = grid.cells.iter().filter(|c| c.outcome.is_err()).count();
    eprintln!(
        "sweep: {} cells done, {} failed, results in {}",
        grid.cells.len(),
        failed,
        args.output_dir.display()
    );
    Ok(())
}

fn leontief(args: LeontiefArgs) -> Result<(), CliError> {
    let p = load_params(&args.config)?;
    let ks = parse_values(&args.k)
        .context("capital range")
        .config_err()?;
    let gs = parse_values(&args.g)
        .context("consumption-rate range")
        .config_err()?;
    if let Some(bad) = ks.iter().find(|&&k| k <= 0.0) {
        return Err(CliError::Config(anyhow!(
            "capital values must be positive, got {bad}"
        )));
    }
    if let Some(bad) = gs.iter().find(|&&g| g <= 0.0 || g >= 1.0) {
        return Err(CliError::Config(anyhow!(
            "consumption rates must lie strictly between 0 and 1, got {bad}"
        )));
    }

    let mut out = String::from("k,G,c_tilde,n,w_tilde,q_star_tilde,regime\n");
    for &k in &ks {
        for &g in &gs {
            let eq = equilibrium::solve_leontief(k, g, &p).engine_err()?;
            let regime = equilibrium::leontief_regime(k, g, &p);
            out.push_str(&format!(
                "{k},{g},{},{},{},{},{}\n",
                eq.c_tilde, eq.n, eq.w_tilde, eq.q_star_tilde, regime.regime
            ));
        }
    }
    match &args.output {
        Some(path) => write_file(path, out.as_bytes())?,
        None => print!("{out}"),
    }
    Ok(())
}

fn report(args: ReportArgs) -> Result<(), CliError> {
    let p = load_params(&args.config)?;
    let text = fs::read_to_string(&args.trajectory)
        .with_context(|| format!("reading {}", args.trajectory.display()))
        .engine_err()?;
    let states = dynamics::read_trajectory_csv::<f64>(&text, &p)
        .with_context(|| format!("parsing {}", args.trajectory.display()))
        .engine_err()?;
    let report = indicators::CrisisReport::from_states(&states, &p)
        .context("summarizing trajectory")
        .engine_err()?;
    let json = summary_json(&report)?;
    if let Some(dir) = &args.output_dir {
        create_dir(dir)?;
        write_file(&dir.join("summary.json"), json.as_bytes())?;
        if args.histograms {
            write_histograms(&report, dir)?;
        }
    }
    print!("{json}");
    Ok(())
}
