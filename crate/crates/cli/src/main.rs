use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use boustro::env_gen::{generate_environment, EnvGenParams, MapFit, DEFAULT_THRESHOLD};
use boustro::grid::{reachable_from, Coord};
use boustro::io::{self, PlanDocument};
use boustro::metrics::evaluate_with_estimate;
use boustro::monte_carlo::{describe, run_sweep, SweepConfig};
use boustro::raster::{plan, PlanConfig};
use boustro::Error;
use clap::{Args, Parser, Subcommand};

/// Boustrophedon coverage planning and Monte-Carlo evaluation.
#[derive(Debug, Parser)]
#[command(name = "boustro", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a random environment (distribution, hotspots, obstacles).
    Generate(GenerateArgs),
    /// Plan a coverage path over an environment.
    Plan(PlanArgs),
    /// Score a plan: RMSE, hotspot miss rate, path length, sample count.
    Evaluate(EvaluateArgs),
    /// Run a Monte-Carlo parameter sweep from a TOML config.
    Sweep(SweepArgs),
    /// Write plot-ready CSV layers.
    Render(RenderArgs),
}

#[derive(Debug, Args)]
struct GenerateArgs {
    /// Side length of a square map.
    #[arg(long, conflicts_with_all = ["width", "height"])]
    size: Option<usize>,
    #[arg(long, requires = "height")]
    width: Option<usize>,
    #[arg(long, requires = "width")]
    height: Option<usize>,
    /// Target hotspot fraction, in (0, 1).
    #[arg(long)]
    dist_density: f64,
    /// Distribution heterogeneity, > 0.
    #[arg(long)]
    dist_het: f64,
    /// Target obstacle fraction, in [0, 1). 0 disables obstacles.
    #[arg(long, default_value_t = 0.0)]
    obs_density: f64,
    #[arg(long, default_value_t = 0.1)]
    obs_het: f64,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    threshold: f64,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value = "environment.json")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct PlanArgs {
    #[arg(long)]
    env: PathBuf,
    /// Path width and sampling interval, in cells.
    #[arg(long)]
    spacing: usize,
    /// Erase obstacles thinner than the spacing and detour around them.
    #[arg(long)]
    preprocess: bool,
    /// Start coordinate `x,y`; defaults to the first free cell.
    #[arg(long, value_parser = parse_coord)]
    start: Option<Coord>,
    #[arg(long, default_value = "plan.json")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long)]
    env: PathBuf,
    #[arg(long)]
    plan: PathBuf,
    /// Metrics CSV; also printed to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Where to write the reconstructed distribution.
    #[arg(long)]
    estimate_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: u64,
    /// Directory for summary.csv and trials.csv.
    #[arg(long, default_value = "sweep")]
    out: PathBuf,
    /// Worker threads; 0 uses every core. Output does not depend on it.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

#[derive(Debug, Args)]
struct RenderArgs {
    #[arg(long)]
    env: PathBuf,
    #[arg(long)]
    plan: Option<PathBuf>,
    /// Reconstructed field, as written by `evaluate --estimate-out`.
    #[arg(long)]
    estimate: Option<PathBuf>,
    #[arg(long, default_value = "render")]
    out: PathBuf,
}

fn parse_coord(s: &str) -> Result<Coord, String> {
    let (x, y) = s.split_once(',').ok_or("expected x,y")?;
    let x = x.trim().parse().map_err(|e| format!("bad x: {e}"))?;
    let y = y.trim().parse().map_err(|e| format!("bad y: {e}"))?;
    Ok(Coord::new(x, y))
}

fn fit_line(name: &str, target: f64, fit: &MapFit) -> String {
    format!(
        "{name} density {:.4} (target {target}, sigma {:.4}{})",
        fit.density,
        fit.sigma,
        if fit.converged { "" } else { ", not within tolerance" }
    )
}

fn generate(args: GenerateArgs) -> boustro::Result<()> {
    let (width, height) = match (args.size, args.width, args.height) {
        (Some(s), _, _) => (s, s),
        (None, Some(w), Some(h)) => (w, h),
        _ => return Err(usage("size", "give --size or both --width and --height")),
    };
    let params = EnvGenParams {
        width,
        height,
        dist_density: args.dist_density,
        dist_heterogeneity: args.dist_het,
        obs_density: args.obs_density,
        obs_heterogeneity: args.obs_het,
        threshold: args.threshold,
        seed: args.seed,
    };
    let env = generate_environment(&params)?;
    io::save_environment(&env, &args.out)?;
    println!("{}", fit_line("distribution", args.dist_density, &env.distribution_fit));
    match &env.obstacle_fit {
        Some(fit) => println!("{}", fit_line("obstacle", args.obs_density, fit)),
        None => println!("obstacle density 0"),
    }
    Ok(())
}

fn plan_cmd(args: PlanArgs) -> boustro::Result<()> {
    let env = with_path(&args.env, io::load_environment(&args.env))?;
    let mut config = PlanConfig::new(args.spacing).with_preprocess(args.preprocess);
    config.start = args.start;
    let p = plan(&env, &config)?;
    io::save_plan(&p, env.dims(), &args.out)?;
    let reachable = p
        .start()
        .map_or(0, |s| reachable_from(&env.obstacle_map, s).count_set());
    let mut line = format!(
        "cells={} length={} samples={} reachable_free={}",
        p.cell_count,
        p.path_length(),
        p.samples.len(),
        reachable
    );
    if let Some(r) = &p.preprocess {
        line.push_str(&format!(
            " removed_obstacles={} removed_area={} detours={}",
            r.removed_component_count, r.removed_area, r.detours
        ));
    }
    println!("{line}");
    Ok(())
}

fn evaluate_cmd(args: EvaluateArgs) -> boustro::Result<()> {
    let env = with_path(&args.env, io::load_environment(&args.env))?;
    let doc = with_path(&args.plan, io::load_plan(&args.plan))?;
    env.dims().ensure_same(doc.dims()?)?;
    let (metrics, estimate) = evaluate_with_estimate(&env, &doc.to_plan())?;
    let csv = io::metrics_csv(&metrics);
    if let Some(out) = &args.out {
        fs::write(out, &csv)?;
    }
    if let Some(out) = &args.estimate_out {
        match &estimate {
            Some(e) => io::save_estimate(e, out)?,
            None => return Err(Error::NoSamples),
        }
    }
    print!("{csv}");
    Ok(())
}

fn sweep_cmd(args: SweepArgs) -> boustro::Result<()> {
    let text = with_path(&args.config, fs::read_to_string(&args.config).map_err(Error::from))?;
    let config = SweepConfig::from_toml(&text)?;
    let result = run_sweep(&config, args.seed, args.jobs)?;
    fs::create_dir_all(&args.out)?;
    fs::write(args.out.join("summary.csv"), result.summary_csv())?;
    fs::write(args.out.join("trials.csv"), result.trials_csv())?;
    print!("{}", describe(&result));
    Ok(())
}

fn render_cmd(args: RenderArgs) -> boustro::Result<()> {
    let env = with_path(&args.env, io::load_environment(&args.env))?;
    let plan: Option<PlanDocument> = args.plan.as_deref().map(|p| with_path(p, io::load_plan(p))).transpose()?;
    let estimate = args
        .estimate
        .as_deref()
        .map(|p| with_path(p, io::load_field(p)))
        .transpose()?;
    let layers = io::render_layers(&env, plan.as_ref(), estimate.as_ref())?;
    io::write_layers(&layers, &args.out)?;
    for l in &layers {
        println!("{}", Path::new(&args.out).join(format!("{}.csv", l.name)).display());
    }
    Ok(())
}

/// Attaches the file name to I/O failures.
fn with_path<T>(path: &Path, r: boustro::Result<T>) -> boustro::Result<T> {
    r.map_err(|e| match e {
        Error::Io(io) => Error::Io(std::io::Error::new(io.kind(), format!("{}: {io}", path.display()))),
        other => other,
    })
}

fn usage(name: &'static str, reason: &str) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.to_string(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(a) => generate(a),
        Command::Plan(a) => plan_cmd(a),
        Command::Evaluate(a) => evaluate_cmd(a),
        Command::Sweep(a) => sweep_cmd(a),
        Command::Render(a) => render_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_usage() { 2 } else { 1 })
        }
    }
}
