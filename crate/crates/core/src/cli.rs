//! Command-line front end.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use crate::bench::{run_bench, summarize, write_counts_csv, write_timing_csv as write_bench_timing};
use crate::config::{parse_seed_range, RunConfig};
use crate::error::{Error, Result};
use crate::frs::{default_bins, generate_frs, predict_obstacle, FrsFile, ObstaclePrediction};
use crate::planner::{high_level_planner, Backend, PlanRequest, Planner};
use crate::sim::{
    generate_scenario, write_results_csv, write_timing_csv, OutcomeCounts, Scenario, Simulator, TrialResult,
};

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "zonoplan", version, about = "Zonotope reachability planner for highway driving")]
pub struct Cli {
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute the reachable-set file for the default maneuver bins.
    GenerateFrs {
        #[arg(long)]
        out: PathBuf,
    },
    /// Plan one iteration from the initial state of a scenario file.
    Plan {
        #[arg(long)]
        scenario: PathBuf,
        #[command(flatten)]
        planner: PlannerArgs,
        /// Append a row of planning statistics to this CSV.
        #[arg(long)]
        stats: Option<PathBuf>,
        /// Directory for plan.json and the config echo.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run closed-loop trials.
    Simulate {
        /// Inclusive seed range such as 0..49.
        #[arg(long, conflicts_with_all = ["scenario", "scenario_dir"])]
        seeds: Option<String>,
        #[arg(long, conflicts_with = "scenario_dir")]
        scenario: Option<PathBuf>,
        #[arg(long)]
        scenario_dir: Option<PathBuf>,
        /// Exact number of moving obstacles in generated scenarios.
        #[arg(long)]
        obstacles: Option<usize>,
        #[command(flatten)]
        planner: PlannerArgs,
        #[arg(long)]
        out: PathBuf,
        /// Write one SVG frame per planning iteration.
        #[arg(long)]
        svg: bool,
    },
    /// Time single planning iterations over random dense traffic.
    Bench {
        /// Comma-separated obstacle counts.
        #[arg(long, value_delimiter = ',')]
        obstacles: Option<Vec<usize>>,
        #[arg(long)]
        instances: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        planner: PlannerArgs,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct PlannerArgs {
    #[arg(long)]
    pub frs: Option<PathBuf>,
    #[arg(long)]
    pub t_plan: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// sdf or halfspace; bench runs both unless one is given.
    #[arg(long)]
    pub backend: Option<Backend>,
}

impl PlannerArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        if let Some(f) = &self.frs {
            cfg.frs = Some(f.clone());
        }
        if let Some(t) = self.t_plan {
            cfg.t_plan = Some(t);
        }
        if let Some(m) = self.max_iter {
            cfg.planner.max_iter = m;
        }
        if let Some(b) = self.backend {
            cfg.planner.backend = b;
        }
    }
}

#[derive(Serialize)]
struct ConfigEcho<'a> {
    subcommand: &'a str,
    inputs: Vec<String>,
    config: &'a RunConfig,
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Config(format!("cannot create output directory {}: {e}", dir.display())))
}

fn create_file(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?))
}

fn require_file(path: &Path, what: &str) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::Config(format!("{what} {} not found", path.display())))
    }
}

fn install_threads(cfg: &RunConfig) -> Result<()> {
    if let Some(n) = cfg.thread_count()? {
        // A pool may already exist when called twice in one process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Runs a parsed command line.
pub fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    install_threads(&cfg)?;
    match cli.command {
        Command::GenerateFrs { out } => {
            let frs = generate_frs(&cfg.frs_gen, &default_bins())?;
            if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
                create_dir(dir)?;
            }
            frs.save(&out)?;
            let echo = out.with_extension("config.json");
            write_json(
                &echo,
                &ConfigEcho {
                    subcommand: "generate-frs",
                    inputs: vec![],
                    config: &cfg,
                },
            )?;
            eprintln!("wrote {} ({} bins)", out.display(), frs.bins.len());
            Ok(())
        }
        Command::Plan {
            scenario,
            planner,
            stats,
            out,
        } => {
            planner.apply(&mut cfg);
            require_file(&scenario, "scenario file")?;
            let frs = cfg.resolve_frs()?;
            cfg.validate(&frs)?;
            let sc = Scenario::load(&scenario).map_err(|e| Error::Config(format!("{}: {e}", scenario.display())))?;
            let report = plan_once(&frs, &cfg, &sc)?;
            let text = serde_json::to_string_pretty(&report)? + "\n";
            print!("{text}");
            if let Some(dir) = &out {
                create_dir(dir)?;
                std::fs::write(dir.join("plan.json"), &text).map_err(|e| Error::io(dir.join("plan.json"), e))?;
                write_json(
                    &dir.join("config.json"),
                    &ConfigEcho {
                        subcommand: "plan",
                        inputs: vec![scenario.display().to_string()],
                        config: &cfg,
                    },
                )?;
            }
            if let Some(path) = &stats {
                append_plan_stats(path, &report)?;
            }
            Ok(())
        }
        Command::Simulate {
            seeds,
            scenario,
            scenario_dir,
            obstacles,
            planner,
            out,
            svg,
        } => {
            planner.apply(&mut cfg);
            if let Some(n) = obstacles {
                cfg.scenario.min_moving = n;
                cfg.scenario.max_moving = n;
            }
            let frs = cfg.resolve_frs()?;
            cfg.validate(&frs)?;
            let (scenarios, inputs) = collect_scenarios(&cfg, seeds.as_deref(), scenario.as_deref(), scenario_dir.as_deref())?;
            create_dir(&out)?;
            let frames = out.join("frames");
            if svg {
                create_dir(&frames)?;
            }
            write_json(
                &out.join("config.json"),
                &ConfigEcho {
                    subcommand: "simulate",
                    inputs,
                    config: &cfg,
                },
            )?;
            let results = simulate(&frs, &cfg, &scenarios, svg.then_some(frames.as_path()))?;
            write_results_csv(&results, create_file(&out.join("results.csv"))?)?;
            write_timing_csv(&results, create_file(&out.join("timing.csv"))?)?;
            let counts = OutcomeCounts::of(&results);
            write_json(&out.join("summary.json"), &counts)?;
            eprintln!(
                "{} trials: {} success, {} safe_stop, {} crash",
                counts.trials, counts.success, counts.safe_stop, counts.crash
            );
            Ok(())
        }
        Command::Bench {
            obstacles,
            instances,
            seed,
            planner,
            out,
        } => {
            planner.apply(&mut cfg);
            if let Some(o) = obstacles {
                cfg.bench.obstacle_counts = o;
            }
            if let Some(n) = instances {
                cfg.bench.instances = n;
            }
            if let Some(s) = seed {
                cfg.bench.seed = s;
            }
            let frs = cfg.resolve_frs()?;
            cfg.validate(&frs)?;
            cfg.bench.validate()?;
            let backends = match planner.backend {
                Some(b) => vec![b],
                None => vec![Backend::Sdf, Backend::Halfspace],
            };
            create_dir(&out)?;
            write_json(
                &out.join("config.json"),
                &ConfigEcho {
                    subcommand: "bench",
                    inputs: vec![],
                    config: &cfg,
                },
            )?;
            let rows = run_bench(&frs, &cfg.planner, &cfg.bench, &backends)?;
            write_counts_csv(&rows, create_file(&out.join("bench.csv"))?)?;
            write_bench_timing(&rows, create_file(&out.join("bench_timing.csv"))?)?;
            let summary = summarize(&rows, &backends, &cfg.bench.obstacle_counts);
            write_json(&out.join("bench_summary.json"), &summary)?;
            for (b, e) in &summary.growth_exponent {
                eprintln!("{b}: median solve time growth exponent {e:.3}");
            }
            Ok(())
        }
    }
}

fn collect_scenarios(
    cfg: &RunConfig,
    seeds: Option<&str>,
    scenario: Option<&Path>,
    dir: Option<&Path>,
) -> Result<(Vec<Scenario>, Vec<String>)> {
    let load = |p: &Path| Scenario::load(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())));
    if let Some(path) = scenario {
        require_file(path, "scenario file")?;
        return Ok((vec![load(path)?], vec![path.display().to_string()]));
    }
    if let Some(dir) = dir {
        let entries = std::fs::read_dir(dir).map_err(|e| Error::Config(format!("scenario directory {}: {e}", dir.display())))?;
        let mut paths: Vec<PathBuf> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        paths.sort();
        if paths.is_empty() {
            return Err(Error::Config(format!("no scenario files in {}", dir.display())));
        }
        let scenarios = paths.iter().map(|p| load(p)).collect::<Result<Vec<_>>>()?;
        return Ok((scenarios, paths.iter().map(|p| p.display().to_string()).collect()));
    }
    let range = parse_seed_range(seeds.unwrap_or("0..49"))?;
    let inputs = vec![format!("seeds {}..{}", range.start(), range.end())];
    Ok((range.map(|s| generate_scenario(s, &cfg.scenario)).collect(), inputs))
}

/// Runs trials in parallel; results keep the input order.
pub fn simulate(frs: &FrsFile, cfg: &RunConfig, scenarios: &[Scenario], svg_dir: Option<&Path>) -> Result<Vec<TrialResult>> {
    let mut sim = Simulator::new(frs, cfg.planner, cfg.sim)?;
    sim.svg_dir = svg_dir.map(Path::to_path_buf);
    scenarios.par_iter().map(|s| sim.run_trial(s)).collect()
}

#[derive(Debug, Serialize)]
pub struct PlanReport {
    pub feasible: bool,
    pub bin: Option<usize>,
    pub p: Option<[f64; 2]>,
    pub cost: Option<f64>,
    pub clearance: Option<f64>,
    pub waypoint: [f64; 2],
    pub lane: usize,
    pub sensed_obstacles: usize,
    pub constraints: usize,
    pub active_bins: usize,
    pub constraint_evals: usize,
    pub gradient_evals: usize,
    pub solver_iterations: usize,
    pub solve_time_s: f64,
}

pub fn plan_once(frs: &FrsFile, cfg: &RunConfig, sc: &Scenario) -> Result<PlanReport> {
    let sensed: Vec<_> = sc.obstacles.iter().enumerate().map(|(k, o)| o.state_at(k, 0.0)).collect();
    let preds: Vec<ObstaclePrediction> = sensed
        .iter()
        .filter_map(|o| predict_obstacle(o, &frs.timing, &sc.ego.pos(), cfg.sim.sensor_radius))
        .collect();
    let visible: Vec<_> = preds.iter().map(|p| p.source).collect();
    let wp = high_level_planner(&sc.road, &sc.ego, frs.footprint.l, &visible, cfg.planner.d_safe, cfg.planner.d_wp_max);
    let planner = Planner::new(frs, sc.road, cfg.planner);
    let res = planner.plan(&PlanRequest {
        z0: sc.ego,
        predictions: &preds,
        waypoint: wp,
    })?;
    Ok(PlanReport {
        feasible: res.is_feasible(),
        bin: res.choice.map(|c| c.bin),
        p: res.choice.map(|c| [c.p.x, c.p.y]),
        cost: res.choice.map(|c| c.cost),
        clearance: res.choice.map(|c| c.clearance),
        waypoint: [wp.position.x, wp.position.y],
        lane: wp.lane_id,
        sensed_obstacles: preds.len(),
        constraints: res.stats.constraints,
        active_bins: res.stats.active_bins,
        constraint_evals: res.stats.constraint_evals,
        gradient_evals: res.stats.gradient_evals,
        solver_iterations: res.stats.solver_iterations,
        solve_time_s: res.stats.wall_time,
    })
}

fn append_plan_stats(path: &Path, r: &PlanReport) -> Result<()> {
    let fresh = !path.exists();
    let file = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    if fresh {
        w.write_record([
            "feasible",
            "bin",
            "constraints",
            "active_bins",
            "constraint_evals",
            "gradient_evals",
            "solver_iterations",
            "solve_time_s",
        ])?;
    }
    w.write_record([
        r.feasible.to_string(),
        r.bin.map(|b| b.to_string()).unwrap_or_default(),
        r.constraints.to_string(),
        r.active_bins.to_string(),
        r.constraint_evals.to_string(),
        r.gradient_evals.to_string(),
        r.solver_iterations.to_string(),
        format!("{:.6}", r.solve_time_s),
    ])?;
    w.flush().map_err(|e| Error::io(path, e))
}

/// Exit status for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) => EXIT_CONFIG,
        _ => EXIT_RUNTIME,
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
