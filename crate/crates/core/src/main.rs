use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use mavplan::sim::mapping::{read_frames, synthetic_frames};
use mavplan::sim::{
    bench_mapping, run_benchmark, run_episode, write_episode, write_plot_artifacts, ForestParams, Scenario, SimConfig,
};
use mavplan::{Error, Result};

#[derive(Parser)]
#[command(name = "mavplan", version, about = "B-spline local replanning simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML configuration; missing fields take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides every seed in the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScenarioKind {
    SingleObstacle,
    Wall,
    Forest,
}

#[derive(Args)]
struct ScenarioArgs {
    /// Scene to fly; defaults to the one in the configuration.
    #[arg(long, value_enum)]
    scenario: Option<ScenarioKind>,
    /// Forest density in trees per square meter for the forest scene.
    #[arg(long)]
    density: Option<f64>,
    /// Number of free control points.
    #[arg(long)]
    c: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Fly one episode and write its metrics and traces.
    Episode {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        scenario: ScenarioArgs,
    },
    /// Run the forest benchmark over a sweep of free control point counts.
    Benchmark {
        #[command(flatten)]
        common: Common,
        /// Comma-separated values of C.
        #[arg(long, value_delimiter = ',')]
        c_sweep: Option<Vec<usize>>,
        /// Comma-separated forest densities, one environment each.
        #[arg(long, value_delimiter = ',')]
        density_sweep: Option<Vec<f64>>,
        /// Start/goal pairs per environment.
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Time point cloud insertion and the distance transform.
    MapBench {
        #[command(flatten)]
        common: Common,
        /// JSON-lines frames (`{"pose": {...} | null, "points": [[x, y, z], ...]}`);
        /// synthetic frames are generated when omitted.
        #[arg(long)]
        frames: Option<PathBuf>,
        /// Number of synthetic frames.
        #[arg(long)]
        count: Option<usize>,
    },
    /// Fly one episode and write plot-ready artifacts, including the world,
    /// the voxel grids and the effective configuration.
    Export {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Only write the default configuration.
        #[arg(long)]
        default_config: bool,
    },
}

fn load(common: &Common) -> Result<SimConfig> {
    let mut c = match &common.config {
        Some(p) => SimConfig::load(p)?,
        None => SimConfig::default(),
    };
    if let Some(s) = common.seed {
        c.benchmark.seed = s;
        c.mapping.seed = s;
        if let Scenario::ForestCrossing { seed, .. } = &mut c.scenario {
            *seed = s;
        }
    }
    Ok(c)
}

fn apply_scenario(c: &mut SimConfig, args: &ScenarioArgs, seed: Option<u64>) {
    if let Some(k) = args.scenario {
        c.scenario = match k {
            ScenarioKind::SingleObstacle => Scenario::default(),
            ScenarioKind::Wall => Scenario::Wall { length: 12.0, altitude: 1.5, thickness: 0.2 },
            ScenarioKind::Forest => {
                Scenario::ForestCrossing { seed: seed.unwrap_or(0), forest: ForestParams::default(), trees_on_line: 2 }
            }
        };
    }
    if let (Some(d), Scenario::ForestCrossing { forest, .. }) = (args.density, &mut c.scenario) {
        forest.density = d;
    }
    if let Some(n) = args.c {
        c.episode.replanner.num_free = n;
    }
}

fn fly(c: &SimConfig, out: &Path, plot: bool) -> Result<()> {
    let (world, global) = c.scenario.build(c.episode.speed)?;
    let r = run_episode(&world, &global, &c.episode)?;
    if plot {
        write_plot_artifacts(out, &world, &r)?;
    } else {
        write_episode(out, &r)?;
    }
    let m = &r.metrics;
    let mut out = io::stdout().lock();
    writeln!(
        out,
        "success={} collided={} timed_out={} ticks={} normalized_path_length={:.4} min_clearance={:.3} m",
        m.success, m.collided, m.timed_out, m.ticks, m.normalized_path_length, m.min_clearance
    )?;
    writeln!(
        out,
        "mean ms: points {:.3}  move {:.3}  insert {:.3}  edt {:.3}  optimize {:.3}",
        m.timings.points.mean_ms,
        m.timings.move_volume.mean_ms,
        m.timings.insertion.mean_ms,
        m.timings.edt.mean_ms,
        m.timings.optimization.mean_ms
    )?;
    if let Some(d) = &m.diagnostics {
        writeln!(out, "{d}")?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Episode { common, scenario } => {
            let mut c = load(&common)?;
            apply_scenario(&mut c, &scenario, common.seed);
            fly(&c, &common.out, false)
        }
        Command::Export { common, scenario, default_config } => {
            fs::create_dir_all(&common.out)?;
            if default_config {
                fs::write(common.out.join("config.toml"), SimConfig::default().to_toml()?)?;
                return Ok(());
            }
            let mut c = load(&common)?;
            apply_scenario(&mut c, &scenario, common.seed);
            fs::write(common.out.join("config.toml"), c.to_toml()?)?;
            fly(&c, &common.out, true)
        }
        Command::Benchmark { common, c_sweep, density_sweep, trials } => {
            let mut c = load(&common)?.benchmark;
            if let Some(v) = c_sweep {
                c.c_sweep = v;
            }
            if let Some(v) = density_sweep {
                c.densities = v;
            }
            if let Some(n) = trials {
                c.trials = n;
            }
            let report = run_benchmark(&c)?;
            fs::create_dir_all(&common.out)?;
            fs::write(common.out.join("benchmark.json"), serde_json::to_string_pretty(&report)?)?;
            fs::write(common.out.join("benchmark.csv"), report.to_csv())?;
            fs::write(common.out.join("trials.csv"), report.trials_csv())?;
            write!(io::stdout().lock(), "{}", report.to_csv())?;
            Ok(())
        }
        Command::MapBench { common, frames, count } => {
            let mut c = load(&common)?.mapping;
            if let Some(n) = count {
                c.frames = n;
            }
            let frames = match frames {
                Some(p) => read_frames(std::io::BufReader::new(fs::File::open(p)?))?,
                None => synthetic_frames(&c)?,
            };
            let report = bench_mapping(&frames, &c)?;
            fs::create_dir_all(&common.out)?;
            fs::write(common.out.join("mapping.json"), serde_json::to_string_pretty(&report)?)?;
            let mut out = io::stdout().lock();
            writeln!(
                out,
                "frames={} skipped={} points/frame={:.0}",
                report.frames, report.skipped, report.mean_points
            )?;
            writeln!(
                out,
                "mean ms: move {:.3}  insert {:.3}  edt {:.3}",
                report.move_volume.mean_ms, report.insertion.mean_ms, report.edt.mean_ms
            )?;
            if let (Some(n), Some(r)) = (&report.naive, report.speed_ratio) {
                writeln!(
                    out,
                    "naive dense grid: move {:.3}  insert {:.3}  (ratio {r:.2})",
                    n.move_volume.mean_ms, n.insertion.mean_ms
                )?;
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Error::Io(e)) if e.kind() == io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
