//! Simulation harness: obstacle worlds, a simulated depth camera, closed-loop
//! episodes, the forest benchmark and the mapping benchmark.
//!
//! Everything except wall-clock timings is deterministic given the seeds in
//! [`SimConfig`].

pub mod benchmark;
pub mod episode;
pub mod mapping;
pub mod scenario;
pub mod sensor;
pub mod stats;
pub mod world;

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use benchmark::{run_benchmark, BenchmarkConfig, BenchmarkReport};
pub use episode::{run_episode, EpisodeConfig, EpisodeMetrics, EpisodeResult, MapConfig};
pub use mapping::{bench_mapping, MappingBenchConfig, MappingBenchReport};
pub use scenario::Scenario;
pub use sensor::{render_depth, DepthRenderer, Pose, SensorModel};
pub use world::{generate_forest, ForestParams, Primitive, World};

use crate::bspline::io;
use crate::error::{Error, Result};

/// Top-level configuration file, TOML. Every field has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct SimConfig {
    pub episode: EpisodeConfig,
    pub scenario: Scenario,
    pub benchmark: BenchmarkConfig,
    pub mapping: MappingBenchConfig,
}

impl SimConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&fs::read_to_string(path)?)
    }
}

fn csv_rows<T: Serialize>(header: &str, rows: &[T], fields: impl Fn(&T) -> Vec<String>) -> String {
    let mut s = String::from(header);
    s.push('\n');
    for r in rows {
        s += &fields(r).join(",");
        s.push('\n');
    }
    s
}

pub fn ticks_csv(result: &EpisodeResult) -> String {
    csv_rows(
        "tick,time,x,y,z,clearance,map_distance,points,cost_endpoint,cost_collision,cost_quadratic,cost_limit,cost_total,initial_cost,iterations,converged,aborted,points_ms,move_ms,insert_ms,edt_ms,optimize_ms",
        &result.ticks,
        |t| {
            vec![
                t.tick.to_string(),
                t.time.to_string(),
                t.x.to_string(),
                t.y.to_string(),
                t.z.to_string(),
                t.clearance.to_string(),
                t.map_distance.to_string(),
                t.points.to_string(),
                t.cost_endpoint.to_string(),
                t.cost_collision.to_string(),
                t.cost_quadratic.to_string(),
                t.cost_limit.to_string(),
                t.cost_total.to_string(),
                t.initial_cost.to_string(),
                t.iterations.to_string(),
                t.converged.to_string(),
                t.aborted.to_string(),
                t.points_ms.to_string(),
                t.move_ms.to_string(),
                t.insert_ms.to_string(),
                t.edt_ms.to_string(),
                t.optimize_ms.to_string(),
            ]
        },
    )
}

pub fn path_csv(result: &EpisodeResult) -> String {
    csv_rows("t,x,y,z,clearance", &result.path, |p| {
        [p.t, p.x, p.y, p.z, p.clearance].iter().map(f64::to_string).collect()
    })
}

pub fn commands_csv(result: &EpisodeResult) -> String {
    csv_rows("tick,knot_time,x,y,z", &result.commands, |c| {
        vec![
            c.tick.to_string(),
            c.knot_time.to_string(),
            c.point[0].to_string(),
            c.point[1].to_string(),
            c.point[2].to_string(),
        ]
    })
}

/// Writes the metrics, traces and trajectories of an episode to `dir`.
pub fn write_episode(dir: &Path, result: &EpisodeResult) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("metrics.json"), serde_json::to_string_pretty(&result.metrics)?)?;
    fs::write(dir.join("ticks.csv"), ticks_csv(result))?;
    fs::write(dir.join("path.csv"), path_csv(result))?;
    fs::write(dir.join("commands.csv"), commands_csv(result))?;
    fs::write(dir.join("trajectory.csv"), io::to_csv(&result.committed))?;
    Ok(())
}

/// Additionally writes the world and the final voxel grids.
pub fn write_plot_artifacts(dir: &Path, world: &World, result: &EpisodeResult) -> Result<()> {
    write_episode(dir, result)?;
    fs::write(dir.join("world.json"), world.to_json()?)?;
    fs::write(dir.join("trajectory.json"), io::to_json(&result.committed)?)?;
    fs::write(dir.join("occupancy.json"), result.map.dump().to_json()?)?;
    if let Some(f) = &result.field {
        fs::write(dir.join("distance.json"), f.dump().to_json()?)?;
    }
    Ok(())
}
