//! Forest benchmark sweeping the number of free control points.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::episode::{run_episode, EpisodeConfig};
use super::world::{generate_forest, sample_start_goal, ForestParams};
use crate::error::{param, Result};
use crate::replanner::GlobalTrajectory;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchmarkConfig {
    pub seed: u64,
    /// One forest per density, in trees per square meter.
    pub densities: Vec<f64>,
    pub trials: usize,
    pub c_sweep: Vec<usize>,
    /// Template for the forests; its density is overridden.
    pub forest: ForestParams,
    pub min_start_goal_distance: f64,
    /// Required obstacle clearance of start and goal.
    pub start_goal_clearance: f64,
    /// Distance of start and goal from the box faces.
    pub margin: f64,
    pub episode: EpisodeConfig,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            densities: (1..=9).map(|k| 0.02 * k as f64).collect(),
            trials: 10,
            c_sweep: (2..=9).collect(),
            forest: ForestParams::default(),
            min_start_goal_distance: 4.0,
            start_goal_clearance: 1.0,
            margin: 1.0,
            episode: EpisodeConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub environment: usize,
    pub density: f64,
    pub trial: usize,
    pub c: usize,
    pub success: bool,
    pub collided: bool,
    pub timed_out: bool,
    pub ticks: usize,
    pub normalized_path_length: f64,
    pub mean_optimization_ms: f64,
    pub diagnostics: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub c: usize,
    pub episodes: usize,
    pub success_fraction: f64,
    /// Over successful episodes; `None` when there were none.
    pub mean_normalized_path_length: Option<f64>,
    /// Mean over every optimization query of every episode.
    pub mean_optimization_ms: f64,
    pub max_optimization_ms: f64,
    pub queries: usize,
    /// Success fraction per environment, in density order.
    pub success_by_environment: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub config: BenchmarkConfig,
    pub rows: Vec<SweepRow>,
    pub trials: Vec<TrialRecord>,
}

impl BenchmarkReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from(
            "c,episodes,success_fraction,mean_normalized_path_length,mean_optimization_ms,max_optimization_ms,queries\n",
        );
        for r in &self.rows {
            s += &format!(
                "{},{},{},{},{},{},{}\n",
                r.c,
                r.episodes,
                r.success_fraction,
                r.mean_normalized_path_length.map_or(String::new(), |v| v.to_string()),
                r.mean_optimization_ms,
                r.max_optimization_ms,
                r.queries
            );
        }
        s
    }

    pub fn trials_csv(&self) -> String {
        let mut s = String::from(
            "environment,density,trial,c,success,collided,timed_out,ticks,normalized_path_length,mean_optimization_ms\n",
        );
        for t in &self.trials {
            s += &format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                t.environment,
                t.density,
                t.trial,
                t.c,
                t.success,
                t.collided,
                t.timed_out,
                t.ticks,
                t.normalized_path_length,
                t.mean_optimization_ms
            );
        }
        s
    }
}

/// Runs every `(environment, trial)` pair once per value of `C`. Worlds and
/// start/goal pairs are shared across the sweep, and the sweep is the
/// innermost loop so slow drifts in machine load affect every `C` alike.
pub fn run_benchmark(config: &BenchmarkConfig) -> Result<BenchmarkReport> {
    if config.c_sweep.is_empty() || config.c_sweep.contains(&0) {
        return Err(param("the C sweep must be non-empty and positive"));
    }
    let envs = config.densities.len();
    let mut trials = Vec::new();
    let mut opt_ms: Vec<Vec<f64>> = vec![Vec::new(); config.c_sweep.len()];
    for (e, &density) in config.densities.iter().enumerate() {
        let forest = ForestParams { density, ..config.forest };
        let env_seed = config.seed.wrapping_mul(1000).wrapping_add(e as u64);
        let world = generate_forest(env_seed, &forest)?;
        let mut rng = ChaCha8Rng::seed_from_u64(env_seed ^ 0x5eed);
        for trial in 0..config.trials {
            let (start, goal) = sample_start_goal(
                &world,
                &mut rng,
                config.min_start_goal_distance,
                config.start_goal_clearance,
                config.margin,
            )?;
            let global = GlobalTrajectory::straight_line(start, goal, config.episode.speed)?;
            for (ci, &c) in config.c_sweep.iter().enumerate() {
                let mut ep = config.episode;
                ep.replanner.num_free = c;
                let r = run_episode(&world, &global, &ep)?;
                let per_tick: Vec<f64> = r.ticks.iter().map(|t| t.optimize_ms).collect();
                opt_ms[ci].extend(&per_tick);
                let m = &r.metrics;
                log::info!(
                    "env {e} density {density:.3} trial {trial} C={c}: success={} npl={:.3} opt={:.3} ms",
                    m.success,
                    m.normalized_path_length,
                    m.timings.optimization.mean_ms
                );
                trials.push(TrialRecord {
                    environment: e,
                    density,
                    trial,
                    c,
                    success: m.success,
                    collided: m.collided,
                    timed_out: m.timed_out,
                    ticks: m.ticks,
                    normalized_path_length: m.normalized_path_length,
                    mean_optimization_ms: m.timings.optimization.mean_ms,
                    diagnostics: m.diagnostics.clone(),
                });
            }
        }
    }
    let rows = config
        .c_sweep
        .iter()
        .zip(&opt_ms)
        .map(|(&c, ms)| {
            let mine: Vec<&TrialRecord> = trials.iter().filter(|t| t.c == c).collect();
            let ok: Vec<f64> = mine.iter().filter(|t| t.success).map(|t| t.normalized_path_length).collect();
            let frac = |v: &[&TrialRecord]| {
                if v.is_empty() {
                    0.0
                } else {
                    v.iter().filter(|t| t.success).count() as f64 / v.len() as f64
                }
            };
            SweepRow {
                c,
                episodes: mine.len(),
                success_fraction: frac(&mine),
                mean_normalized_path_length: (!ok.is_empty()).then(|| ok.iter().sum::<f64>() / ok.len() as f64),
                mean_optimization_ms: if ms.is_empty() { 0.0 } else { ms.iter().sum::<f64>() / ms.len() as f64 },
                max_optimization_ms: ms.iter().copied().fold(0.0, f64::max),
                queries: ms.len(),
                success_by_environment: (0..envs)
                    .map(|e| {
                        let v: Vec<&TrialRecord> = mine.iter().copied().filter(|t| t.environment == e).collect();
                        frac(&v)
                    })
                    .collect(),
            }
        })
        .collect();
    Ok(BenchmarkReport { config: config.clone(), rows, trials })
}
