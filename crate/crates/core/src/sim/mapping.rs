//! Mapping throughput benchmark: point cloud insertion and distance
//! transform timings, with an optional naive dense-grid baseline.

use std::io::BufRead;

use serde::{Deserialize, Serialize};

use super::sensor::{DepthRenderer, Pose, SensorModel};
use super::stats::{timed, TimingStats};
use super::world::{generate_forest, ForestParams};
use crate::edt::compute_edt;
use crate::error::{domain, param, Error, Result};
use crate::ringbuffer::{point_to_index, traverse, Index3, LogOddsParams, OccupancyMap};
use crate::Point3;

/// A depth frame in world coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub pose: Option<Pose>,
    pub points: Vec<Point3>,
}

/// Reads one JSON [`Frame`] per non-empty line.
pub fn read_frames(reader: impl BufRead) -> Result<Vec<Frame>> {
    let mut frames = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let f: Frame =
            serde_json::from_str(&line).map_err(|e| Error::Format(format!("frame on line {}: {e}", n + 1)))?;
        frames.push(f);
    }
    Ok(frames)
}

pub fn write_frames(frames: &[Frame]) -> Result<String> {
    let mut s = String::new();
    for f in frames {
        s += &serde_json::to_string(f)?;
        s.push('\n');
    }
    Ok(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MappingBenchConfig {
    pub seed: u64,
    pub frames: usize,
    pub power: u32,
    pub resolution: f64,
    pub log_odds: LogOddsParams,
    pub sensor: SensorModel,
    pub forest: ForestParams,
    /// Speed of the synthetic flight in m/s.
    pub speed: f64,
    /// Feed the first synthetic frame repeatedly.
    pub identical_frames: bool,
    pub naive_baseline: bool,
}

impl Default for MappingBenchConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            frames: 100,
            power: 6,
            resolution: 0.1,
            log_odds: LogOddsParams::default(),
            sensor: SensorModel::default(),
            forest: ForestParams { density: 0.3, ..ForestParams::default() },
            speed: 1.0,
            identical_frames: false,
            naive_baseline: true,
        }
    }
}

/// Frames along a straight flight through a random forest, one per sensor
/// period.
pub fn synthetic_frames(config: &MappingBenchConfig) -> Result<Vec<Frame>> {
    let world = generate_forest(config.seed, &config.forest)?;
    let renderer = DepthRenderer::new(config.sensor)?;
    let [sx, sy, sz] = config.forest.size;
    let step = config.speed / config.sensor.rate_hz;
    let mut frames = Vec::with_capacity(config.frames);
    for k in 0..config.frames {
        let k = if config.identical_frames { 0 } else { k };
        let x = (0.5 + k as f64 * step).rem_euclid(sx);
        let pose = Pose { position: Point3::new(x, sy / 2.0, sz / 4.0), yaw: 0.0 };
        frames.push(Frame { pose: Some(pose), points: renderer.render_world(&world, &pose) });
    }
    Ok(frames)
}

/// Dense grid that reallocates and copies on every move and updates each
/// ray independently, without deduplicating voxels.
#[derive(Debug, Clone)]
pub struct NaiveDenseGrid {
    side: i64,
    resolution: f64,
    offset: Index3,
    params: LogOddsParams,
    cells: Vec<f32>,
}

impl NaiveDenseGrid {
    pub fn new(power: u32, resolution: f64, params: LogOddsParams) -> Self {
        let side = 1i64 << power;
        Self {
            side,
            resolution,
            offset: Index3::repeat(-side / 2),
            params,
            cells: vec![0.0; (side * side * side) as usize],
        }
    }

    fn slot(&self, x: &Index3) -> Option<usize> {
        let d = x - self.offset;
        let n = self.side;
        d.iter().all(|&c| (0..n).contains(&c)).then(|| (d.x + n * (d.y + n * d.z)) as usize)
    }

    pub fn get(&self, x: &Index3) -> Option<f32> {
        self.slot(x).map(|s| self.cells[s])
    }

    pub fn move_to(&mut self, center: &Point3) -> Result<()> {
        let offset = point_to_index(center, self.resolution)? - Index3::repeat(self.side / 2);
        if offset == self.offset {
            return Ok(());
        }
        let n = self.side;
        let mut cells = vec![0.0; self.cells.len()];
        for z in 0..n {
            for y in 0..n {
                for x in 0..n {
                    let w = offset + Index3::new(x, y, z);
                    if let Some(s) = self.slot(&w) {
                        cells[(x + n * (y + n * z)) as usize] = self.cells[s];
                    }
                }
            }
        }
        self.cells = cells;
        self.offset = offset;
        Ok(())
    }

    fn update(&mut self, x: &Index3, delta: f32) {
        if let Some(s) = self.slot(x) {
            self.cells[s] = (self.cells[s] + delta).clamp(self.params.min, self.params.max);
        }
    }

    pub fn insert_point_cloud(&mut self, origin: &Point3, points: &[Point3]) -> Result<()> {
        let o = point_to_index(origin, self.resolution)?;
        if self.slot(&o).is_none() {
            return Err(domain("sensor origin outside the volume"));
        }
        let (hit, miss) = (self.params.hit, self.params.miss);
        for p in points {
            let Ok(x) = point_to_index(p, self.resolution) else {
                continue;
            };
            let inside = self.slot(&x).is_some();
            traverse(o, x, |v| {
                if v != x {
                    self.update(&v, miss);
                }
            });
            if inside {
                self.update(&x, hit);
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveTimings {
    pub move_volume: TimingStats,
    pub insertion: TimingStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MappingBenchReport {
    pub frames: usize,
    pub skipped: usize,
    pub mean_points: f64,
    pub move_volume: TimingStats,
    pub insertion: TimingStats,
    pub edt: TimingStats,
    pub naive: Option<NaiveTimings>,
    /// Naive over ring-buffer mean time for move plus insertion.
    pub speed_ratio: Option<f64>,
}

pub fn bench_mapping(frames: &[Frame], config: &MappingBenchConfig) -> Result<MappingBenchReport> {
    if !(config.resolution > 0.0) {
        return Err(param("resolution must be positive"));
    }
    let mut map = OccupancyMap::new(config.power, config.resolution, config.log_odds)?;
    let mut naive =
        config.naive_baseline.then(|| NaiveDenseGrid::new(config.power, config.resolution, config.log_odds));
    let mut t: [Vec<f64>; 5] = Default::default();
    let (mut skipped, mut points) = (0, 0);
    for (k, f) in frames.iter().enumerate() {
        let Some(pose) = f.pose else {
            log::warn!("frame {k} has no pose, skipped");
            skipped += 1;
            continue;
        };
        let (r, a) = timed(|| map.move_volume(&pose.position));
        r?;
        let (r, b) = timed(|| map.insert_point_cloud(&pose.position, &f.points));
        r?;
        let (_, c) = timed(|| compute_edt(&map, false));
        t[0].push(a);
        t[1].push(b);
        t[2].push(c);
        points += f.points.len();
        if let Some(g) = naive.as_mut() {
            let (r, d) = timed(|| g.move_to(&pose.position));
            r?;
            let (r, e) = timed(|| g.insert_point_cloud(&pose.position, &f.points));
            r?;
            t[3].push(d);
            t[4].push(e);
        }
    }
    let used = frames.len() - skipped;
    let [mv, ins, edt, nmv, nins] = t.map(|v| TimingStats::from_ms(&v));
    let naive = naive.map(|_| NaiveTimings { move_volume: nmv, insertion: nins });
    let speed_ratio = naive.as_ref().and_then(|n| {
        let ring = mv.mean_ms + ins.mean_ms;
        (ring > 0.0).then(|| (n.move_volume.mean_ms + n.insertion.mean_ms) / ring)
    });
    Ok(MappingBenchReport {
        frames: used,
        skipped,
        mean_points: if used > 0 { points as f64 / used as f64 } else { 0.0 },
        move_volume: mv,
        insertion: ins,
        edt,
        naive,
        speed_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn naive_grid_moves_like_a_translation() {
        let mut g = NaiveDenseGrid::new(3, 1.0, LogOddsParams::default());
        let x = Index3::new(1, 2, 3);
        g.update(&x, 0.5);
        g.move_to(&Point3::new(2.5, 0.5, 0.5)).unwrap();
        assert_eq!(g.get(&x), Some(0.5));
        g.move_to(&Point3::new(100.0, 0.0, 0.0)).unwrap();
        assert_eq!(g.get(&x), None);
        g.move_to(&Point3::new(0.5, 0.5, 0.5)).unwrap();
        assert_eq!(g.get(&x), Some(0.0));
    }

    #[test]
    fn frames_round_trip_and_missing_poses_are_skipped() {
        let frames = vec![
            Frame { pose: None, points: vec![Point3::new(1.0, 0.0, 0.0)] },
            Frame {
                pose: Some(Pose { position: Point3::new(0.05, 0.05, 0.05), yaw: 0.0 }),
                points: vec![Point3::new(1.0, 0.0, 0.0)],
            },
        ];
        let text = write_frames(&frames).unwrap();
        let back = read_frames(text.as_bytes()).unwrap();
        assert_eq!(back, frames);
        let cfg = MappingBenchConfig { power: 4, ..Default::default() };
        let r = bench_mapping(&back, &cfg).unwrap();
        assert_eq!((r.frames, r.skipped), (1, 1));
        assert!(r.speed_ratio.is_some());
        assert!(read_frames("{not json".as_bytes()).is_err());
    }

    #[test]
    fn empty_frames_still_time_the_flag_pass() {
        let frames = vec![Frame { pose: Some(Pose { position: Point3::zeros(), yaw: 0.0 }), points: vec![] }; 5];
        let r = bench_mapping(&frames, &MappingBenchConfig { power: 5, naive_baseline: false, ..Default::default() })
            .unwrap();
        assert_eq!(r.insertion.count, 5);
        assert_eq!(r.mean_points, 0.0);
        assert!(r.naive.is_none());
    }
}
