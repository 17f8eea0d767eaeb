use serde::{Deserialize, Serialize};

use super::{traverse, Index3, RingBuffer3D};
use crate::error::{domain, Result};
use crate::Point3;

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Log-odds increments and clamping bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogOddsParams {
    pub hit: f32,
    pub miss: f32,
    pub min: f32,
    pub max: f32,
    /// A voxel is occupied when its log-odds is strictly above this value.
    pub occupied_threshold: f32,
}

impl LogOddsParams {
    pub fn from_probabilities(p_hit: f64, p_miss: f64, p_min: f64, p_max: f64) -> Self {
        Self {
            hit: logit(p_hit) as f32,
            miss: logit(p_miss) as f32,
            min: logit(p_min) as f32,
            max: logit(p_max) as f32,
            occupied_threshold: 0.0,
        }
    }
}

impl Default for LogOddsParams {
    fn default() -> Self {
        Self::from_probabilities(0.7, 0.4, 0.12, 0.97)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum VoxelFlag {
    Untouched = 0,
    Occupied = 1,
    FreeRay = 2,
}

/// Counters for one or more insertion batches.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct InsertStats {
    pub points: usize,
    pub marked: usize,
    pub raycasts: usize,
    pub update_passes: usize,
}

impl std::ops::AddAssign for InsertStats {
    fn add_assign(&mut self, o: Self) {
        self.points += o.points;
        self.marked += o.marked;
        self.raycasts += o.raycasts;
        self.update_passes += o.update_passes;
    }
}

/// Occupancy log-odds in a ring buffer, with the flag buffer used while
/// inserting a batch of measurements.
#[derive(Debug, Clone)]
pub struct OccupancyMap {
    grid: RingBuffer3D<f32>,
    flags: Vec<u8>,
    marked: Vec<Index3>,
    params: LogOddsParams,
}

impl OccupancyMap {
    pub fn new(power: u32, resolution: f64, params: LogOddsParams) -> Result<Self> {
        let grid = RingBuffer3D::new(power, resolution, 0.0f32)?;
        let flags = vec![VoxelFlag::Untouched as u8; grid.cells().len()];
        Ok(Self { grid, flags, marked: Vec::new(), params })
    }

    pub fn grid(&self) -> &RingBuffer3D<f32> {
        &self.grid
    }

    pub fn params(&self) -> &LogOddsParams {
        &self.params
    }

    pub fn flags(&self) -> &[u8] {
        &self.flags
    }

    pub fn move_volume(&mut self, center: &Point3) -> Result<bool> {
        self.grid.move_volume(center)
    }

    pub fn log_odds(&self, x: &Index3) -> Option<f32> {
        self.grid.get(x)
    }

    /// `None` outside the volume.
    pub fn is_occupied(&self, x: &Index3) -> Option<bool> {
        self.grid.get(x).map(|l| l > self.params.occupied_threshold)
    }

    /// Closest voxel inside the volume on the ray from `origin` to `p`.
    fn clip_to_volume(&self, origin: &Point3, p: &Point3) -> Index3 {
        let r = self.grid.resolution();
        let lo = self.grid.offset().map(|v| v as f64 * r);
        let hi = lo.add_scalar(self.grid.side() as f64 * r);
        let d = p - origin;
        let mut t_exit = 1.0f64;
        for k in 0..3 {
            if d[k] > 0.0 {
                t_exit = t_exit.min((hi[k] - origin[k]) / d[k]);
            } else if d[k] < 0.0 {
                t_exit = t_exit.min((lo[k] - origin[k]) / d[k]);
            }
        }
        let q = origin + d * t_exit.max(0.0);
        let o = self.grid.offset();
        let n = self.grid.side() as i64;
        q.map(|c| (c / r).floor() as i64).zip_map(&o, |v, ok| v.clamp(ok, ok + n - 1))
    }

    fn mark(&mut self, x: &Index3, flag: VoxelFlag) {
        let a = self.grid.address(x);
        let cur = self.flags[a];
        if cur == VoxelFlag::Untouched as u8 {
            self.marked.push(*x);
            self.flags[a] = flag as u8;
        } else if flag == VoxelFlag::Occupied {
            self.flags[a] = flag as u8;
        }
    }

    /// Inserts a point cloud given in world coordinates.
    ///
    /// Points inside the volume mark their voxel occupied, points outside
    /// mark the last voxel of their clipped ray as free. Every marked voxel
    /// is then raycast toward the sensor voxel, marking untouched voxels on
    /// the way as free (the two end voxels excluded). A final pass over the
    /// volume applies the hit and miss increments and clears the flags.
    pub fn insert_point_cloud(&mut self, origin: &Point3, points: &[Point3]) -> Result<InsertStats> {
        let origin_idx = self.grid.point_to_index(origin)?;
        if !self.grid.inside_volume(&origin_idx) {
            return Err(domain(format!("sensor origin {origin:?} outside the volume")));
        }
        let mut stats = InsertStats::default();
        self.marked.clear();
        for p in points {
            let Ok(x) = self.grid.point_to_index(p) else {
                continue;
            };
            stats.points += 1;
            if self.grid.inside_volume(&x) {
                self.mark(&x, VoxelFlag::Occupied);
            } else {
                let c = self.clip_to_volume(origin, p);
                self.mark(&c, VoxelFlag::FreeRay);
            }
        }
        stats.marked = self.marked.len();

        let endpoints = std::mem::take(&mut self.marked);
        for x in &endpoints {
            stats.raycasts += 1;
            let grid = &self.grid;
            let flags = &mut self.flags;
            traverse(*x, origin_idx, |v| {
                if v == *x || v == origin_idx {
                    return;
                }
                let a = grid.address(&v);
                if flags[a] == VoxelFlag::Untouched as u8 {
                    flags[a] = VoxelFlag::FreeRay as u8;
                }
            });
        }
        self.marked = endpoints;
        self.marked.clear();

        let LogOddsParams { hit, miss, min, max, .. } = self.params;
        for (cell, flag) in self.grid.cells_mut().iter_mut().zip(self.flags.iter_mut()) {
            match *flag {
                0 => continue,
                1 => *cell = (*cell + hit).clamp(min, max),
                _ => *cell = (*cell + miss).clamp(min, max),
            }
            *flag = 0;
        }
        stats.update_passes = 1;
        Ok(stats)
    }

    pub fn dump(&self) -> super::GridDump {
        self.grid.dump("log_odds")
    }
}
