//! Robocentric 3D circular buffer.
//!
//! The buffer covers the `N³` voxel indices `x` with `0 ≤ x - o < N`
//! (`N = 2^p`). A voxel is stored at `x mod N` per axis, so translating the
//! volume only changes `o` and clears the slabs that newly entered the volume;
//! voxels that stay inside keep both their world index and their storage slot.

mod dump;
mod occupancy;
mod raycast;

pub use dump::GridDump;
pub use occupancy::{InsertStats, LogOddsParams, OccupancyMap, VoxelFlag};
pub use raycast::{raycast_indices, traverse};

use nalgebra::Vector3;

use crate::error::{param, Result};
use crate::Point3;

pub type Index3 = Vector3<i64>;

pub const MAX_POWER: u32 = 10;

/// `floor(p / r)` per axis.
pub fn point_to_index(p: &Point3, resolution: f64) -> Result<Index3> {
    if !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite()) {
        return Err(param(format!("non-finite point {p:?}")));
    }
    Ok(p.map(|c| (c / resolution).floor() as i64))
}

pub fn index_to_center(x: &Index3, resolution: f64) -> Point3 {
    x.map(|c| (c as f64 + 0.5) * resolution)
}

/// `!((x - o) & ~(2^p - 1))` per axis.
#[inline]
pub fn inside_volume_bitwise(x: &Index3, offset: &Index3, power: u32) -> bool {
    let not_mask = !((1i64 << power) - 1);
    ((x.x - offset.x) & not_mask) == 0 && ((x.y - offset.y) & not_mask) == 0 && ((x.z - offset.z) & not_mask) == 0
}

/// `v & (2^p - 1)`, i.e. `v mod 2^p` for any sign of `v`.
#[inline]
pub fn wrap_bitwise(v: i64, power: u32) -> i64 {
    v & ((1i64 << power) - 1)
}

#[derive(Debug, Clone)]
pub struct RingBuffer3D<T> {
    power: u32,
    offset: Index3,
    resolution: f64,
    center: Point3,
    cells: Vec<T>,
    empty: T,
}

impl<T: Copy> RingBuffer3D<T> {
    /// A buffer of side `2^power` centred on the origin, filled with `empty`.
    pub fn new(power: u32, resolution: f64, empty: T) -> Result<Self> {
        if power == 0 || power > MAX_POWER {
            return Err(param(format!("size exponent {power} outside [1, {MAX_POWER}]")));
        }
        if !(resolution > 0.0 && resolution.is_finite()) {
            return Err(param(format!("voxel size must be positive, got {resolution}")));
        }
        let n = 1usize << power;
        let half = (n / 2) as i64;
        Ok(Self {
            power,
            offset: Index3::new(-half, -half, -half),
            resolution,
            center: Point3::zeros(),
            cells: vec![empty; n * n * n],
            empty,
        })
    }

    pub fn power(&self) -> u32 {
        self.power
    }

    pub fn side(&self) -> usize {
        1 << self.power
    }

    pub fn offset(&self) -> Index3 {
        self.offset
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn center(&self) -> Point3 {
        self.center
    }

    pub fn empty_value(&self) -> T {
        self.empty
    }

    #[inline]
    pub fn inside_volume(&self, x: &Index3) -> bool {
        inside_volume_bitwise(x, &self.offset, self.power)
    }

    /// Storage slot of `x`. Unique among the indices inside the volume.
    #[inline]
    pub fn address(&self, x: &Index3) -> usize {
        let p = self.power;
        (wrap_bitwise(x.x, p) | (wrap_bitwise(x.y, p) << p) | (wrap_bitwise(x.z, p) << (2 * p))) as usize
    }

    pub fn point_to_index(&self, p: &Point3) -> Result<Index3> {
        point_to_index(p, self.resolution)
    }

    pub fn index_to_center(&self, x: &Index3) -> Point3 {
        index_to_center(x, self.resolution)
    }

    pub fn get(&self, x: &Index3) -> Option<T> {
        self.inside_volume(x).then(|| self.cells[self.address(x)])
    }

    pub fn get_mut(&mut self, x: &Index3) -> Option<&mut T> {
        if self.inside_volume(x) {
            let a = self.address(x);
            Some(&mut self.cells[a])
        } else {
            None
        }
    }

    /// Writes `v` at `x`; returns `false` when `x` is outside the volume.
    pub fn set(&mut self, x: &Index3, v: T) -> bool {
        match self.get_mut(x) {
            Some(c) => {
                *c = v;
                true
            }
            None => false,
        }
    }

    pub fn cells(&self) -> &[T] {
        &self.cells
    }

    pub fn cells_mut(&mut self) -> &mut [T] {
        &mut self.cells
    }

    pub fn fill(&mut self, v: T) {
        self.cells.fill(v);
    }

    /// Inside-volume indices, x fastest.
    pub fn indices(&self) -> impl Iterator<Item = Index3> + '_ {
        let n = self.side() as i64;
        let o = self.offset;
        (0..n).flat_map(move |k| (0..n).flat_map(move |j| (0..n).map(move |i| Index3::new(o.x + i, o.y + j, o.z + k))))
    }

    /// Offset that centres the volume on `center`.
    pub fn offset_for(&self, center: &Point3) -> Result<Index3> {
        let half = (self.side() / 2) as i64;
        Ok(self.point_to_index(center)?.add_scalar(-half))
    }

    /// Re-centres the volume on `new_center`. Voxels that newly entered the
    /// volume are reset to the empty value. Returns whether the offset moved;
    /// motion that stays within the same centre voxel is a no-op.
    pub fn move_volume(&mut self, new_center: &Point3) -> Result<bool> {
        let new_offset = self.offset_for(new_center)?;
        self.center = *new_center;
        if new_offset == self.offset {
            return Ok(false);
        }
        let n = self.side() as i64;
        let shift = new_offset - self.offset;
        if shift.iter().any(|s| s.abs() >= n) {
            self.offset = new_offset;
            self.cells.fill(self.empty);
            return Ok(true);
        }
        for axis in 0..3 {
            let s = shift[axis];
            let range = if s > 0 {
                self.offset[axis] + n..new_offset[axis] + n
            } else if s < 0 {
                new_offset[axis]..self.offset[axis]
            } else {
                continue;
            };
            self.clear_slab(axis, range, &new_offset);
        }
        self.offset = new_offset;
        Ok(true)
    }

    fn clear_slab(&mut self, axis: usize, range: std::ops::Range<i64>, offset: &Index3) {
        let n = self.side() as i64;
        let (a1, a2) = ((axis + 1) % 3, (axis + 2) % 3);
        let mut x = Index3::zeros();
        for v in range {
            x[axis] = v;
            for i in 0..n {
                x[a1] = offset[a1] + i;
                for j in 0..n {
                    x[a2] = offset[a2] + j;
                    let a = self.address(&x);
                    self.cells[a] = self.empty;
                }
            }
        }
    }
}

impl<T: Copy + Into<f64>> RingBuffer3D<T> {
    pub fn dump(&self, kind: &str) -> GridDump {
        GridDump::from_buffer(self, kind)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashMap;

    #[test]
    fn point_to_index_floors() {
        let r = 0.1;
        assert_eq!(point_to_index(&Point3::new(0.05, 0.05, 0.05), r).unwrap(), Index3::zeros());
        assert_eq!(point_to_index(&Point3::new(-0.05, 0.0, 0.0), r).unwrap().x, -1);
        assert!(point_to_index(&Point3::new(f64::NAN, 0.0, 0.0), r).is_err());
    }

    #[test]
    fn point_index_round_trip_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10_000 {
            let r = rng.random_range(0.01..1.0);
            let q = Point3::new(
                rng.random_range(-100.0..100.0),
                rng.random_range(-100.0..100.0),
                rng.random_range(-100.0..100.0),
            );
            let c = index_to_center(&point_to_index(&q, r).unwrap(), r);
            assert!((c - q).norm() <= r / 2.0 * 3f64.sqrt() + 1e-9);
        }
    }

    #[test]
    fn inside_examples() {
        let o = Index3::zeros();
        assert!(inside_volume_bitwise(&Index3::new(5, 0, 0), &o, 4));
        assert!(!inside_volume_bitwise(&Index3::new(16, 0, 0), &o, 4));
        assert!(!inside_volume_bitwise(&Index3::new(-1, 0, 0), &o, 4));
        let mut b = RingBuffer3D::new(4, 1.0, 0u8).unwrap();
        b.move_volume(&Point3::new(8.5, 8.5, 8.5)).unwrap();
        assert_eq!(b.offset(), Index3::zeros());
        assert_eq!(b.address(&Index3::new(5, 0, 0)), 5);
        assert_eq!(b.address(&Index3::new(1, 2, 3)), 1 + 2 * 16 + 3 * 256);
    }

    #[test]
    fn address_is_bijective_for_any_placement() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..5 {
            let mut b = RingBuffer3D::new(3, 0.5, 0u8).unwrap();
            let c = Point3::new(
                rng.random_range(-50.0..50.0),
                rng.random_range(-50.0..50.0),
                rng.random_range(-50.0..50.0),
            );
            b.move_volume(&c).unwrap();
            let mut seen = vec![false; 512];
            for x in b.indices() {
                assert!(b.inside_volume(&x));
                let a = b.address(&x);
                assert!(!seen[a]);
                seen[a] = true;
            }
            assert!(seen.iter().all(|&s| s));
        }
    }

    #[test]
    fn zero_move_changes_nothing() {
        let mut b = RingBuffer3D::new(3, 1.0, 0u32).unwrap();
        for (i, c) in b.cells_mut().iter_mut().enumerate() {
            *c = i as u32;
        }
        let before = b.cells().to_vec();
        assert!(!b.move_volume(&Point3::new(0.2, 0.7, 0.9)).unwrap());
        assert_eq!(b.cells(), before.as_slice());
    }

    #[test]
    fn full_side_move_resets_everything() {
        let mut b = RingBuffer3D::new(3, 1.0, 0u32).unwrap();
        b.fill(7);
        b.move_volume(&Point3::new(8.0, 0.0, 0.0)).unwrap();
        assert!(b.cells().iter().all(|&c| c == 0));
    }

    /// Reference: an unbounded map from world index to value, restricted to
    /// the current volume and reset when a voxel leaves it.
    #[test]
    fn translation_matches_infinite_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut b = RingBuffer3D::new(3, 0.25, -1i32).unwrap();
        let mut world: HashMap<(i64, i64, i64), i32> = HashMap::new();
        let mut center = Point3::zeros();
        for step in 0..200 {
            for _ in 0..20 {
                let o = b.offset();
                let x = Index3::new(
                    o.x + rng.random_range(0..8),
                    o.y + rng.random_range(0..8),
                    o.z + rng.random_range(0..8),
                );
                let v = rng.random_range(0..1000);
                b.set(&x, v);
                world.insert((x.x, x.y, x.z), v);
            }
            center +=
                Point3::new(rng.random_range(-0.6..0.6), rng.random_range(-0.6..0.6), rng.random_range(-0.6..0.6));
            if step % 50 == 49 {
                center += Point3::new(3.0, 0.0, 0.0);
            }
            b.move_volume(&center).unwrap();
            world.retain(|k, _| b.inside_volume(&Index3::new(k.0, k.1, k.2)));
            for x in b.indices() {
                let expect = world.get(&(x.x, x.y, x.z)).copied().unwrap_or(-1);
                assert_eq!(b.get(&x), Some(expect));
            }
        }
    }
}
