//! Euclidean distance transform of the occupancy buffer.
//!
//! Squared distances between voxel centres are computed exactly in integers
//! with three 1D lower-envelope passes (Felzenszwalb–Huttenlocher), then
//! scaled by the voxel size. Queries interpolate trilinearly between voxel
//! centres. Distances are measured to occupied voxel centres, so they are
//! biased by up to half a voxel against the true surface.
//!
//! Outside the interpolable interior the field reports [`DistanceField::far_distance`]
//! with a zero gradient: unmapped space is treated as free.

use crate::ringbuffer::{Index3, OccupancyMap, RingBuffer3D};
use crate::Point3;

/// Marker for "no site on this line" in the integer passes.
pub const NO_SITE: i64 = i64::MAX;

/// One lower-envelope pass along a line; `f` holds squared distances or
/// [`NO_SITE`].
fn envelope_1d(f: &[i64], out: &mut [i64], v: &mut Vec<usize>, z: &mut Vec<f64>) {
    v.clear();
    z.clear();
    for (q, &fq) in f.iter().enumerate() {
        if fq == NO_SITE {
            continue;
        }
        if v.is_empty() {
            v.push(q);
            z.push(f64::NEG_INFINITY);
            continue;
        }
        let hq = (fq + (q * q) as i64) as f64;
        loop {
            let p = *v.last().unwrap();
            let hp = (f[p] + (p * p) as i64) as f64;
            let s = (hq - hp) / (2.0 * (q as f64 - p as f64));
            if s <= *z.last().unwrap() {
                v.pop();
                z.pop();
            } else {
                v.push(q);
                z.push(s);
                break;
            }
        }
    }
    if v.is_empty() {
        out.fill(NO_SITE);
        return;
    }
    let mut k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        while k + 1 < v.len() && z[k + 1] < q as f64 {
            k += 1;
        }
        let d = q as i64 - v[k] as i64;
        *o = d * d + f[v[k]];
    }
}

/// Squared Euclidean distance (in voxels²) from every cell of an `n³` cube
/// to the nearest `true` cell; `x` is the fastest index. Cells with no
/// occupied cell anywhere get [`NO_SITE`].
pub fn squared_edt(occupied: &[bool], n: usize) -> Vec<i64> {
    assert_eq!(occupied.len(), n * n * n);
    let mut grid: Vec<i64> = occupied.iter().map(|&o| if o { 0 } else { NO_SITE }).collect();
    let mut line = vec![0i64; n];
    let mut out = vec![0i64; n];
    let (mut v, mut z) = (Vec::with_capacity(n), Vec::with_capacity(n));
    for stride in [1, n, n * n] {
        for base in 0..n * n {
            // enumerate the lines orthogonal to `stride`
            let start = match stride {
                1 => base * n,
                s if s == n => (base / n) * n * n + base % n,
                _ => base,
            };
            for (i, l) in line.iter_mut().enumerate() {
                *l = grid[start + i * stride];
            }
            envelope_1d(&line, &mut out, &mut v, &mut z);
            for (i, o) in out.iter().enumerate() {
                grid[start + i * stride] = *o;
            }
        }
    }
    grid
}

#[derive(Debug, Clone)]
pub struct DistanceField {
    grid: RingBuffer3D<f64>,
    far: f64,
}

impl DistanceField {
    /// Builds the field from per-voxel occupancy of a buffer's geometry.
    pub fn from_occupancy<T: Copy>(buf: &RingBuffer3D<T>, is_occupied: impl Fn(T) -> bool) -> Self {
        let n = buf.side();
        let occupied: Vec<bool> = buf.indices().map(|x| is_occupied(buf.cells()[buf.address(&x)])).collect();
        let sq = squared_edt(&occupied, n);
        let r = buf.resolution();
        let far = n as f64 * r;
        let mut grid = RingBuffer3D::new(buf.power(), r, far).expect("same geometry");
        grid.move_volume(&buf.center()).expect("finite centre");
        debug_assert_eq!(grid.offset(), buf.offset());
        let idx: Vec<Index3> = buf.indices().collect();
        for (x, s) in idx.iter().zip(sq) {
            let d = if s == NO_SITE { far } else { r * (s as f64).sqrt() };
            grid.set(x, d);
        }
        Self { grid, far }
    }

    /// Builds a field with arbitrary per-voxel distances, mostly for tests.
    pub fn from_fn(power: u32, resolution: f64, center: &Point3, f: impl Fn(&Index3) -> f64) -> Self {
        let mut grid = RingBuffer3D::new(power, resolution, 0.0).expect("valid geometry");
        grid.move_volume(center).expect("finite centre");
        let idx: Vec<Index3> = grid.indices().collect();
        for x in &idx {
            grid.set(x, f(x));
        }
        let far = grid.side() as f64 * resolution;
        Self { grid, far }
    }

    pub fn grid(&self) -> &RingBuffer3D<f64> {
        &self.grid
    }

    pub fn far_distance(&self) -> f64 {
        self.far
    }

    pub fn voxel_distance(&self, x: &Index3) -> Option<f64> {
        self.grid.get(x)
    }

    /// Lower corner of the interpolation cell around `p` and the fractional
    /// position inside it, or `None` when any corner is outside the volume.
    fn cell(&self, p: &Point3) -> Option<(Index3, Point3)> {
        let r = self.grid.resolution();
        let g = p / r - Point3::repeat(0.5);
        if !g.iter().all(|c| c.is_finite()) {
            return None;
        }
        let base = g.map(|c| c.floor() as i64);
        let frac = g - base.map(|c| c as f64);
        let top = base.add_scalar(1);
        (self.grid.inside_volume(&base) && self.grid.inside_volume(&top)).then_some((base, frac))
    }

    fn corners(&self, base: &Index3) -> [f64; 8] {
        let mut c = [0.0; 8];
        for (k, v) in c.iter_mut().enumerate() {
            let x = base + Index3::new((k & 1) as i64, ((k >> 1) & 1) as i64, ((k >> 2) & 1) as i64);
            *v = self.grid.cells()[self.grid.address(&x)];
        }
        c
    }

    pub fn distance_at(&self, p: &Point3) -> f64 {
        self.distance_and_gradient(p).0
    }

    pub fn gradient_at(&self, p: &Point3) -> Point3 {
        self.distance_and_gradient(p).1
    }

    /// Trilinear distance and the analytic gradient of the interpolant.
    pub fn distance_and_gradient(&self, p: &Point3) -> (f64, Point3) {
        let Some((base, f)) = self.cell(p) else {
            return (self.far, Point3::zeros());
        };
        let c = self.corners(&base);
        let (fx, fy, fz) = (f.x, f.y, f.z);
        // interpolate along x first
        let c00 = c[0] + fx * (c[1] - c[0]);
        let c10 = c[2] + fx * (c[3] - c[2]);
        let c01 = c[4] + fx * (c[5] - c[4]);
        let c11 = c[6] + fx * (c[7] - c[6]);
        let c0 = c00 + fy * (c10 - c00);
        let c1 = c01 + fy * (c11 - c01);
        let d = c0 + fz * (c1 - c0);

        let dx0 = (1.0 - fy) * (c[1] - c[0]) + fy * (c[3] - c[2]);
        let dx1 = (1.0 - fy) * (c[5] - c[4]) + fy * (c[7] - c[6]);
        let gx = (1.0 - fz) * dx0 + fz * dx1;
        let gy = (1.0 - fz) * (c10 - c00) + fz * (c11 - c01);
        let gz = c1 - c0;
        (d, Point3::new(gx, gy, gz) / self.grid.resolution())
    }

    pub fn dump(&self) -> crate::ringbuffer::GridDump {
        self.grid.dump("distance")
    }
}

/// Distance transform of an occupancy map. Unknown voxels (log-odds exactly
/// at the prior) count as free unless `unknown_is_occupied` is set.
pub fn compute_edt(map: &OccupancyMap, unknown_is_occupied: bool) -> DistanceField {
    let th = map.params().occupied_threshold;
    DistanceField::from_occupancy(map.grid(), |l: f32| l > th || (unknown_is_occupied && l == 0.0))
}
