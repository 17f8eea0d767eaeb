//! Ground-truth obstacle worlds built from analytic primitives.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::cost::DistanceQuery;
use crate::error::{param, Result};
use crate::Point3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Primitive {
    /// Vertical cylinder spanning `z_min..z_max`.
    Cylinder {
        center: [f64; 2],
        radius: f64,
        z_min: f64,
        z_max: f64,
    },
    Sphere {
        center: [f64; 3],
        radius: f64,
    },
    AxisBox {
        min: [f64; 3],
        max: [f64; 3],
    },
}

/// Signed distance to a box of half extents `h` centred at the origin, and
/// its gradient.
fn box_sdf(q: Point3, h: Point3) -> (f64, Point3) {
    let d = q.abs() - h;
    let sign = q.map(|c| if c < 0.0 { -1.0 } else { 1.0 });
    let outside = d.map(|c| c.max(0.0));
    let n = outside.norm();
    if n > 0.0 {
        (n, outside.component_mul(&sign) / n)
    } else {
        let a = d.imax();
        let mut g = Point3::zeros();
        g[a] = sign[a];
        (d[a], g)
    }
}

impl Primitive {
    /// Signed distance (negative inside) and its gradient.
    pub fn signed_distance(&self, p: &Point3) -> (f64, Point3) {
        match *self {
            Self::Sphere { center, radius } => {
                let v = p - Point3::from(center);
                let n = v.norm();
                let g = if n > 0.0 { v / n } else { Point3::z() };
                (n - radius, g)
            }
            Self::AxisBox { min, max } => {
                let (lo, hi) = (Point3::from(min), Point3::from(max));
                box_sdf(p - (lo + hi) / 2.0, (hi - lo) / 2.0)
            }
            Self::Cylinder { center, radius, z_min, z_max } => {
                let v = nalgebra::Vector2::new(p.x - center[0], p.y - center[1]);
                let rn = v.norm();
                let radial = if rn > 0.0 { v / rn } else { nalgebra::Vector2::x() };
                let dr = rn - radius;
                let zc = (z_min + z_max) / 2.0;
                let dz = (p.z - zc).abs() - (z_max - z_min) / 2.0;
                let sz = if p.z < zc { -1.0 } else { 1.0 };
                if dr <= 0.0 && dz <= 0.0 {
                    if dr > dz {
                        (dr, Point3::new(radial.x, radial.y, 0.0))
                    } else {
                        (dz, Point3::new(0.0, 0.0, sz))
                    }
                } else {
                    let (a, b) = (dr.max(0.0), dz.max(0.0));
                    let n = a.hypot(b);
                    (n, Point3::new(radial.x * a, radial.y * a, sz * b) / n)
                }
            }
        }
    }

    /// Smallest `t > 0` with `o + t·d` on the surface.
    pub fn ray_intersect(&self, o: &Point3, d: &Point3) -> Option<f64> {
        let mut best: Option<f64> = None;
        let mut take = |t: f64| {
            if t > 0.0 && best.is_none_or(|b| t < b) {
                best = Some(t);
            }
        };
        match *self {
            Self::Sphere { center, radius } => {
                let oc = o - Point3::from(center);
                let a = d.norm_squared();
                let b = oc.dot(d);
                let c = oc.norm_squared() - radius * radius;
                let disc = b * b - a * c;
                if disc >= 0.0 {
                    let s = disc.sqrt();
                    take((-b - s) / a);
                    take((-b + s) / a);
                }
            }
            Self::AxisBox { min, max } => {
                let (mut t0, mut t1) = (f64::NEG_INFINITY, f64::INFINITY);
                for a in 0..3 {
                    if d[a] == 0.0 {
                        if o[a] < min[a] || o[a] > max[a] {
                            return None;
                        }
                        continue;
                    }
                    let (ta, tb) = ((min[a] - o[a]) / d[a], (max[a] - o[a]) / d[a]);
                    t0 = t0.max(ta.min(tb));
                    t1 = t1.min(ta.max(tb));
                }
                if t0 <= t1 {
                    take(t0);
                    take(t1);
                }
            }
            Self::Cylinder { center, radius, z_min, z_max } => {
                let (ox, oy) = (o.x - center[0], o.y - center[1]);
                let a = d.x * d.x + d.y * d.y;
                if a > 0.0 {
                    let b = ox * d.x + oy * d.y;
                    let c = ox * ox + oy * oy - radius * radius;
                    let disc = b * b - a * c;
                    if disc >= 0.0 {
                        let s = disc.sqrt();
                        for t in [(-b - s) / a, (-b + s) / a] {
                            let z = o.z + t * d.z;
                            if (z_min..=z_max).contains(&z) {
                                take(t);
                            }
                        }
                    }
                }
                if d.z != 0.0 {
                    for zc in [z_min, z_max] {
                        let t = (zc - o.z) / d.z;
                        let (x, y) = (ox + t * d.x, oy + t * d.y);
                        if x * x + y * y <= radius * radius {
                            take(t);
                        }
                    }
                }
            }
        }
        best
    }

    /// Radius of a sphere around [`Primitive::anchor`] containing the primitive.
    pub fn bounding_radius(&self) -> f64 {
        match *self {
            Self::Sphere { radius, .. } => radius,
            Self::AxisBox { min, max } => (Point3::from(max) - Point3::from(min)).norm() / 2.0,
            Self::Cylinder { radius, z_min, z_max, .. } => radius.hypot((z_max - z_min) / 2.0),
        }
    }

    pub fn anchor(&self) -> Point3 {
        match *self {
            Self::Sphere { center, .. } => Point3::from(center),
            Self::AxisBox { min, max } => (Point3::from(min) + Point3::from(max)) / 2.0,
            Self::Cylinder { center, z_min, z_max, .. } => Point3::new(center[0], center[1], (z_min + z_max) / 2.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct World {
    pub min: [f64; 3],
    pub max: [f64; 3],
    pub obstacles: Vec<Primitive>,
    pub seed: u64,
}

impl World {
    pub fn empty(min: [f64; 3], max: [f64; 3]) -> Self {
        Self { min, max, obstacles: Vec::new(), seed: 0 }
    }

    pub fn contains(&self, p: &Point3) -> bool {
        (0..3).all(|a| p[a] >= self.min[a] && p[a] <= self.max[a])
    }

    /// Signed distance to the nearest obstacle; infinite in an empty world.
    pub fn signed_distance(&self, p: &Point3) -> (f64, Point3) {
        self.obstacles
            .iter()
            .map(|o| o.signed_distance(p))
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .unwrap_or((f64::INFINITY, Point3::zeros()))
    }

    pub fn distance(&self, p: &Point3) -> f64 {
        self.signed_distance(p).0
    }

    /// Whether a sphere of `radius` at `p` touches an obstacle.
    pub fn collides(&self, p: &Point3, radius: f64) -> bool {
        self.distance(p) < radius
    }

    /// First obstacle hit along the ray within `max_t`, as a ray parameter.
    pub fn cast_ray(&self, o: &Point3, d: &Point3, max_t: f64) -> Option<f64> {
        self.obstacles.iter().filter_map(|p| p.ray_intersect(o, d)).filter(|&t| t <= max_t).min_by(f64::total_cmp)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

impl DistanceQuery for World {
    fn distance_and_gradient(&self, p: &Point3) -> (f64, Point3) {
        self.signed_distance(p)
    }
}

/// Random forest of vertical cylinders.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestParams {
    /// Box extents; the box starts at the origin.
    pub size: [f64; 3],
    /// Expected trees per square meter of ground.
    pub density: f64,
    pub radius_min: f64,
    pub radius_max: f64,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self { size: [10.0; 3], density: 0.05, radius_min: 0.15, radius_max: 0.4 }
    }
}

/// Largest expected fraction of the ground covered by trunks.
pub const MAX_COVERAGE: f64 = 0.5;

/// Places a Poisson number of trees (mean `density · area`) uniformly inside
/// the box. Trees span the full height and may overlap.
pub fn generate_forest(seed: u64, params: &ForestParams) -> Result<World> {
    let ForestParams { size, density, radius_min, radius_max } = *params;
    if !(density >= 0.0 && density.is_finite()) {
        return Err(param(format!("density must be non-negative, got {density}")));
    }
    if !(radius_min > 0.0 && radius_min <= radius_max) {
        return Err(param(format!("invalid radius range [{radius_min}, {radius_max}]")));
    }
    if size.iter().any(|&s| !(s > 2.0 * radius_max)) {
        return Err(param(format!("box {size:?} too small for radius {radius_max}")));
    }
    let coverage = density * std::f64::consts::PI * radius_max * radius_max;
    if coverage > MAX_COVERAGE {
        return Err(param(format!(
            "density {density} with radius {radius_max} would cover {:.0}% of the ground",
            coverage * 100.0
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mean = density * size[0] * size[1];
    let count = if mean > 0.0 { Poisson::new(mean).expect("positive mean").sample(&mut rng) as usize } else { 0 };
    let obstacles = (0..count)
        .map(|_| {
            let radius = if radius_min < radius_max { rng.random_range(radius_min..radius_max) } else { radius_min };
            Primitive::Cylinder {
                center: [rng.random_range(radius..size[0] - radius), rng.random_range(radius..size[1] - radius)],
                radius,
                z_min: 0.0,
                z_max: size[2],
            }
        })
        .collect();
    Ok(World { min: [0.0; 3], max: size, obstacles, seed })
}

/// Random start/goal pairs inside the box, at least `min_distance` apart and
/// with `clearance` to every obstacle.
pub fn sample_start_goal(
    world: &World,
    rng: &mut impl Rng,
    min_distance: f64,
    clearance: f64,
    margin: f64,
) -> Result<(Point3, Point3)> {
    let sample = |rng: &mut dyn rand::RngCore| -> Option<Point3> {
        for _ in 0..1000 {
            let p = Point3::from_fn(|a, _| rng.random_range(world.min[a] + margin..world.max[a] - margin));
            if world.distance(&p) >= clearance {
                return Some(p);
            }
        }
        None
    };
    for _ in 0..1000 {
        let (Some(s), Some(g)) = (sample(rng), sample(rng)) else {
            break;
        };
        if (g - s).norm() >= min_distance {
            return Ok((s, g));
        }
    }
    Err(param("could not place a start/goal pair in free space"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_primitive(rng: &mut ChaCha8Rng) -> Primitive {
        let c = Point3::from_fn(|_, _| rng.random_range(-2.0..2.0));
        match rng.random_range(0..3) {
            0 => Primitive::Sphere { center: c.into(), radius: rng.random_range(0.1..1.0) },
            1 => {
                let h = Point3::from_fn(|_, _| rng.random_range(0.1..1.0));
                Primitive::AxisBox { min: (c - h).into(), max: (c + h).into() }
            }
            _ => Primitive::Cylinder {
                center: [c.x, c.y],
                radius: rng.random_range(0.1..1.0),
                z_min: c.z - 1.0,
                z_max: c.z + rng.random_range(0.1..2.0),
            },
        }
    }

    #[test]
    fn ray_hits_lie_on_the_surface() {
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        let mut hits = 0;
        for _ in 0..5000 {
            let p = random_primitive(&mut rng);
            let o = Point3::from_fn(|_, _| rng.random_range(-5.0..5.0));
            let aim = p.anchor() + Point3::from_fn(|_, _| rng.random_range(-1.0..1.0));
            let d = (aim - o).normalize();
            if let Some(t) = p.ray_intersect(&o, &d) {
                hits += 1;
                assert!(p.signed_distance(&(o + t * d)).0.abs() < 1e-9, "{p:?}");
            }
        }
        assert!(hits > 500);
    }

    #[test]
    fn first_hit_is_the_nearest() {
        // march the ray and confirm no earlier sign change
        let mut rng = ChaCha8Rng::seed_from_u64(72);
        for _ in 0..500 {
            let p = random_primitive(&mut rng);
            let o = Point3::from_fn(|_, _| rng.random_range(-5.0..5.0));
            if p.signed_distance(&o).0 <= 0.0 {
                continue;
            }
            let d = (p.anchor() - o).normalize();
            let t = p.ray_intersect(&o, &d).expect("aimed at the anchor");
            for k in 0..200 {
                let s = t * k as f64 / 200.0;
                assert!(p.signed_distance(&(o + s * d)).0 > -1e-9);
            }
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(73);
        let h = 1e-6;
        for _ in 0..2000 {
            let p = random_primitive(&mut rng);
            let x = Point3::from_fn(|_, _| rng.random_range(-3.0..3.0));
            let (_, g) = p.signed_distance(&x);
            let fd = Point3::from_fn(|a, _| {
                let mut e = Point3::zeros();
                e[a] = h;
                (p.signed_distance(&(x + e)).0 - p.signed_distance(&(x - e)).0) / (2.0 * h)
            });
            // skip the medial surfaces where the distance has a kink
            if (fd.norm() - 1.0).abs() > 1e-3 {
                continue;
            }
            assert!((fd - g).norm() < 1e-5, "{p:?} at {x:?}: {fd:?} vs {g:?}");
        }
    }

    #[test]
    fn sphere_on_axis_example() {
        let s = Primitive::Sphere { center: [2.0, 0.0, 0.0], radius: 0.5 };
        let t = s.ray_intersect(&Point3::zeros(), &Point3::x()).unwrap();
        assert!((t - 1.5).abs() < 1e-12);
        assert!(s.ray_intersect(&Point3::zeros(), &-Point3::x()).is_none());
    }

    #[test]
    fn forest_generation() {
        let p = ForestParams { density: 0.0, ..Default::default() };
        assert!(generate_forest(1, &p).unwrap().obstacles.is_empty());

        let p = ForestParams::default();
        assert_eq!(generate_forest(5, &p).unwrap(), generate_forest(5, &p).unwrap());
        let w = generate_forest(5, &p).unwrap();
        for o in &w.obstacles {
            let Primitive::Cylinder { center, radius, .. } = *o else { panic!() };
            assert!(center[0] - radius >= 0.0 && center[0] + radius <= 10.0);
            assert!(center[1] - radius >= 0.0 && center[1] + radius <= 10.0);
        }

        let too_dense = ForestParams { density: 5.0, ..Default::default() };
        assert!(generate_forest(1, &too_dense).is_err());
        let negative = ForestParams { density: -1.0, ..Default::default() };
        assert!(generate_forest(1, &negative).is_err());
    }

    #[test]
    fn tree_count_statistics() {
        let p = ForestParams { density: 0.1, ..Default::default() };
        let mean: f64 = 0.1 * 100.0;
        let sd = mean.sqrt();
        let counts: Vec<f64> = (0..100).map(|s| generate_forest(s, &p).unwrap().obstacles.len() as f64).collect();
        let avg = counts.iter().sum::<f64>() / counts.len() as f64;
        // the mean of 100 draws has standard deviation σ / 10
        assert!((avg - mean).abs() <= 3.0 * sd / 10.0, "{avg}");
    }

    #[test]
    fn start_goal_pairs_respect_constraints() {
        let w = generate_forest(3, &ForestParams { density: 0.15, ..Default::default() }).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let (s, g) = sample_start_goal(&w, &mut rng, 4.0, 0.8, 1.0).unwrap();
            assert!((g - s).norm() >= 4.0);
            assert!(w.distance(&s) >= 0.8 && w.distance(&g) >= 0.8);
        }
    }
}
