//! Simulated depth camera.
//!
//! The sensor frame has x forward, y left and z up. Pixel rays follow a
//! pinhole model; each ray returns the first analytic obstacle hit within the
//! maximum range.

use nalgebra::Rotation3;
use serde::{Deserialize, Serialize};

use super::world::World;
use crate::error::{param, Result};
use crate::Point3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SensorModel {
    /// Horizontal field of view in degrees.
    pub h_fov_deg: f64,
    /// Vertical field of view in degrees.
    pub v_fov_deg: f64,
    pub width: usize,
    pub height: usize,
    /// Maximum range in meters.
    pub max_range: f64,
    pub rate_hz: f64,
}

impl Default for SensorModel {
    fn default() -> Self {
        Self { h_fov_deg: 90.0, v_fov_deg: 73.0, width: 160, height: 120, max_range: 5.0, rate_hz: 20.0 }
    }
}

impl SensorModel {
    pub fn validate(&self) -> Result<()> {
        let fov_ok = |f: f64| f > 0.0 && f < 180.0;
        if !(fov_ok(self.h_fov_deg) && fov_ok(self.v_fov_deg)) {
            return Err(param("fields of view must be in (0, 180) degrees"));
        }
        if self.width == 0 || self.height == 0 {
            return Err(param("sensor resolution must be positive"));
        }
        if !(self.max_range > 0.0 && self.rate_hz > 0.0) {
            return Err(param("sensor range and rate must be positive"));
        }
        Ok(())
    }

    /// Unit ray directions in the sensor frame, row by row from the top left.
    pub fn ray_directions(&self) -> Vec<Point3> {
        let th = (self.h_fov_deg.to_radians() / 2.0).tan();
        let tv = (self.v_fov_deg.to_radians() / 2.0).tan();
        let (w, h) = (self.width as f64, self.height as f64);
        let mut dirs = Vec::with_capacity(self.width * self.height);
        for j in 0..self.height {
            let z = tv * (1.0 - 2.0 * (j as f64 + 0.5) / h);
            for i in 0..self.width {
                let y = th * (1.0 - 2.0 * (i as f64 + 0.5) / w);
                dirs.push(Point3::new(1.0, y, z).normalize());
            }
        }
        dirs
    }
}

/// Sensor position and heading about the world z axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub position: Point3,
    pub yaw: f64,
}

impl Pose {
    pub fn rotation(&self) -> Rotation3<f64> {
        Rotation3::from_axis_angle(&Point3::z_axis(), self.yaw)
    }

    pub fn to_world(&self, p: &Point3) -> Point3 {
        self.rotation() * p + self.position
    }
}

/// Renders a point cloud in the sensor frame.
pub struct DepthRenderer {
    sensor: SensorModel,
    dirs: Vec<Point3>,
}

impl DepthRenderer {
    pub fn new(sensor: SensorModel) -> Result<Self> {
        sensor.validate()?;
        Ok(Self { dirs: sensor.ray_directions(), sensor })
    }

    pub fn sensor(&self) -> &SensorModel {
        &self.sensor
    }

    pub fn render(&self, world: &World, pose: &Pose) -> Vec<Point3> {
        let range = self.sensor.max_range;
        let near = World {
            obstacles: world
                .obstacles
                .iter()
                .filter(|o| (o.anchor() - pose.position).norm() <= range + o.bounding_radius())
                .copied()
                .collect(),
            ..world.clone()
        };
        if near.obstacles.is_empty() {
            return Vec::new();
        }
        let rot = pose.rotation();
        self.dirs.iter().filter_map(|d| near.cast_ray(&pose.position, &(rot * d), range).map(|t| d * t)).collect()
    }

    /// Renders and transforms the cloud into the world frame.
    pub fn render_world(&self, world: &World, pose: &Pose) -> Vec<Point3> {
        let rot = pose.rotation();
        self.render(world, pose).into_iter().map(|p| rot * p + pose.position).collect()
    }
}

/// One-shot convenience around [`DepthRenderer`].
pub fn render_depth(world: &World, pose: &Pose, sensor: &SensorModel) -> Result<Vec<Point3>> {
    Ok(DepthRenderer::new(*sensor)?.render(world, pose))
}
