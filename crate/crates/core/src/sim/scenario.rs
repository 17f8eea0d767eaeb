//! Hand-built scenes for single-episode runs and plots.

use serde::{Deserialize, Serialize};

use super::world::{generate_forest, ForestParams, Primitive, World};
use crate::error::Result;
use crate::replanner::GlobalTrajectory;
use crate::Point3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Scenario {
    /// A straight reference blocked by one vertical column.
    SingleObstacle {
        length: f64,
        altitude: f64,
        obstacle_radius: f64,
        /// Lateral offset of the column axis from the reference line.
        lateral_offset: f64,
    },
    /// A straight reference through a wall that seals the whole box.
    Wall { length: f64, altitude: f64, thickness: f64 },
    /// A straight reference across a random forest, with extra trees whose
    /// surfaces touch the line.
    ForestCrossing { seed: u64, forest: ForestParams, trees_on_line: usize },
}

impl Default for Scenario {
    fn default() -> Self {
        Self::SingleObstacle { length: 16.0, altitude: 1.5, obstacle_radius: 0.3, lateral_offset: 0.3 }
    }
}

impl Scenario {
    pub fn build(&self, speed: f64) -> Result<(World, GlobalTrajectory)> {
        match *self {
            Self::SingleObstacle { length, altitude, obstacle_radius, lateral_offset } => {
                let mut w = World::empty([0.0, -3.0, 0.0], [length, 3.0, 2.0 * altitude]);
                w.obstacles.push(Primitive::Cylinder {
                    center: [length / 2.0, lateral_offset],
                    radius: obstacle_radius,
                    z_min: 0.0,
                    z_max: 2.0 * altitude,
                });
                let g = GlobalTrajectory::straight_line(
                    Point3::new(0.0, 0.0, altitude),
                    Point3::new(length, 0.0, altitude),
                    speed,
                )?;
                Ok((w, g))
            }
            Self::Wall { length, altitude, thickness } => {
                let mut w = World::empty([0.0, -3.0, 0.0], [length, 3.0, 2.0 * altitude]);
                let x = length / 2.0;
                w.obstacles.push(Primitive::AxisBox {
                    min: [x - thickness / 2.0, -3.0, 0.0],
                    max: [x + thickness / 2.0, 3.0, 2.0 * altitude],
                });
                let g = GlobalTrajectory::straight_line(
                    Point3::new(0.0, 0.0, altitude),
                    Point3::new(length, 0.0, altitude),
                    speed,
                )?;
                Ok((w, g))
            }
            Self::ForestCrossing { seed, forest, trees_on_line } => {
                let mut w = generate_forest(seed, &forest)?;
                let [sx, sy, sz] = forest.size;
                let start = Point3::new(0.5, sy / 2.0, sz / 4.0);
                let goal = Point3::new(sx - 0.5, sy / 2.0, sz / 4.0);
                let r = (forest.radius_min + forest.radius_max) / 2.0;
                for k in 0..trees_on_line {
                    let x = sx * (k as f64 + 1.0) / (trees_on_line as f64 + 1.0);
                    // surfaces touch the line, alternating sides
                    let y = sy / 2.0 + if k % 2 == 0 { r } else { -r };
                    w.obstacles.push(Primitive::Cylinder { center: [x, y], radius: r, z_min: 0.0, z_max: sz });
                }
                w.obstacles.retain(|o| o.signed_distance(&start).0 > 1.0 && o.signed_distance(&goal).0 > 1.0);
                Ok((w, GlobalTrajectory::straight_line(start, goal, speed)?))
            }
        }
    }
}
