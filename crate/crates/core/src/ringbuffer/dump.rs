use serde::{Deserialize, Serialize};

use super::{Index3, RingBuffer3D};
use crate::error::{Error, Result};

/// Plot-friendly export of a ring buffer.
///
/// `values[i + N·j + N²·k]` is the voxel with world index `offset + (i, j, k)`,
/// so consumers never deal with the wrapped storage order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridDump {
    pub kind: String,
    pub power: u32,
    pub resolution: f64,
    pub offset: [i64; 3],
    pub center: [f64; 3],
    pub values: Vec<f64>,
}

impl GridDump {
    pub fn from_buffer<T: Copy + Into<f64>>(buf: &RingBuffer3D<T>, kind: &str) -> Self {
        let values = buf.indices().map(|x| buf.cells()[buf.address(&x)].into()).collect();
        let o = buf.offset();
        let c = buf.center();
        Self {
            kind: kind.to_string(),
            power: buf.power(),
            resolution: buf.resolution(),
            offset: [o.x, o.y, o.z],
            center: [c.x, c.y, c.z],
            values,
        }
    }

    pub fn side(&self) -> usize {
        1 << self.power
    }

    pub fn value_at(&self, x: &Index3) -> Option<f64> {
        let n = self.side() as i64;
        let d = [x.x - self.offset[0], x.y - self.offset[1], x.z - self.offset[2]];
        if d.iter().any(|&v| v < 0 || v >= n) {
            return None;
        }
        Some(self.values[(d[0] + n * d[1] + n * n * d[2]) as usize])
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let d: Self = serde_json::from_str(text)?;
        let n = d.side();
        if d.values.len() != n * n * n {
            return Err(Error::Format(format!("grid dump has {} values, expected {}", d.values.len(), n * n * n)));
        }
        Ok(d)
    }
}
