//! Text formats for trajectories.
//!
//! CSV layout:
//!
//! ```text
//! dt,t0,degree
//! 5.0000000000000000e-1,0.0000000000000000e0,5
//! x,y,z
//! <one row per control point>
//! ```
//!
//! Floats are written with 17 significant digits, which round-trips every
//! `f64` exactly. The JSON form carries the same fields.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{UniformBSpline, DEGREE};
use crate::error::{Error, Result};
use crate::Point3;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplineRecord {
    pub dt: f64,
    pub t0: f64,
    pub degree: usize,
    pub control_points: Vec<[f64; 3]>,
}

impl From<&UniformBSpline> for SplineRecord {
    fn from(s: &UniformBSpline) -> Self {
        Self {
            dt: s.dt(),
            t0: s.t0(),
            degree: DEGREE,
            control_points: s.control_points().iter().map(|p| [p.x, p.y, p.z]).collect(),
        }
    }
}

impl TryFrom<SplineRecord> for UniformBSpline {
    type Error = Error;

    fn try_from(r: SplineRecord) -> Result<Self> {
        if r.degree != DEGREE {
            return Err(Error::Format(format!("only degree {DEGREE} splines are supported, got {}", r.degree)));
        }
        let pts = r.control_points.iter().map(|c| Point3::from(*c)).collect();
        UniformBSpline::new(pts, r.dt, r.t0)
    }
}

/// 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn to_csv(spline: &UniformBSpline) -> String {
    let mut out = String::from("dt,t0,degree\n");
    let _ = writeln!(out, "{},{},{}", fmt_f64(spline.dt()), fmt_f64(spline.t0()), DEGREE);
    out.push_str("x,y,z\n");
    for p in spline.control_points() {
        let _ = writeln!(out, "{},{},{}", fmt_f64(p.x), fmt_f64(p.y), fmt_f64(p.z));
    }
    out
}

fn parse_f64(field: &str, line: usize) -> Result<f64> {
    field.trim().parse().map_err(|_| Error::Format(format!("line {line}: bad number {field:?}")))
}

pub fn from_csv(text: &str) -> Result<UniformBSpline> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let mut next = |what: &str| lines.next().ok_or_else(|| Error::Format(format!("missing {what}")));
    let (_, header) = next("header")?;
    if header.trim() != "dt,t0,degree" {
        return Err(Error::Format(format!("unexpected header {header:?}")));
    }
    let (n, values) = next("header values")?;
    let fields: Vec<&str> = values.split(',').collect();
    if fields.len() != 3 {
        return Err(Error::Format(format!("line {}: expected 3 fields", n + 1)));
    }
    let dt = parse_f64(fields[0], n + 1)?;
    let t0 = parse_f64(fields[1], n + 1)?;
    let degree: usize = fields[2].trim().parse().map_err(|_| Error::Format(format!("line {}: bad degree", n + 1)))?;
    let (_, cols) = next("column header")?;
    if cols.trim() != "x,y,z" {
        return Err(Error::Format(format!("unexpected column header {cols:?}")));
    }
    let mut control_points = Vec::new();
    for (n, line) in lines {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 3 {
            return Err(Error::Format(format!("line {}: expected 3 fields", n + 1)));
        }
        control_points.push([parse_f64(f[0], n + 1)?, parse_f64(f[1], n + 1)?, parse_f64(f[2], n + 1)?]);
    }
    SplineRecord { dt, t0, degree, control_points }.try_into()
}

pub fn to_json(spline: &UniformBSpline) -> Result<String> {
    Ok(serde_json::to_string_pretty(&SplineRecord::from(spline))?)
}

pub fn from_json(text: &str) -> Result<UniformBSpline> {
    serde_json::from_str::<SplineRecord>(text)?.try_into()
}
