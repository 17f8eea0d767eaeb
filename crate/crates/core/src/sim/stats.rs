//! Timing summaries and histograms.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `counts.len() + 1` bin edges in milliseconds.
    pub edges_ms: Vec<f64>,
    pub counts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingStats {
    pub count: usize,
    pub mean_ms: f64,
    pub median_ms: f64,
    pub min_ms: f64,
    pub max_ms: f64,
    pub std_ms: f64,
    pub histogram: Histogram,
}

pub const HISTOGRAM_BINS: usize = 20;

impl TimingStats {
    pub fn from_ms(samples: &[f64]) -> Self {
        let n = samples.len();
        if n == 0 {
            return Self {
                count: 0,
                mean_ms: 0.0,
                median_ms: 0.0,
                min_ms: 0.0,
                max_ms: 0.0,
                std_ms: 0.0,
                histogram: Histogram { edges_ms: vec![0.0], counts: Vec::new() },
            };
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mean = sorted.iter().sum::<f64>() / n as f64;
        let var = sorted.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n as f64;
        let median = if n % 2 == 1 { sorted[n / 2] } else { (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0 };
        let (lo, hi) = (sorted[0], sorted[n - 1]);
        let width = if hi > 0.0 { hi / HISTOGRAM_BINS as f64 } else { 1.0 };
        let edges_ms = (0..=HISTOGRAM_BINS).map(|k| k as f64 * width).collect();
        let mut counts = vec![0; HISTOGRAM_BINS];
        for s in &sorted {
            counts[((s / width) as usize).min(HISTOGRAM_BINS - 1)] += 1;
        }
        Self {
            count: n,
            mean_ms: mean,
            median_ms: median,
            min_ms: lo,
            max_ms: hi,
            std_ms: var.sqrt(),
            histogram: Histogram { edges_ms, counts },
        }
    }
}

pub fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

/// Runs `f` and returns its result with the elapsed milliseconds.
pub fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let out = f();
    (out, ms(start.elapsed()))
}
