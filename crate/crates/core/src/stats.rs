//! Aggregates over completed evaluation runs: overall recall@N, moving
//! averages with accumulated-average warm-up, and sliding-window signed
//! McNemar comparisons between model pairs.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::ModelRun;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("window size must be at least 1")]
    BadWindow,
    #[error("hit sequences differ in length ({a} vs {b})")]
    LengthMismatch { a: usize, b: usize },
    #[error("no records to summarize")]
    EmptyRecords,
}

/// Chi-square(1 df) significance levels with their critical values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SignificanceLevel {
    P05,
    P01,
    P001,
}

impl SignificanceLevel {
    pub fn critical_value(self) -> f64 {
        match self {
            SignificanceLevel::P05 => 3.841,
            SignificanceLevel::P01 => 6.635,
            SignificanceLevel::P001 => 10.828,
        }
    }

    pub fn alpha(self) -> f64 {
        match self {
            SignificanceLevel::P05 => 0.05,
            SignificanceLevel::P01 => 0.01,
            SignificanceLevel::P001 => 0.001,
        }
    }

    pub fn from_alpha(alpha: f64) -> Option<Self> {
        if alpha == 0.05 {
            Some(SignificanceLevel::P05)
        } else if alpha == 0.01 {
            Some(SignificanceLevel::P01)
        } else if alpha == 0.001 {
            Some(SignificanceLevel::P001)
        } else {
            None
        }
    }
}

/// Windowed accuracy series: one value per event. Values before the warm-up
/// boundary are accumulated prefix means; from `window` on they are means
/// over the trailing `window` scores.
#[derive(Debug, Clone, PartialEq)]
pub struct MovingAverageSeries {
    pub window: usize,
    pub values: Vec<f64>,
}

impl MovingAverageSeries {
    pub fn warmup_boundary(&self) -> usize {
        self.window
    }
}

/// Moving average of a binary score sequence. Sums are kept in integers, so
/// each value is exactly (hits in window) / (window length).
pub fn moving_average(scores: &[bool], window: usize) -> Result<MovingAverageSeries, StatsError> {
    if window < 1 {
        return Err(StatsError::BadWindow);
    }
    let mut values = Vec::with_capacity(scores.len());
    let mut in_window: u64 = 0;
    for seq in 0..scores.len() {
        in_window += scores[seq] as u64;
        if seq >= window {
            in_window -= scores[seq - window] as u64;
        }
        let len = (seq + 1).min(window);
        values.push(in_window as f64 / len as f64);
    }
    Ok(MovingAverageSeries { window, values })
}

/// Running mean over all events seen so far.
pub fn accumulated_average(scores: &[bool]) -> Vec<f64> {
    if scores.is_empty() {
        return Vec::new();
    }
    moving_average(scores, scores.len())
        .expect("window >= 1")
        .values
}

/// One sliding-window comparison point between models A and B.
#[derive(Debug, Clone, PartialEq)]
pub struct McNemarPoint {
    pub seq: usize,
    /// A-miss, B-hit disagreements in the window.
    pub n01: u32,
    /// A-hit, B-miss disagreements in the window.
    pub n10: u32,
    /// sign(n10 - n01) * (n10 - n01)^2 / (n10 + n01); 0 when no disagreement.
    pub statistic: f64,
    pub significant: bool,
}

impl McNemarPoint {
    /// True when the window held no disagreement at all; such points carry
    /// statistic 0 and are never significant.
    pub fn no_disagreement(&self) -> bool {
        self.n01 == 0 && self.n10 == 0
    }
}

fn signed_statistic(n01: u32, n10: u32) -> f64 {
    let diff = n10 as i64 - n01 as i64;
    let total = (n10 + n01) as f64;
    if diff == 0 {
        return 0.0;
    }
    diff.signum() as f64 * (diff * diff) as f64 / total
}

/// Signed McNemar test over sliding windows of `window` aligned outcomes.
/// A positive statistic favors model A (the first sequence). Points before
/// one full window use the accumulated window, mirroring the moving-average
/// warm-up.
pub fn mcnemar_signed(
    hits_a: &[bool],
    hits_b: &[bool],
    window: usize,
    level: SignificanceLevel,
) -> Result<Vec<McNemarPoint>, StatsError> {
    if window < 1 {
        return Err(StatsError::BadWindow);
    }
    if hits_a.len() != hits_b.len() {
        return Err(StatsError::LengthMismatch {
            a: hits_a.len(),
            b: hits_b.len(),
        });
    }
    let critical = level.critical_value();
    let mut n01: u32 = 0;
    let mut n10: u32 = 0;
    let mut points = Vec::with_capacity(hits_a.len());
    for seq in 0..hits_a.len() {
        match (hits_a[seq], hits_b[seq]) {
            (true, false) => n10 += 1,
            (false, true) => n01 += 1,
            _ => {}
        }
        if seq >= window {
            match (hits_a[seq - window], hits_b[seq - window]) {
                (true, false) => n10 -= 1,
                (false, true) => n01 -= 1,
                _ => {}
            }
        }
        let statistic = signed_statistic(n01, n10);
        points.push(McNemarPoint {
            seq,
            n01,
            n10,
            statistic,
            significant: statistic.abs() > critical,
        });
    }
    Ok(points)
}

/// One row of the overall results table.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub model: String,
    pub recall_at_n: f64,
    pub mean_update_ms: f64,
    pub median_update_ms: f64,
    /// Events in the recall denominator (all events, or known-user events
    /// when the run excludes cold-start misses).
    pub events_scored: u64,
    pub events_total: u64,
}

/// Overall recall@N and update-time statistics for one completed run.
pub fn summarize_run(run: &ModelRun, known_users_only: bool) -> Result<SummaryRow, StatsError> {
    if run.records.is_empty() {
        return Err(StatsError::EmptyRecords);
    }
    let events_total = run.records.len() as u64;
    let events_scored = if known_users_only {
        run.records.iter().filter(|r| r.user_known).count() as u64
    } else {
        events_total
    };
    let hits = run.records.iter().filter(|r| r.hit).count() as u64;
    let recall = if events_scored == 0 {
        0.0
    } else {
        hits as f64 / events_scored as f64
    };
    let (mean_ms, median_ms) = update_time_ms(&run.update_times_us);
    Ok(SummaryRow {
        model: run.name.clone(),
        recall_at_n: recall,
        mean_update_ms: mean_ms,
        median_update_ms: median_ms,
        events_scored,
        events_total,
    })
}

pub fn overall_summary(
    runs: &[ModelRun],
    known_users_only: bool,
) -> Result<Vec<SummaryRow>, StatsError> {
    runs.iter()
        .map(|run| summarize_run(run, known_users_only))
        .collect()
}

fn update_time_ms(times_us: &[u64]) -> (f64, f64) {
    if times_us.is_empty() {
        return (0.0, 0.0);
    }
    let sum: u64 = times_us.iter().sum();
    let mean = sum as f64 / times_us.len() as f64 / 1000.0;
    let mut sorted = times_us.to_vec();
    sorted.sort_unstable();
    let mid = sorted.len() / 2;
    let median_us = if sorted.len() % 2 == 1 {
        sorted[mid] as f64
    } else {
        (sorted[mid - 1] + sorted[mid]) as f64 / 2.0
    };
    (mean, median_us / 1000.0)
}
