//! Static-hold detection for gravity identification.

use serde::{Deserialize, Serialize};

use super::LogRecord;

pub const DEFAULT_VELOCITY_THRESHOLD: f64 = 0.005;
pub const DEFAULT_MIN_DURATION: f64 = 0.5;

/// A time gap larger than this multiple of the median sample spacing ends a run.
const GAP_FACTOR: f64 = 1.5;

/// Direction of the motion that led into a hold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Cycle {
    Positive,
    Negative,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StaticSegment {
    /// Median measured position over the hold (rad).
    pub angle: f64,
    pub cycle: Cycle,
    pub records: Vec<LogRecord>,
}

impl StaticSegment {
    pub fn mean_effort(&self) -> f64 {
        self.records.iter().map(|r| r.effort_fbk).sum::<f64>() / self.records.len() as f64
    }

    pub fn duration(&self) -> f64 {
        match (self.records.first(), self.records.last()) {
            (Some(a), Some(b)) => b.t - a.t,
            _ => 0.0,
        }
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Finds maximal runs with `|velocity_fbk| ≤ velocity_threshold` lasting at
/// least `min_duration`.
///
/// A run also ends at a sampling gap (more than 1.5× the median spacing).
/// The cycle of a hold is the sign of the net displacement since the end of
/// the previous run, or since the first record for the first run; a hold
/// reached without any displacement counts as positive.
pub fn extract_static_segments(
    records: &[LogRecord],
    velocity_threshold: f64,
    min_duration: f64,
) -> Vec<StaticSegment> {
    if records.is_empty() {
        return Vec::new();
    }
    let mut spacings: Vec<f64> = records
        .windows(2)
        .map(|w| w[1].t - w[0].t)
        .filter(|d| *d > 0.0)
        .collect();
    let max_gap = if spacings.is_empty() {
        f64::INFINITY
    } else {
        GAP_FACTOR * median(&mut spacings)
    };

    let mut runs: Vec<(usize, usize)> = Vec::new();
    let mut start: Option<usize> = None;
    for (i, r) in records.iter().enumerate() {
        let still = r.velocity_fbk.abs() <= velocity_threshold;
        if let Some(s) = start {
            let gap = r.t - records[i - 1].t > max_gap;
            if !still || gap {
                runs.push((s, i));
                start = None;
            }
        }
        if still && start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        runs.push((s, records.len()));
    }

    let mut segments = Vec::new();
    let mut reference = records[0].position_fbk;
    for (s, e) in runs {
        let run = &records[s..e];
        let span = run[run.len() - 1].t - run[0].t;
        let displacement = run[0].position_fbk - reference;
        reference = run[run.len() - 1].position_fbk;
        if span < min_duration {
            continue;
        }
        let mut positions: Vec<f64> = run.iter().map(|r| r.position_fbk).collect();
        segments.push(StaticSegment {
            angle: median(&mut positions),
            cycle: if displacement < 0.0 {
                Cycle::Negative
            } else {
                Cycle::Positive
            },
            records: run.to_vec(),
        });
    }
    segments
}
