//! Position/velocity command trajectories for moving between holds.

use std::f64::consts::PI;
use std::fmt::Write as _;

use super::HarnessError;

/// Default position step between command samples (rad).
pub const DEFAULT_INCREMENT: f64 = 0.002;
/// Default peak of the half-sine velocity profile (rad/s).
pub const DEFAULT_PEAK_VELOCITY: f64 = 0.3;
/// Default command rate (Hz).
pub const DEFAULT_RATE: f64 = 100.0;

pub const COMMAND_CSV_HEADER: &str = "t,position_cmd,velocity_cmd";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommandSample {
    pub position: f64,
    pub velocity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommandTrajectory {
    pub rate: f64,
    pub samples: Vec<CommandSample>,
}

impl CommandTrajectory {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 / self.rate
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from(COMMAND_CSV_HEADER);
        out.push('\n');
        for (k, s) in self.samples.iter().enumerate() {
            let _ = writeln!(out, "{:.16e},{:.16e},{:.16e}", self.time(k), s.position, s.velocity);
        }
        out
    }
}

/// Linear position ramp in `pos_increment` steps (the last step shortened so
/// the final sample is exactly `end`) with a half-sine velocity profile of
/// the same length whose sign follows the direction of motion.
pub fn generate_trajectory(
    start: f64,
    end: f64,
    pos_increment: f64,
    peak_velocity: f64,
    rate: f64,
) -> Result<CommandTrajectory, HarnessError> {
    if !(start.is_finite() && end.is_finite()) {
        return Err(HarnessError::InvalidConfig("non-finite endpoint".into()));
    }
    if !(pos_increment > 0.0 && pos_increment.is_finite()) {
        return Err(HarnessError::InvalidConfig(format!(
            "position increment must be > 0, got {pos_increment}"
        )));
    }
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(HarnessError::InvalidConfig(format!("rate must be > 0, got {rate}")));
    }
    if !peak_velocity.is_finite() {
        return Err(HarnessError::InvalidConfig("non-finite peak velocity".into()));
    }
    if start == end {
        return Ok(CommandTrajectory {
            rate,
            samples: vec![CommandSample {
                position: start,
                velocity: 0.0,
            }],
        });
    }
    let span = end - start;
    let dir = span.signum();
    // tolerate spans that are an exact multiple up to rounding
    let steps = ((span.abs() / pos_increment) - 1e-9).ceil().max(1.0) as usize;
    let n = steps + 1;
    let samples = (0..n)
        .map(|k| {
            let position = if k == steps {
                end
            } else {
                start + dir * k as f64 * pos_increment
            };
            let phase = PI * k as f64 / steps as f64;
            CommandSample {
                position,
                velocity: dir * peak_velocity.abs() * phase.sin(),
            }
        })
        .collect();
    Ok(CommandTrajectory { rate, samples })
}
