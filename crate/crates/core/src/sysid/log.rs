//! Actuator log records and their CSV schema.

use std::fmt::Write as _;

use csv::{ReaderBuilder, Trim};
use serde::{Deserialize, Serialize};

use super::SysidError;

pub const LOG_COLUMNS: [&str; 10] = [
    "t",
    "position_fbk",
    "velocity_fbk",
    "effort_fbk",
    "position_cmd",
    "velocity_cmd",
    "effort_cmd",
    "pwm_cmd",
    "motor_current",
    "winding_current",
];

const MANDATORY: usize = 4;

/// One row of an actuator log. Units: s, rad, rad/s, N·m, PWM in `[−1, 1]`, A.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LogRecord {
    pub t: f64,
    pub position_fbk: f64,
    pub velocity_fbk: f64,
    pub effort_fbk: f64,
    pub position_cmd: Option<f64>,
    pub velocity_cmd: Option<f64>,
    pub effort_cmd: Option<f64>,
    pub pwm_cmd: Option<f64>,
    pub motor_current: Option<f64>,
    pub winding_current: Option<f64>,
}

impl LogRecord {
    pub fn feedback(t: f64, position: f64, velocity: f64, effort: f64) -> Self {
        LogRecord {
            t,
            position_fbk: position,
            velocity_fbk: velocity,
            effort_fbk: effort,
            ..Default::default()
        }
    }

    fn optional(&self) -> [Option<f64>; 6] {
        [
            self.position_cmd,
            self.velocity_cmd,
            self.effort_cmd,
            self.pwm_cmd,
            self.motor_current,
            self.winding_current,
        ]
    }

    fn optional_mut(&mut self) -> [&mut Option<f64>; 6] {
        [
            &mut self.position_cmd,
            &mut self.velocity_cmd,
            &mut self.effort_cmd,
            &mut self.pwm_cmd,
            &mut self.motor_current,
            &mut self.winding_current,
        ]
    }
}

fn parse_err(line: u64, msg: impl Into<String>) -> SysidError {
    SysidError::Parse {
        line: line as usize,
        msg: msg.into(),
    }
}

/// Parses a log with a header row. Optional columns may be omitted or left
/// empty; times must not decrease.
pub fn parse_log(text: &str) -> Result<Vec<LogRecord>, SysidError> {
    let mut reader = ReaderBuilder::new()
        .has_headers(true)
        .trim(Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .clone();
    if headers.iter().all(|h| h.is_empty()) {
        return Err(parse_err(1, "missing header row"));
    }

    // position of each known column in the file, if present
    let mut index = [None; LOG_COLUMNS.len()];
    for (pos, name) in headers.iter().enumerate() {
        let slot = LOG_COLUMNS
            .iter()
            .position(|c| *c == name)
            .ok_or_else(|| SysidError::UnknownColumn(name.to_string()))?;
        if index[slot].is_some() {
            return Err(parse_err(1, format!("duplicate column `{name}`")));
        }
        index[slot] = Some(pos);
    }
    for (slot, name) in LOG_COLUMNS.iter().enumerate().take(MANDATORY) {
        if index[slot].is_none() {
            return Err(SysidError::MissingColumn(name.to_string()));
        }
    }

    let mut records = Vec::new();
    let mut prev_t = f64::NEG_INFINITY;
    for row in reader.records() {
        let row = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = row.position().map_or(0, |p| p.line());
        let cell = |slot: usize| -> Result<Option<f64>, SysidError> {
            let Some(pos) = index[slot] else {
                return Ok(None);
            };
            let raw = row.get(pos).unwrap_or("");
            if raw.is_empty() {
                return Ok(None);
            }
            let v: f64 = raw.parse().map_err(|_| {
                parse_err(line, format!("non-numeric `{raw}` in column `{}`", LOG_COLUMNS[slot]))
            })?;
            if !v.is_finite() {
                return Err(parse_err(
                    line,
                    format!("non-finite value in column `{}`", LOG_COLUMNS[slot]),
                ));
            }
            Ok(Some(v))
        };
        let mandatory = |slot: usize| -> Result<f64, SysidError> {
            cell(slot)?.ok_or_else(|| {
                parse_err(line, format!("empty mandatory column `{}`", LOG_COLUMNS[slot]))
            })
        };
        let mut rec = LogRecord::feedback(mandatory(0)?, mandatory(1)?, mandatory(2)?, mandatory(3)?);
        for (i, field) in rec.optional_mut().into_iter().enumerate() {
            *field = cell(MANDATORY + i)?;
        }
        if rec.t < prev_t {
            return Err(parse_err(
                line,
                format!("time {} goes backwards from {prev_t}", rec.t),
            ));
        }
        prev_t = rec.t;
        records.push(rec);
    }
    Ok(records)
}

/// Writes records with the full column set; absent optional values are
/// left empty.
pub fn format_log(records: &[LogRecord]) -> String {
    let mut out = LOG_COLUMNS.join(",");
    out.push('\n');
    for r in records {
        let _ = write!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e}",
            r.t, r.position_fbk, r.velocity_fbk, r.effort_fbk
        );
        for v in r.optional() {
            out.push(',');
            if let Some(v) = v {
                let _ = write!(out, "{v:.16e}");
            }
        }
        out.push('\n');
    }
    out
}
