//! Timestamped rollouts and their CSV form.
//!
//! CSV layout: header `t,theta,omega,u_control,u_noise`, one row per sample,
//! every value printed with 17 significant digits so a file reads back to
//! the same bits.

use std::fmt::Write as _;
use std::io::{self, Write};

use thiserror::Error;

use crate::dynamics::State;

pub const CSV_HEADER: &str = "t,theta,omega,u_control,u_noise";

#[derive(Debug, Error)]
pub enum TrajectoryError {
    #[error("sample {index}: time {t} does not increase past {prev}")]
    NotIncreasing { index: usize, t: f64, prev: f64 },
    #[error("sample {index}: non-finite value")]
    NonFinite { index: usize },
    #[error("line {line}: {msg}")]
    Csv { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub state: State,
    /// Torque commanded by the controller (N·m).
    pub u_control: f64,
    /// Disturbance torque added at the plant input (N·m).
    pub u_noise: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    samples: Vec<Sample>,
    /// Nominal sample spacing (s).
    pub dt: f64,
    pub source: String,
}

impl Trajectory {
    pub fn new(dt: f64, source: impl Into<String>) -> Self {
        Self::with_capacity(dt, source, 0)
    }

    pub fn with_capacity(dt: f64, source: impl Into<String>, n: usize) -> Self {
        Trajectory {
            samples: Vec::with_capacity(n),
            dt,
            source: source.into(),
        }
    }

    /// Appends a sample, enforcing strictly increasing finite timestamps.
    pub fn push(&mut self, sample: Sample) -> Result<(), TrajectoryError> {
        let index = self.samples.len();
        let finite = [
            sample.t,
            sample.state.theta,
            sample.state.omega,
            sample.u_control,
            sample.u_noise,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(TrajectoryError::NonFinite { index });
        }
        if let Some(last) = self.samples.last() {
            if sample.t <= last.t {
                return Err(TrajectoryError::NotIncreasing {
                    index,
                    t: sample.t,
                    prev: last.t,
                });
            }
        }
        self.samples.push(sample);
        Ok(())
    }

    /// For producers that generate times as `k·dt` and finite values already.
    pub(crate) fn push_unchecked(&mut self, sample: Sample) {
        debug_assert!(self.samples.last().is_none_or(|l| sample.t > l.t));
        self.samples.push(sample);
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn first_time(&self) -> Option<f64> {
        self.samples.first().map(|s| s.t)
    }

    pub fn last_time(&self) -> Option<f64> {
        self.samples.last().map(|s| s.t)
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::with_capacity(32 + self.samples.len() * 120);
        out.push_str(CSV_HEADER);
        out.push('\n');
        for s in &self.samples {
            let _ = writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                s.t, s.state.theta, s.state.omega, s.u_control, s.u_noise
            );
        }
        out
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        w.write_all(self.to_csv_string().as_bytes())
    }

    pub fn from_csv_str(text: &str, source: impl Into<String>) -> Result<Self, TrajectoryError> {
        let mut lines = text.lines().enumerate();
        let header = loop {
            match lines.next() {
                Some((_, l)) if l.trim().is_empty() => continue,
                Some((i, l)) => break (i + 1, l.trim()),
                None => {
                    return Err(TrajectoryError::Csv {
                        line: 1,
                        msg: "missing header".into(),
                    })
                }
            }
        };
        if header.1 != CSV_HEADER {
            return Err(TrajectoryError::Csv {
                line: header.0,
                msg: format!("expected header `{CSV_HEADER}`, found `{}`", header.1),
            });
        }
        let mut traj = Trajectory::new(0.0, source);
        for (i, line) in lines {
            let line_no = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let mut vals = [0.0; 5];
            let mut fields = line.split(',');
            for (slot, v) in vals.iter_mut().enumerate() {
                let cell = fields.next().ok_or_else(|| TrajectoryError::Csv {
                    line: line_no,
                    msg: format!("expected 5 columns, found {slot}"),
                })?;
                *v = cell.trim().parse().map_err(|_| TrajectoryError::Csv {
                    line: line_no,
                    msg: format!("non-numeric cell `{cell}`"),
                })?;
            }
            if fields.next().is_some() {
                return Err(TrajectoryError::Csv {
                    line: line_no,
                    msg: "expected 5 columns, found more".into(),
                });
            }
            traj.push(Sample {
                t: vals[0],
                state: State::new(vals[1], vals[2]),
                u_control: vals[3],
                u_noise: vals[4],
            })
            .map_err(|e| TrajectoryError::Csv {
                line: line_no,
                msg: e.to_string(),
            })?;
        }
        if traj.len() >= 2 {
            traj.dt = (traj.samples[traj.len() - 1].t - traj.samples[0].t) / (traj.len() - 1) as f64;
        }
        Ok(traj)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(t: f64) -> Sample {
        Sample {
            t,
            state: State::new(t.sin(), t.cos()),
            u_control: -t,
            u_noise: 0.1 * t,
        }
    }

    #[test]
    fn rejects_non_increasing_time() {
        let mut tr = Trajectory::new(0.1, "x");
        tr.push(sample(0.0)).unwrap();
        tr.push(sample(0.1)).unwrap();
        assert!(matches!(
            tr.push(sample(0.1)),
            Err(TrajectoryError::NotIncreasing { index: 2, .. })
        ));
        let mut bad = sample(0.3);
        bad.u_noise = f64::NAN;
        assert!(matches!(tr.push(bad), Err(TrajectoryError::NonFinite { index: 2 })));
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let mut tr = Trajectory::new(0.002, "x");
        for k in 0..50 {
            tr.push(sample(k as f64 * 0.002 + 1.0 / 3.0)).unwrap();
        }
        let text = tr.to_csv_string();
        assert!(text.starts_with("t,theta,omega,u_control,u_noise\n"));
        assert!(!text.contains('\r'));
        let back = Trajectory::from_csv_str(&text, "x").unwrap();
        assert_eq!(back.samples(), tr.samples());
    }

    #[test]
    fn csv_errors_name_the_line() {
        let err = Trajectory::from_csv_str("t,theta,omega,u_control,u_noise\n0,0,0,0,0\n1,a,0,0,0\n", "x")
            .unwrap_err();
        assert!(matches!(err, TrajectoryError::Csv { line: 3, .. }));
        let err = Trajectory::from_csv_str("t,theta\n", "x").unwrap_err();
        assert!(matches!(err, TrajectoryError::Csv { line: 1, .. }));
        let err = Trajectory::from_csv_str("t,theta,omega,u_control,u_noise\n1,0,0,0,0\n0,0,0,0,0\n", "x")
            .unwrap_err();
        assert!(matches!(err, TrajectoryError::Csv { line: 3, .. }));
    }
}
