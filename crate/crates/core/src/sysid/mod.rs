//! Least-squares identification of `m_c`, `b_c` and `g_c` from actuator logs.
//!
//! Two experiments feed the regressions:
//!
//! - a horizontal run, where gravity drops out and the effort feedback is
//!   regressed on velocity and finite-difference acceleration;
//! - static holds on a vertical rig, where velocity and acceleration vanish
//!   and the mean holding effort is regressed on `sin θ`.
//!
//! Neither regression has an intercept unless asked for. The actuator
//! reports external torque with a negated sign, so coefficients from the
//! horizontal run come out negative; [`average_trials`] normalizes signs.

mod log;
mod ols;
mod segments;

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use self::log::{format_log, parse_log, LogRecord, LOG_COLUMNS};
pub use self::ols::{ols, OlsFit, RANK_TOL};
pub use self::segments::{
    extract_static_segments, Cycle, StaticSegment, DEFAULT_MIN_DURATION,
    DEFAULT_VELOCITY_THRESHOLD,
};

pub const VELOCITY: &str = "velocity";
pub const ACCELERATION: &str = "acceleration";
pub const SINE_POS: &str = "sine_pos";
pub const INTERCEPT: &str = "intercept";

/// Fewest log records accepted by [`regress_inertia_damping`].
pub const MIN_DYNAMIC_SAMPLES: usize = 10;
/// Fewest holds accepted by [`regress_gravity`].
pub const MIN_SEGMENTS: usize = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SysidError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("missing mandatory column `{0}`")]
    MissingColumn(String),
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("repeated timestamp at record {index}")]
    RepeatedTimestamp { index: usize },
    #[error("singular regression: {0}")]
    Singular(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("cannot average results of different kinds")]
    MixedKinds,
    #[error("coefficient `{0}` changes sign across trials")]
    InconsistentSign(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegressionKind {
    InertiaDamping,
    Gravity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionResult {
    pub kind: RegressionKind,
    pub coefficients: BTreeMap<String, f64>,
    pub r_squared: f64,
    pub n_samples: usize,
    pub residual_std: f64,
}

impl RegressionResult {
    pub fn coefficient(&self, name: &str) -> Option<f64> {
        self.coefficients.get(name).copied()
    }
}

fn regression(
    kind: RegressionKind,
    names: &[&str],
    design: DMatrix<f64>,
    y: DVector<f64>,
) -> Result<RegressionResult, SysidError> {
    let fit = ols(&design, &y)?;
    Ok(RegressionResult {
        kind,
        coefficients: names
            .iter()
            .map(|n| n.to_string())
            .zip(fit.coefficients.iter().copied())
            .collect(),
        r_squared: fit.r_squared,
        n_samples: fit.n_samples,
        residual_std: fit.residual_std,
    })
}

/// Forward differences `(v[k+1] − v[k]) / (t[k+1] − t[k])`, stamped at `t[k]`.
pub fn finite_difference_acceleration(records: &[LogRecord]) -> Result<Vec<(f64, f64)>, SysidError> {
    if records.len() < 2 {
        return Err(SysidError::InsufficientData(format!(
            "need at least 2 records, got {}",
            records.len()
        )));
    }
    records
        .windows(2)
        .enumerate()
        .map(|(k, w)| {
            let dt = w[1].t - w[0].t;
            if dt <= 0.0 {
                return Err(SysidError::RepeatedTimestamp { index: k + 1 });
            }
            Ok((w[0].t, (w[1].velocity_fbk - w[0].velocity_fbk) / dt))
        })
        .collect()
}

/// Regresses effort on velocity and acceleration for a horizontal run.
pub fn regress_inertia_damping(
    records: &[LogRecord],
    intercept: bool,
) -> Result<RegressionResult, SysidError> {
    if records.len() < MIN_DYNAMIC_SAMPLES {
        return Err(SysidError::InsufficientData(format!(
            "need at least {MIN_DYNAMIC_SAMPLES} records, got {}",
            records.len()
        )));
    }
    let acc = finite_difference_acceleration(records)?;
    let n = acc.len();
    let p = if intercept { 3 } else { 2 };
    let mut design = DMatrix::zeros(n, p);
    let mut y = DVector::zeros(n);
    for (k, (r, (_, a))) in records.iter().zip(&acc).enumerate() {
        design[(k, 0)] = r.velocity_fbk;
        design[(k, 1)] = *a;
        if intercept {
            design[(k, 2)] = 1.0;
        }
        y[k] = r.effort_fbk;
    }
    let names: &[&str] = if intercept {
        &[VELOCITY, ACCELERATION, INTERCEPT]
    } else {
        &[VELOCITY, ACCELERATION]
    };
    regression(RegressionKind::InertiaDamping, names, design, y)
}

/// Regresses per-hold mean effort on `sin(angle)`, pooling both cycles.
pub fn regress_gravity(
    segments: &[StaticSegment],
    intercept: bool,
) -> Result<RegressionResult, SysidError> {
    if segments.len() < MIN_SEGMENTS {
        return Err(SysidError::InsufficientData(format!(
            "need at least {MIN_SEGMENTS} static segments, got {}",
            segments.len()
        )));
    }
    let first = segments[0].angle;
    if segments.iter().all(|s| (s.angle - first).abs() <= 1e-9) {
        return Err(SysidError::Singular(
            "all holds are at the same angle".into(),
        ));
    }
    let n = segments.len();
    let p = if intercept { 2 } else { 1 };
    let mut design = DMatrix::zeros(n, p);
    let mut y = DVector::zeros(n);
    for (k, seg) in segments.iter().enumerate() {
        design[(k, 0)] = seg.angle.sin();
        if intercept {
            design[(k, 1)] = 1.0;
        }
        y[k] = seg.mean_effort();
    }
    let names: &[&str] = if intercept {
        &[SINE_POS, INTERCEPT]
    } else {
        &[SINE_POS]
    };
    regression(RegressionKind::Gravity, names, design, y)
}

/// Model constants recovered by one kind of experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamFragment {
    InertiaDamping { m_c: f64, b_c: f64 },
    Gravity { g_c: f64 },
}

fn mean_magnitude(results: &[RegressionResult], name: &str) -> Result<f64, SysidError> {
    let values: Vec<f64> = results
        .iter()
        .map(|r| {
            r.coefficient(name)
                .ok_or_else(|| SysidError::InsufficientData(format!("missing coefficient `{name}`")))
        })
        .collect::<Result<_, _>>()?;
    let pos = values.iter().any(|v| *v > 0.0);
    let neg = values.iter().any(|v| *v < 0.0);
    if pos && neg {
        return Err(SysidError::InconsistentSign(name.to_string()));
    }
    Ok(values.iter().map(|v| v.abs()).sum::<f64>() / values.len() as f64)
}

/// Averages per-trial coefficients after taking magnitudes.
pub fn average_trials(
    results: &[RegressionResult],
    kind: RegressionKind,
) -> Result<ParamFragment, SysidError> {
    if results.is_empty() {
        return Err(SysidError::InsufficientData("no trials to average".into()));
    }
    if results.iter().any(|r| r.kind != kind) {
        return Err(SysidError::MixedKinds);
    }
    Ok(match kind {
        RegressionKind::InertiaDamping => ParamFragment::InertiaDamping {
            b_c: mean_magnitude(results, VELOCITY)?,
            m_c: mean_magnitude(results, ACCELERATION)?,
        },
        RegressionKind::Gravity => ParamFragment::Gravity {
            g_c: mean_magnitude(results, SINE_POS)?,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn result(kind: RegressionKind, coeffs: &[(&str, f64)]) -> RegressionResult {
        RegressionResult {
            kind,
            coefficients: coeffs.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            r_squared: 1.0,
            n_samples: 100,
            residual_std: 0.0,
        }
    }

    #[test]
    fn forward_difference_examples() {
        let recs = [
            LogRecord::feedback(0.0, 0.0, 0.0, 0.0),
            LogRecord::feedback(0.01, 0.0, 0.1, 0.0),
        ];
        let a = finite_difference_acceleration(&recs).unwrap();
        assert_eq!(a.len(), 1);
        assert_eq!(a[0].0, 0.0);
        assert!((a[0].1 - 10.0).abs() < 1e-12);

        let recs: Vec<_> = (0..20)
            .map(|k| LogRecord::feedback(k as f64 * 0.1, 0.0, 2.5, 0.0))
            .collect();
        let a = finite_difference_acceleration(&recs).unwrap();
        assert_eq!(a.len(), 19);
        assert!(a.iter().all(|(_, v)| *v == 0.0));
    }

    #[test]
    fn forward_difference_matches_analytic_derivative() {
        let dt = 1e-4;
        let recs: Vec<_> = (0..20_000)
            .map(|k| {
                let t = k as f64 * dt;
                LogRecord::feedback(t, 0.0, t.sin(), 0.0)
            })
            .collect();
        let a = finite_difference_acceleration(&recs).unwrap();
        let worst = a.iter().map(|(t, v)| (v - t.cos()).abs()).fold(0.0, f64::max);
        assert!(worst <= 1e-3, "{worst}");
    }

    #[test]
    fn forward_difference_errors() {
        let recs = [
            LogRecord::feedback(0.0, 0.0, 0.0, 0.0),
            LogRecord::feedback(0.0, 0.0, 1.0, 0.0),
        ];
        assert_eq!(
            finite_difference_acceleration(&recs),
            Err(SysidError::RepeatedTimestamp { index: 1 })
        );
        assert!(finite_difference_acceleration(&recs[..1]).is_err());
    }

    /// Effort as the sensor reports it: the negated driving torque.
    fn horizontal_records(m_c: f64, b_c: f64) -> Vec<LogRecord> {
        let dt = 0.002;
        let n = 400;
        let v = |t: f64| 0.8 * (3.0 * t).sin() + 0.3 * (7.1 * t).cos();
        (0..n)
            .map(|k| {
                let t = k as f64 * dt;
                let a = (v(t + dt) - v(t)) / dt;
                LogRecord::feedback(t, 0.0, v(t), -(b_c * v(t) + m_c * a))
            })
            .collect()
    }

    #[test]
    fn recovers_negated_inertia_and_damping() {
        let fit = regress_inertia_damping(&horizontal_records(0.055, 11.77), false).unwrap();
        let b = fit.coefficient(VELOCITY).unwrap();
        let m = fit.coefficient(ACCELERATION).unwrap();
        assert!(((b + 11.77) / 11.77).abs() <= 1e-3, "{b}");
        assert!(((m + 0.055) / 0.055).abs() <= 1e-3, "{m}");
        assert!(fit.r_squared > 0.999_999);
        assert_eq!(fit.n_samples, 399);
        assert!(fit.coefficient(INTERCEPT).is_none());

        let fit = regress_inertia_damping(&horizontal_records(0.055, 11.77), true).unwrap();
        assert!(fit.coefficient(INTERCEPT).unwrap().abs() < 1e-9);
    }

    #[test]
    fn zero_effort_fit() {
        let mut recs = horizontal_records(0.055, 11.77);
        recs.iter_mut().for_each(|r| r.effort_fbk = 0.0);
        let fit = regress_inertia_damping(&recs, false).unwrap();
        assert_eq!(fit.coefficient(VELOCITY), Some(0.0));
        assert_eq!(fit.coefficient(ACCELERATION), Some(0.0));
        assert_eq!(fit.r_squared, 1.0);
    }

    #[test]
    fn constant_velocity_is_singular() {
        let recs: Vec<_> = (0..50)
            .map(|k| LogRecord::feedback(k as f64 * 0.01, 0.0, 1.0, -11.77))
            .collect();
        assert!(matches!(
            regress_inertia_damping(&recs, false),
            Err(SysidError::Singular(_))
        ));
        assert!(matches!(
            regress_inertia_damping(&recs[..5], false),
            Err(SysidError::InsufficientData(_))
        ));
    }

    fn hold(angle: f64, cycle: Cycle, effort: f64) -> StaticSegment {
        StaticSegment {
            angle,
            cycle,
            records: (0..50)
                .map(|k| LogRecord::feedback(k as f64 * 0.01, angle, 0.0, effort))
                .collect(),
        }
    }

    fn sweep(g_c: f64, offset: f64) -> Vec<StaticSegment> {
        let mut segs = Vec::new();
        for deg in (10..=90).step_by(10) {
            for sign in [1.0, -1.0] {
                let th = (sign * deg as f64).to_radians();
                segs.push(hold(th, Cycle::Positive, g_c * th.sin() + offset));
                segs.push(hold(th, Cycle::Negative, g_c * th.sin() - offset));
            }
        }
        segs
    }

    #[test]
    fn recovers_gravity_coefficient() {
        let fit = regress_gravity(&sweep(1.678, 0.0), false).unwrap();
        let g = fit.coefficient(SINE_POS).unwrap();
        assert!(((g - 1.678) / 1.678).abs() <= 1e-3);
        assert_eq!(fit.n_samples, 36);
    }

    #[test]
    fn balanced_hysteresis_cancels() {
        let clean = regress_gravity(&sweep(1.678, 0.0), false).unwrap();
        let offset = regress_gravity(&sweep(1.678, 0.07), false).unwrap();
        let d = clean.coefficient(SINE_POS).unwrap() - offset.coefficient(SINE_POS).unwrap();
        assert!(d.abs() <= 1e-9, "{d}");
    }

    #[test]
    fn gravity_needs_distinct_angles() {
        let segs = vec![hold(0.3, Cycle::Positive, 0.5); 4];
        assert!(matches!(regress_gravity(&segs, false), Err(SysidError::Singular(_))));
        assert!(matches!(
            regress_gravity(&segs[..2], false),
            Err(SysidError::InsufficientData(_))
        ));
    }

    #[test]
    fn averaging_normalizes_sign() {
        let trials: Vec<_> = (0..6)
            .map(|_| {
                result(
                    RegressionKind::InertiaDamping,
                    &[(VELOCITY, -11.77), (ACCELERATION, -0.055)],
                )
            })
            .collect();
        match average_trials(&trials, RegressionKind::InertiaDamping).unwrap() {
            ParamFragment::InertiaDamping { m_c, b_c } => {
                assert!((b_c - 11.77).abs() < 1e-12);
                assert!((m_c - 0.055).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
        let one = [result(RegressionKind::Gravity, &[(SINE_POS, 1.678)])];
        assert_eq!(
            average_trials(&one, RegressionKind::Gravity).unwrap(),
            ParamFragment::Gravity { g_c: 1.678 }
        );
    }

    #[test]
    fn averaging_guards() {
        let a = result(RegressionKind::InertiaDamping, &[(VELOCITY, -11.0), (ACCELERATION, -0.05)]);
        let b = result(RegressionKind::InertiaDamping, &[(VELOCITY, 12.0), (ACCELERATION, -0.06)]);
        assert_eq!(
            average_trials(&[a.clone(), b], RegressionKind::InertiaDamping),
            Err(SysidError::InconsistentSign(VELOCITY.into()))
        );
        let g = result(RegressionKind::Gravity, &[(SINE_POS, 1.6)]);
        assert_eq!(
            average_trials(&[a, g], RegressionKind::InertiaDamping),
            Err(SysidError::MixedKinds)
        );
        assert!(average_trials(&[], RegressionKind::Gravity).is_err());
    }
}
