//! LQR regulation under additive torque noise.

use std::f64::consts::FRAC_PI_2;

use nalgebra::RowVector2;

use super::{HarnessError, NoiseConfig};
use crate::dynamics::{self, sample_count, step_euler, DynamicsError, PendulumParams, State};
use crate::linear::EQUILIBRIUM_TOL;
use crate::trajectory::{Sample, Trajectory};

/// Everything the shared loop needs. The simulator is the special case with
/// one physics step per control update and ideal sensing.
pub(crate) struct LoopSpec<'a> {
    pub params: PendulumParams,
    pub gain: RowVector2<f64>,
    pub noise: &'a NoiseConfig,
    pub physics_dt: f64,
    pub hold: usize,
    pub records: usize,
    pub setpoint: State,
    pub initial: State,
    pub quantization: f64,
    pub hysteresis: f64,
    pub source: &'static str,
}

pub(crate) fn check_setpoint(params: &PendulumParams, setpoint: State) -> Result<(), HarnessError> {
    let acc = dynamics::acceleration(params, setpoint, 0.0)?;
    if setpoint.omega.abs() > EQUILIBRIUM_TOL || acc.abs() > EQUILIBRIUM_TOL {
        return Err(HarnessError::InvalidConfig(format!(
            "setpoint (θ = {}, ω = {}) is not a fixed point",
            setpoint.theta, setpoint.omega
        )));
    }
    Ok(())
}

fn quantize(x: f64, q: f64) -> f64 {
    if q > 0.0 {
        (x / q).round() * q
    } else {
        x
    }
}

pub(crate) fn run_loop(spec: LoopSpec<'_>) -> Result<Trajectory, HarnessError> {
    spec.params.validate()?;
    if !spec.gain.iter().all(|g| g.is_finite()) {
        return Err(HarnessError::InvalidConfig("non-finite gain".into()));
    }
    if !spec.initial.is_finite() {
        return Err(DynamicsError::NonFinite("initial state").into());
    }
    check_setpoint(&spec.params, spec.setpoint)?;
    let mut noise = spec.noise.stream()?;
    let period = spec.hold as f64 * spec.physics_dt;
    let mut traj = Trajectory::with_capacity(period, spec.source, spec.records);

    let deviation = |s: &State| (s.theta - spec.setpoint.theta).abs();
    let diverged = |traj: Trajectory, t: f64, dev: f64| HarnessError::Diverged {
        t,
        deviation: dev,
        partial: Box::new(traj),
    };
    let mut s = spec.initial;
    if deviation(&s) > FRAC_PI_2 {
        return Err(diverged(traj, 0.0, deviation(&s)));
    }
    for j in 0..spec.records {
        let step0 = j * spec.hold;
        let t = step0 as f64 * spec.physics_dt;
        let measured = State::new(quantize(s.theta, spec.quantization), s.omega);
        let u_control = -(spec.gain[0] * (measured.theta - spec.setpoint.theta)
            + spec.gain[1] * (measured.omega - spec.setpoint.omega));
        let u_noise = noise.next().unwrap_or(0.0);
        let recorded_effort = if spec.hysteresis != 0.0 && measured.omega != 0.0 {
            u_control + spec.hysteresis * measured.omega.signum()
        } else {
            u_control
        };
        traj.push_unchecked(Sample {
            t,
            state: measured,
            u_control: recorded_effort,
            u_noise,
        });
        if j + 1 == spec.records {
            break;
        }
        for i in 0..spec.hold {
            s = step_euler(&spec.params, s, u_control + u_noise, spec.physics_dt)?;
            let dev = deviation(&s);
            if dev > FRAC_PI_2 {
                let t_div = (step0 + i + 1) as f64 * spec.physics_dt;
                return Err(diverged(traj, t_div, dev));
            }
        }
    }
    Ok(traj)
}

/// Fixed-step Euler rollout starting at the setpoint with
/// `u_control = −K·(x − setpoint)` plus one noise draw per step.
pub fn run_lqr_noise_sim(
    params: &PendulumParams,
    gain: &RowVector2<f64>,
    noise: &NoiseConfig,
    dt: f64,
    duration: f64,
    setpoint: State,
) -> Result<Trajectory, HarnessError> {
    run_lqr_noise_sim_from(params, gain, noise, dt, duration, setpoint, setpoint)
}

/// As [`run_lqr_noise_sim`] but from an arbitrary initial state.
pub fn run_lqr_noise_sim_from(
    params: &PendulumParams,
    gain: &RowVector2<f64>,
    noise: &NoiseConfig,
    dt: f64,
    duration: f64,
    setpoint: State,
    initial: State,
) -> Result<Trajectory, HarnessError> {
    let records = sample_count(dt, duration)?;
    run_loop(LoopSpec {
        params: *params,
        gain: *gain,
        noise,
        physics_dt: dt,
        hold: 1,
        records,
        setpoint,
        initial,
        quantization: 0.0,
        hysteresis: 0.0,
        source: "sim",
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegulationSummary {
    pub max_abs_u_control: f64,
    pub max_abs_deviation: f64,
    /// Largest `|θ − θ*|` from `settle_time` on.
    pub max_settled_deviation: f64,
}

pub fn regulation_summary(traj: &Trajectory, setpoint: State, settle_time: f64) -> RegulationSummary {
    let mut out = RegulationSummary {
        max_abs_u_control: 0.0,
        max_abs_deviation: 0.0,
        max_settled_deviation: 0.0,
    };
    for s in traj.samples() {
        let dev = (s.state.theta - setpoint.theta).abs();
        out.max_abs_u_control = out.max_abs_u_control.max(s.u_control.abs());
        out.max_abs_deviation = out.max_abs_deviation.max(dev);
        if s.t >= settle_time {
            out.max_settled_deviation = out.max_settled_deviation.max(dev);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linear::{linearize, lqr_gain, CostMatrices};

    const P: PendulumParams = PendulumParams::IDENTIFIED;

    fn combo3_gain() -> RowVector2<f64> {
        let ss = linearize(&P, State::UPRIGHT, 0.0).unwrap();
        lqr_gain(&ss, &CostMatrices::diagonal(100.0, 0.01, 0.1).unwrap())
            .unwrap()
            .k
    }

    #[test]
    fn silent_run_at_setpoint_is_constant() {
        let tr = run_lqr_noise_sim(&P, &combo3_gain(), &NoiseConfig::silent(), 0.002, 5.0, State::UPRIGHT)
            .unwrap();
        assert_eq!(tr.len(), 2501);
        for s in tr.samples() {
            assert_eq!(s.state, State::UPRIGHT);
            assert_eq!(s.u_control, 0.0);
            assert_eq!(s.u_noise, 0.0);
        }
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let noise = NoiseConfig::new(-2.5, 2.5, 11).unwrap();
        let k = combo3_gain();
        let a = run_lqr_noise_sim(&P, &k, &noise, 0.002, 2.0, State::UPRIGHT).unwrap();
        let b = run_lqr_noise_sim(&P, &k, &noise, 0.002, 2.0, State::UPRIGHT).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn recovers_from_an_offset() {
        let k = combo3_gain();
        let x0 = State::new(std::f64::consts::PI + 0.2, 0.0);
        let tr = run_lqr_noise_sim_from(&P, &k, &NoiseConfig::silent(), 0.002, 5.0, State::UPRIGHT, x0)
            .unwrap();
        let last = tr.samples().last().unwrap();
        // τ ≈ 0.372 s, so 5 s is more than 13 time constants
        assert!((last.state.theta - std::f64::consts::PI).abs() < 1e-4);
    }

    #[test]
    fn unstabilized_run_reports_divergence() {
        let noise = NoiseConfig::new(0.2, 0.2, 0).unwrap();
        let err = run_lqr_noise_sim(&P, &RowVector2::zeros(), &noise, 0.002, 30.0, State::UPRIGHT)
            .unwrap_err();
        match err {
            HarnessError::Diverged { deviation, partial, t } => {
                assert!(deviation > FRAC_PI_2);
                assert!(!partial.is_empty());
                assert!(partial.last_time().unwrap() < t);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_non_equilibrium_setpoint() {
        let sp = State::new(1.0, 0.0);
        assert!(matches!(
            run_lqr_noise_sim(&P, &combo3_gain(), &NoiseConfig::silent(), 0.002, 1.0, sp),
            Err(HarnessError::InvalidConfig(_))
        ));
    }
}
