//! Nonlinear pendulum model in aggregated-constant form.
//!
//! The equation of motion is
//!
//! ```text
//! m_c·θ̈ + b_c·θ̇ + g_c·sin θ = u
//! ```
//!
//! with `θ = 0` hanging straight down and `θ = π` upright. Angles are kept
//! unwrapped internally; only reporting helpers fold them into `[0, 2π)`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::trajectory::{Sample, Trajectory};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("invalid pendulum parameters: {0}")]
    InvalidParams(String),
    #[error("non-finite {0}")]
    NonFinite(&'static str),
    #[error("every state with zero velocity is an equilibrium when g_c = 0")]
    GravityContinuum,
    #[error("time step must be positive and finite, got {0}")]
    InvalidStep(f64),
    #[error("duration {duration} must be at least one time step {dt}")]
    InvalidDuration { duration: f64, dt: f64 },
    #[error("integration overflow: state became ({theta}, {omega})")]
    IntegrationOverflow { theta: f64, omega: f64 },
    #[error("policy returned non-finite torque {value} at step {step}")]
    PolicyNonFinite { step: usize, value: f64 },
}

/// Aggregated model constants.
///
/// `m_c = m·l_c² + I_c` (kg·m²), `b_c` is viscous damping (N·m·s/rad) and
/// `g_c = m·g·l_c` (N·m).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PendulumParams {
    pub m_c: f64,
    pub b_c: f64,
    pub g_c: f64,
}

impl PendulumParams {
    /// Constants identified on the reference X5-9 rig.
    pub const IDENTIFIED: PendulumParams = PendulumParams {
        m_c: 0.055,
        b_c: 11.77,
        g_c: 1.678,
    };

    pub fn new(m_c: f64, b_c: f64, g_c: f64) -> Result<Self, DynamicsError> {
        let p = PendulumParams { m_c, b_c, g_c };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        if !(self.m_c.is_finite() && self.b_c.is_finite() && self.g_c.is_finite()) {
            return Err(DynamicsError::InvalidParams(format!(
                "non-finite constant in {self:?}"
            )));
        }
        if self.m_c <= 0.0 {
            return Err(DynamicsError::InvalidParams(format!(
                "m_c must be > 0, got {}",
                self.m_c
            )));
        }
        if self.b_c < 0.0 {
            return Err(DynamicsError::InvalidParams(format!(
                "b_c must be >= 0, got {}",
                self.b_c
            )));
        }
        if self.g_c < 0.0 {
            return Err(DynamicsError::InvalidParams(format!(
                "g_c must be >= 0, got {}",
                self.g_c
            )));
        }
        Ok(())
    }
}

/// Angle (rad) and angular velocity (rad/s).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct State {
    pub theta: f64,
    pub omega: f64,
}

impl State {
    pub const fn new(theta: f64, omega: f64) -> Self {
        State { theta, omega }
    }

    pub const HANGING: State = State::new(0.0, 0.0);
    pub const UPRIGHT: State = State::new(PI, 0.0);

    pub fn is_finite(&self) -> bool {
        self.theta.is_finite() && self.omega.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stability {
    /// Stable in the sense of Lyapunov.
    LocallyStable,
    Unstable,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPoint {
    pub state: State,
    pub stability: Stability,
}

/// Kinetic and potential energy (J).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Energy {
    pub kinetic: f64,
    pub potential: f64,
}

impl Energy {
    pub fn total(&self) -> f64 {
        self.kinetic + self.potential
    }
}

/// Folds an angle into `[0, 2π)`.
pub fn wrap_angle(theta: f64) -> f64 {
    let r = theta.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// `sin θ` evaluated by reflection about the nearest fixed point, so that
/// both `0` and the representable `π` give an exactly zero gravity torque.
fn gravity_sine(theta: f64) -> f64 {
    let r = wrap_angle(theta);
    if r < FRAC_PI_2 {
        r.sin()
    } else if r < 3.0 * FRAC_PI_2 {
        (PI - r).sin()
    } else {
        (r - TAU).sin()
    }
}

fn ensure_finite(value: f64, what: &'static str) -> Result<(), DynamicsError> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(DynamicsError::NonFinite(what))
    }
}

/// Angular acceleration `(u − b_c·ω − g_c·sin θ) / m_c` in rad/s².
pub fn acceleration(params: &PendulumParams, s: State, u: f64) -> Result<f64, DynamicsError> {
    ensure_finite(s.theta, "angle")?;
    ensure_finite(s.omega, "angular velocity")?;
    ensure_finite(u, "torque")?;
    Ok(accel_unchecked(params, s, u))
}

#[inline]
fn accel_unchecked(params: &PendulumParams, s: State, u: f64) -> f64 {
    (u - params.b_c * s.omega - params.g_c * gravity_sine(s.theta)) / params.m_c
}

pub fn energy(params: &PendulumParams, s: State) -> Result<Energy, DynamicsError> {
    ensure_finite(s.theta, "angle")?;
    ensure_finite(s.omega, "angular velocity")?;
    Ok(Energy {
        kinetic: 0.5 * params.m_c * s.omega * s.omega,
        potential: -params.g_c * s.theta.cos(),
    })
}

/// Equilibria of the unforced pendulum, angles in `[0, 2π)`.
pub fn fixed_points(params: &PendulumParams) -> Result<Vec<FixedPoint>, DynamicsError> {
    params.validate()?;
    if params.g_c == 0.0 {
        return Err(DynamicsError::GravityContinuum);
    }
    Ok(vec![
        FixedPoint {
            state: State::HANGING,
            stability: Stability::LocallyStable,
        },
        FixedPoint {
            state: State::UPRIGHT,
            stability: Stability::Unstable,
        },
    ])
}

/// One explicit-Euler step with the torque held over `dt`.
pub fn step_euler(
    params: &PendulumParams,
    s: State,
    u: f64,
    dt: f64,
) -> Result<State, DynamicsError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(DynamicsError::InvalidStep(dt));
    }
    let alpha = acceleration(params, s, u)?;
    let next = State {
        theta: s.theta + dt * s.omega,
        omega: s.omega + dt * alpha,
    };
    if !next.is_finite() {
        return Err(DynamicsError::IntegrationOverflow {
            theta: next.theta,
            omega: next.omega,
        });
    }
    Ok(next)
}

/// Number of samples `⌊duration/dt⌋ + 1` for a fixed-step run.
pub fn sample_count(dt: f64, duration: f64) -> Result<usize, DynamicsError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(DynamicsError::InvalidStep(dt));
    }
    if !(duration.is_finite() && duration >= dt) {
        return Err(DynamicsError::InvalidDuration { duration, dt });
    }
    // absorb representation error such as 5.0 / 0.002 = 2500.0000000000005
    let steps = (duration / dt * (1.0 + 1e-12)).floor();
    Ok(steps as usize + 1)
}

/// Fixed-step rollout under a state-feedback policy `(t, state) -> torque`.
///
/// The policy sees the state at the start of each step and its output is
/// held for the whole step. The control channel of the last sample records
/// the policy output at the final state even though no step follows it.
pub fn simulate<P>(
    params: &PendulumParams,
    s0: State,
    mut policy: P,
    dt: f64,
    duration: f64,
) -> Result<Trajectory, DynamicsError>
where
    P: FnMut(f64, State) -> f64,
{
    params.validate()?;
    if !s0.is_finite() {
        return Err(DynamicsError::NonFinite("initial state"));
    }
    let n = sample_count(dt, duration)?;
    let mut traj = Trajectory::with_capacity(dt, "sim", n);
    let mut s = s0;
    for k in 0..n {
        let t = k as f64 * dt;
        let u = policy(t, s);
        if !u.is_finite() {
            return Err(DynamicsError::PolicyNonFinite { step: k, value: u });
        }
        traj.push_unchecked(Sample {
            t,
            state: s,
            u_control: u,
            u_noise: 0.0,
        });
        if k + 1 < n {
            s = step_euler(params, s, u, dt)?;
        }
    }
    Ok(traj)
}
