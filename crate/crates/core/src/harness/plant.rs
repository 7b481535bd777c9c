//! Virtual plant standing in for the hardware rig.
//!
//! Physics runs at a fixed 2 ms Euler step. The controller and the noise
//! source update at `control_rate` and are held between updates, and one
//! sample is recorded per update. The controller sees the quantized
//! position, which is also what gets recorded. A nonzero hysteresis offset
//! is added to the recorded effort with the sign of the measured velocity;
//! it does not act on the physics.

use nalgebra::RowVector2;
use serde::{Deserialize, Serialize};

use super::closed_loop::{run_loop, LoopSpec};
use super::{HarnessError, NoiseConfig};
use crate::dynamics::{sample_count, PendulumParams, State};
use crate::trajectory::Trajectory;

pub const PLANT_DT: f64 = 0.002;
pub const DEFAULT_CONTROL_RATE: f64 = 100.0;

/// Relative error applied to each true constant, `p·(1 + fraction)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Perturbation {
    pub m_c: f64,
    pub b_c: f64,
    pub g_c: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlantConfig {
    pub true_params: PendulumParams,
    pub control_rate: f64,
    pub sensor_quantization: f64,
    pub effort_hysteresis_offset: f64,
    pub param_perturbation: Perturbation,
}

impl PlantConfig {
    pub fn ideal(true_params: PendulumParams) -> Self {
        PlantConfig {
            true_params,
            control_rate: DEFAULT_CONTROL_RATE,
            sensor_quantization: 0.0,
            effort_hysteresis_offset: 0.0,
            param_perturbation: Perturbation::default(),
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |msg: String| Err(HarnessError::InvalidConfig(msg));
        if !(self.control_rate > 0.0 && self.control_rate.is_finite()) {
            return bad(format!("control rate must be > 0, got {}", self.control_rate));
        }
        if !(self.sensor_quantization >= 0.0 && self.sensor_quantization.is_finite()) {
            return bad(format!("quantization must be ≥ 0, got {}", self.sensor_quantization));
        }
        if !self.effort_hysteresis_offset.is_finite() {
            return bad("non-finite hysteresis offset".into());
        }
        let p = self.param_perturbation;
        for (name, f) in [("m_c", p.m_c), ("b_c", p.b_c), ("g_c", p.g_c)] {
            if !(f > -1.0 && f.is_finite()) {
                return bad(format!("perturbation of {name} must be > -1, got {f}"));
            }
        }
        self.hold_steps().map(|_| ())
    }

    /// Physics steps per control period; the period must be a whole number
    /// of physics steps.
    pub fn hold_steps(&self) -> Result<usize, HarnessError> {
        let ratio = 1.0 / (self.control_rate * PLANT_DT);
        let hold = ratio.round();
        if hold < 1.0 || (ratio - hold).abs() > 1e-9 * ratio {
            return Err(HarnessError::InvalidConfig(format!(
                "control period 1/{} s is not a multiple of the {PLANT_DT} s physics step",
                self.control_rate
            )));
        }
        Ok(hold as usize)
    }

    pub fn effective_params(&self) -> Result<PendulumParams, HarnessError> {
        let p = self.true_params;
        let f = self.param_perturbation;
        Ok(PendulumParams::new(
            p.m_c * (1.0 + f.m_c),
            p.b_c * (1.0 + f.b_c),
            p.g_c * (1.0 + f.g_c),
        )?)
    }
}

pub fn run_virtual_plant(
    cfg: &PlantConfig,
    gain: &RowVector2<f64>,
    noise: &NoiseConfig,
    duration: f64,
    setpoint: State,
) -> Result<Trajectory, HarnessError> {
    run_virtual_plant_from(cfg, gain, noise, duration, setpoint, setpoint)
}

pub fn run_virtual_plant_from(
    cfg: &PlantConfig,
    gain: &RowVector2<f64>,
    noise: &NoiseConfig,
    duration: f64,
    setpoint: State,
    initial: State,
) -> Result<Trajectory, HarnessError> {
    cfg.validate()?;
    let hold = cfg.hold_steps()?;
    let records = sample_count(1.0 / cfg.control_rate, duration)?;
    run_loop(LoopSpec {
        params: cfg.effective_params()?,
        gain: *gain,
        noise,
        physics_dt: PLANT_DT,
        hold,
        records,
        setpoint,
        initial,
        quantization: cfg.sensor_quantization,
        hysteresis: cfg.effort_hysteresis_offset,
        source: "plant",
    })
}
