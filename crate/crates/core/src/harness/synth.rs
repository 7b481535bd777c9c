//! Synthetic actuator logs for exercising identification.
//!
//! Horizontal runs drive the gravity-free pendulum with a random
//! piecewise-constant torque and record every integration step; the effort
//! channel carries the negated torque, as the real sensor does. Vertical
//! sweeps track command trajectories between holds with a stiff PD loop and
//! record the motor torque at the command rate.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::command::{generate_trajectory, DEFAULT_INCREMENT, DEFAULT_PEAK_VELOCITY, DEFAULT_RATE};
use super::{HarnessError, NoiseRng};
use crate::dynamics::{step_euler, PendulumParams, State};
use crate::sysid::LogRecord;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HorizontalRun {
    pub samples: usize,
    pub torque_amplitude: f64,
    /// Integration steps between torque switches.
    pub switch_every: usize,
    pub effort_noise_std: f64,
    pub seed: u64,
}

impl Default for HorizontalRun {
    fn default() -> Self {
        HorizontalRun {
            samples: 5000,
            torque_amplitude: 2.0,
            switch_every: 50,
            effort_noise_std: 0.0,
            seed: 1,
        }
    }
}

fn gaussian(std: f64, seed: u64) -> Result<(Normal<f64>, ChaCha8Rng), HarnessError> {
    let normal = Normal::new(0.0, std)
        .map_err(|e| HarnessError::InvalidConfig(format!("effort noise: {e}")))?;
    Ok((normal, ChaCha8Rng::seed_from_u64(seed)))
}

/// Step small enough for explicit Euler on the velocity time constant.
pub fn horizontal_step(params: &PendulumParams) -> f64 {
    if params.b_c > 0.0 {
        0.002f64.min(0.1 * params.m_c / params.b_c)
    } else {
        0.002
    }
}

pub fn horizontal_log(params: &PendulumParams, run: &HorizontalRun) -> Result<Vec<LogRecord>, HarnessError> {
    params.validate()?;
    if run.switch_every == 0 {
        return Err(HarnessError::InvalidConfig("switch interval must be ≥ 1".into()));
    }
    let flat = PendulumParams { g_c: 0.0, ..*params };
    let dt = horizontal_step(params);
    let mut torque_rng = NoiseRng::new(run.seed);
    let (normal, mut noise_rng) = gaussian(run.effort_noise_std, run.seed ^ 0x5eed)?;

    let mut s = State::HANGING;
    let mut u = 0.0;
    let mut out = Vec::with_capacity(run.samples);
    for k in 0..run.samples {
        if k % run.switch_every == 0 {
            u = torque_rng.uniform(-run.torque_amplitude, run.torque_amplitude);
        }
        let effort = -u + normal.sample(&mut noise_rng);
        let mut rec = LogRecord::feedback(k as f64 * dt, s.theta, s.omega, effort);
        rec.effort_cmd = Some(u);
        out.push(rec);
        s = step_euler(&flat, s, u, dt)?;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GravitySweep {
    pub step_deg: f64,
    pub max_deg: f64,
    /// Dwell at each target after the move completes (s).
    pub hold: f64,
    pub effort_noise_std: f64,
    /// Added to the recorded effort with the sign of the last move.
    pub hysteresis_offset: f64,
    pub seed: u64,
}

impl Default for GravitySweep {
    fn default() -> Self {
        GravitySweep {
            step_deg: 10.0,
            max_deg: 90.0,
            hold: 1.5,
            effort_noise_std: 0.0,
            hysteresis_offset: 0.0,
            seed: 2,
        }
    }
}

/// 0 → +max → −max → 0 in steps of `step_deg`, in radians.
pub fn sweep_targets(step_deg: f64, max_deg: f64) -> Result<Vec<f64>, HarnessError> {
    if !(step_deg > 0.0 && max_deg >= step_deg && max_deg <= 180.0) {
        return Err(HarnessError::InvalidConfig(format!(
            "bad sweep: step {step_deg}°, max {max_deg}°"
        )));
    }
    let n = (max_deg / step_deg).round() as i64;
    let mut deg: Vec<i64> = (0..=n).collect();
    deg.extend((-n..n).rev());
    deg.extend(-n + 1..=0);
    Ok(deg
        .into_iter()
        .map(|k| (k as f64 * step_deg).to_radians())
        .collect())
}

pub fn gravity_log(params: &PendulumParams, sweep: &GravitySweep) -> Result<Vec<LogRecord>, HarnessError> {
    params.validate()?;
    let targets = sweep_targets(sweep.step_deg, sweep.max_deg)?;
    let (normal, mut noise_rng) = gaussian(sweep.effort_noise_std, sweep.seed)?;

    let m = params.m_c;
    let kp = 100.0 * (params.b_c + params.g_c);
    let kd = (2.0 * (kp * m).sqrt() - params.b_c).max(0.0);
    let c = params.b_c + kd;
    let dt_max = 0.002f64.min(0.5 * m / c).min(0.2 * (m / kp).sqrt());
    let period = 1.0 / DEFAULT_RATE;
    let substeps = (period / dt_max).ceil() as usize;
    let dt = period / substeps as f64;
    let hold_records = (sweep.hold * DEFAULT_RATE).round() as usize;

    // command samples at the command rate, holds appended as repeats
    let mut commands: Vec<(f64, f64, f64)> = Vec::new();
    let mut direction = 1.0;
    let mut prev = targets[0];
    for (i, &target) in targets.iter().enumerate() {
        if i > 0 {
            direction = (target - prev).signum();
            let tr = generate_trajectory(prev, target, DEFAULT_INCREMENT, DEFAULT_PEAK_VELOCITY, DEFAULT_RATE)?;
            commands.extend(tr.samples.iter().map(|c| (c.position, c.velocity, direction)));
        }
        commands.extend(std::iter::repeat_n((target, 0.0, direction), hold_records));
        prev = target;
    }

    // the effort channel reports the torque most recently applied, so a new
    // command shows up one record after it is issued
    let mut s = State::new(targets[0], 0.0);
    let mut applied = kp * (targets[0] - s.theta);
    let mut out = Vec::with_capacity(commands.len());
    for (k, &(pos_cmd, vel_cmd, dir)) in commands.iter().enumerate() {
        let effort = applied + sweep.hysteresis_offset * dir + normal.sample(&mut noise_rng);
        let mut rec = LogRecord::feedback(k as f64 * period, s.theta, s.omega, effort);
        rec.position_cmd = Some(pos_cmd);
        rec.velocity_cmd = Some(vel_cmd);
        out.push(rec);
        for _ in 0..substeps {
            applied = kp * (pos_cmd - s.theta) + kd * (vel_cmd - s.omega);
            s = step_euler(params, s, applied, dt)?;
        }
    }
    Ok(out)
}
