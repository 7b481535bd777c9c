//! Run configuration: defaults, `key = value` files and flag overrides.

use std::f64::consts::PI;
use std::fmt::Write as _;

use super::CliError;
use crate::dynamics::{PendulumParams, State};
use crate::harness::{NoiseConfig, Perturbation, PlantConfig};
use crate::linear::CostMatrices;

/// Parses a plain number, or degrees when suffixed with `deg`.
pub fn parse_angle(text: &str) -> Result<f64, String> {
    let t = text.trim();
    let (num, deg) = match t.strip_suffix("deg") {
        Some(rest) => (rest.trim_end(), true),
        None => (t, false),
    };
    let v: f64 = num.parse().map_err(|_| format!("`{text}` is not an angle"))?;
    if !v.is_finite() {
        return Err(format!("`{text}` is not finite"));
    }
    Ok(if deg { v.to_radians() } else { v })
}

fn parse_number(text: &str) -> Result<f64, String> {
    let v: f64 = text
        .trim()
        .parse()
        .map_err(|_| format!("`{text}` is not a number"))?;
    if !v.is_finite() {
        return Err(format!("`{text}` is not finite"));
    }
    Ok(v)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub m_c: f64,
    pub b_c: f64,
    pub g_c: f64,
    pub dt: f64,
    pub duration: f64,
    pub setpoint_theta: f64,
    pub initial_offset: f64,
    pub q11: f64,
    pub q22: f64,
    pub r11: f64,
    pub noise_lo: f64,
    pub noise_hi: f64,
    pub seed: u64,
    pub control_rate: f64,
    pub quantization: f64,
    pub hysteresis: f64,
    pub perturb_m_c: f64,
    pub perturb_b_c: f64,
    pub perturb_g_c: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            m_c: 0.055,
            b_c: 11.77,
            g_c: 1.678,
            dt: 0.002,
            duration: 5.0,
            setpoint_theta: PI,
            initial_offset: 0.0,
            q11: 100.0,
            q22: 0.01,
            r11: 0.1,
            noise_lo: -2.5,
            noise_hi: 2.5,
            seed: 0,
            control_rate: 100.0,
            quantization: 0.0,
            hysteresis: 0.0,
            perturb_m_c: 0.0,
            perturb_b_c: 0.0,
            perturb_g_c: 0.0,
        }
    }
}

pub const KEYS: [&str; 19] = [
    "m_c",
    "b_c",
    "g_c",
    "dt",
    "duration",
    "setpoint_theta",
    "initial_offset",
    "q11",
    "q22",
    "r11",
    "noise_lo",
    "noise_hi",
    "seed",
    "control_rate",
    "quantization",
    "hysteresis",
    "perturb_m_c",
    "perturb_b_c",
    "perturb_g_c",
];

impl RunConfig {
    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let slot = match key {
            "seed" => {
                self.seed = value
                    .trim()
                    .parse()
                    .map_err(|_| format!("seed `{value}` is not an unsigned 64-bit integer"))?;
                return Ok(());
            }
            "setpoint_theta" | "initial_offset" => {
                let v = parse_angle(value)?;
                if key == "setpoint_theta" {
                    self.setpoint_theta = v;
                } else {
                    self.initial_offset = v;
                }
                return Ok(());
            }
            "m_c" => &mut self.m_c,
            "b_c" => &mut self.b_c,
            "g_c" => &mut self.g_c,
            "dt" => &mut self.dt,
            "duration" => &mut self.duration,
            "q11" => &mut self.q11,
            "q22" => &mut self.q22,
            "r11" => &mut self.r11,
            "noise_lo" => &mut self.noise_lo,
            "noise_hi" => &mut self.noise_hi,
            "control_rate" => &mut self.control_rate,
            "quantization" => &mut self.quantization,
            "hysteresis" => &mut self.hysteresis,
            "perturb_m_c" => &mut self.perturb_m_c,
            "perturb_b_c" => &mut self.perturb_b_c,
            "perturb_g_c" => &mut self.perturb_g_c,
            _ => return Err(format!("unknown configuration key `{key}`")),
        };
        *slot = parse_number(value)?;
        Ok(())
    }

    /// Applies a `key = value` file. Blank lines and `#` comments are skipped.
    pub fn apply_file(&mut self, text: &str, origin: &str) -> Result<(), CliError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Data(format!("{origin}:{}: expected `key = value`", i + 1))
            })?;
            self.set(key.trim(), value.trim())
                .map_err(|e| CliError::Data(format!("{origin}:{}: {e}", i + 1)))?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let usage = |m: String| Err(CliError::Usage(m));
        self.params()?;
        if !(self.dt > 0.0) {
            return usage(format!("dt must be > 0, got {}", self.dt));
        }
        if !(self.duration >= self.dt) {
            return usage(format!("duration must be at least dt, got {}", self.duration));
        }
        for (name, v) in [("q11", self.q11), ("q22", self.q22)] {
            if v < 0.0 {
                return usage(format!("{name} must be ≥ 0, got {v}"));
            }
        }
        if !(self.r11 > 0.0) {
            return usage(format!("r11 must be > 0, got {}", self.r11));
        }
        if self.noise_lo > self.noise_hi {
            return usage(format!(
                "noise_lo ({}) exceeds noise_hi ({})",
                self.noise_lo, self.noise_hi
            ));
        }
        self.plant()
            .validate()
            .map_err(|e| CliError::Usage(e.to_string()))
    }

    pub fn params(&self) -> Result<PendulumParams, CliError> {
        PendulumParams::new(self.m_c, self.b_c, self.g_c).map_err(|e| CliError::Usage(e.to_string()))
    }

    pub fn cost(&self) -> Result<CostMatrices, CliError> {
        CostMatrices::diagonal(self.q11, self.q22, self.r11).map_err(|e| CliError::Usage(e.to_string()))
    }

    pub fn setpoint(&self) -> State {
        State::new(self.setpoint_theta, 0.0)
    }

    pub fn initial_state(&self) -> State {
        State::new(self.setpoint_theta + self.initial_offset, 0.0)
    }

    pub fn noise(&self, seed: u64) -> NoiseConfig {
        NoiseConfig {
            lo: self.noise_lo,
            hi: self.noise_hi,
            seed,
        }
    }

    pub fn plant(&self) -> PlantConfig {
        PlantConfig {
            true_params: PendulumParams {
                m_c: self.m_c,
                b_c: self.b_c,
                g_c: self.g_c,
            },
            control_rate: self.control_rate,
            sensor_quantization: self.quantization,
            effort_hysteresis_offset: self.hysteresis,
            param_perturbation: Perturbation {
                m_c: self.perturb_m_c,
                b_c: self.perturb_b_c,
                g_c: self.perturb_g_c,
            },
        }
    }

    fn value_text(&self, key: &str) -> String {
        match key {
            "m_c" => self.m_c.to_string(),
            "b_c" => self.b_c.to_string(),
            "g_c" => self.g_c.to_string(),
            "dt" => self.dt.to_string(),
            "duration" => self.duration.to_string(),
            "setpoint_theta" => self.setpoint_theta.to_string(),
            "initial_offset" => self.initial_offset.to_string(),
            "q11" => self.q11.to_string(),
            "q22" => self.q22.to_string(),
            "r11" => self.r11.to_string(),
            "noise_lo" => self.noise_lo.to_string(),
            "noise_hi" => self.noise_hi.to_string(),
            "seed" => self.seed.to_string(),
            "control_rate" => self.control_rate.to_string(),
            "quantization" => self.quantization.to_string(),
            "hysteresis" => self.hysteresis.to_string(),
            "perturb_m_c" => self.perturb_m_c.to_string(),
            "perturb_b_c" => self.perturb_b_c.to_string(),
            "perturb_g_c" => self.perturb_g_c.to_string(),
            _ => unreachable!("unknown key {key}"),
        }
    }

    /// The effective configuration as `# key = value` lines.
    pub fn echo(&self) -> String {
        let mut out = String::from("# effective configuration\n");
        for key in KEYS {
            let _ = writeln!(out, "# {key} = {}", self.value_text(key));
        }
        out
    }
}
