//! Experiment plumbing: command trajectories, seeded torque noise, noisy
//! closed-loop runs, a virtual plant, spline resampling and difference
//! statistics.

pub mod closed_loop;
pub mod command;
pub mod compare;
pub mod plant;
pub mod prng;
pub mod spline;
pub mod synth;

use thiserror::Error;

use crate::dynamics::DynamicsError;
use crate::trajectory::{Trajectory, TrajectoryError};

pub use closed_loop::{regulation_summary, run_lqr_noise_sim, run_lqr_noise_sim_from, RegulationSummary};
pub use command::{generate_trajectory, CommandSample, CommandTrajectory};
pub use compare::{compare, ComparisonStats, ALIGNMENT_TOL};
pub use plant::{run_virtual_plant, run_virtual_plant_from, Perturbation, PlantConfig, PLANT_DT};
pub use prng::{uniform_noise, NoiseConfig, NoiseRng};
pub use spline::{resample_cubic, uniform_grid, NaturalCubicSpline};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
    #[error("run diverged at t = {t} s: |Δθ| = {deviation} rad exceeds π/2")]
    Diverged {
        t: f64,
        deviation: f64,
        /// Samples recorded before the divergence was detected.
        partial: Box<Trajectory>,
    },
    #[error("time {t} outside the sampled range [{lo}, {hi}]")]
    OutOfRange { t: f64, lo: f64, hi: f64 },
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("trajectory lengths differ: {a} vs {b}")]
    LengthMismatch { a: usize, b: usize },
    #[error("sample {index}: timestamps {a} and {b} are not aligned")]
    Misaligned { index: usize, a: f64, b: f64 },
}
