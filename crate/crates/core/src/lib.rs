//! Single-link pendulum control toolkit.
//!
//! The crate covers the whole loop from actuator logs to a validated
//! regulator:
//!
//! - [`dynamics`]: nonlinear pendulum model `M_c·θ̈ + b_c·θ̇ + G_c·sin θ = u`,
//!   energy, fixed points and explicit-Euler simulation.
//! - [`linear`]: linearization about a fixed point, a Newton–Kleinman
//!   Riccati solver, LQR gains and eigenvalue reports.
//! - [`sysid`]: log parsing and least-squares identification of the three
//!   model constants.
//! - [`harness`]: command trajectories, seeded torque noise, closed-loop
//!   runs, a virtual plant, spline resampling and difference statistics.
//! - [`cli`]: the `pendctl` command-line front end.

pub mod cli;
pub mod dynamics;
pub mod harness;
pub mod linear;
pub mod sysid;
pub mod trajectory;

pub use dynamics::{FixedPoint, PendulumParams, Stability, State};
pub use linear::{CostMatrices, LqrSolution, StateSpace};
pub use trajectory::{Sample, Trajectory};
