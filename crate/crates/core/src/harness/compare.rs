//! Sample-wise difference statistics between two aligned trajectories.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::trajectory::Trajectory;

/// Largest tolerated timestamp disagreement (s).
pub const ALIGNMENT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonStats {
    pub mean_dpos: f64,
    pub std_dpos: f64,
    pub mean_dvel: f64,
    pub std_dvel: f64,
    pub n: usize,
}

impl fmt::Display for ComparisonStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "mean_dpos = {:.9e}", self.mean_dpos)?;
        writeln!(f, "std_dpos = {:.9e}", self.std_dpos)?;
        writeln!(f, "mean_dvel = {:.9e}", self.mean_dvel)?;
        writeln!(f, "std_dvel = {:.9e}", self.std_dvel)?;
        writeln!(f, "n = {}", self.n)
    }
}

/// Mean and population standard deviation, two-pass.
fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Statistics of `a − b` in position and velocity.
pub fn compare(a: &Trajectory, b: &Trajectory) -> Result<ComparisonStats, HarnessError> {
    if a.len() != b.len() {
        return Err(HarnessError::LengthMismatch { a: a.len(), b: b.len() });
    }
    if a.is_empty() {
        return Err(HarnessError::TooFewSamples { needed: 1, got: 0 });
    }
    let mut dpos = Vec::with_capacity(a.len());
    let mut dvel = Vec::with_capacity(a.len());
    for (index, (sa, sb)) in a.samples().iter().zip(b.samples()).enumerate() {
        if (sa.t - sb.t).abs() > ALIGNMENT_TOL {
            return Err(HarnessError::Misaligned { index, a: sa.t, b: sb.t });
        }
        dpos.push(sa.state.theta - sb.state.theta);
        dvel.push(sa.state.omega - sb.state.omega);
    }
    let (mean_dpos, std_dpos) = mean_std(&dpos);
    let (mean_dvel, std_dvel) = mean_std(&dvel);
    Ok(ComparisonStats {
        mean_dpos,
        std_dpos,
        mean_dvel,
        std_dvel,
        n: a.len(),
    })
}
