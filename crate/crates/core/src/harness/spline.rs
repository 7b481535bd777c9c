//! Natural cubic spline resampling.

use super::HarnessError;
use crate::dynamics::State;
use crate::trajectory::{Sample, Trajectory};

pub const MIN_SPLINE_SAMPLES: usize = 4;

/// Interpolant with zero second derivative at both ends. Each span is stored
/// as a polynomial in the offset from its left knot, so a knot evaluates to
/// its own value exactly.
#[derive(Debug, Clone)]
pub struct NaturalCubicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
    d: Vec<f64>,
}

impl NaturalCubicSpline {
    pub fn new(x: &[f64], y: &[f64]) -> Result<Self, HarnessError> {
        let n = x.len();
        if n != y.len() {
            return Err(HarnessError::LengthMismatch { a: n, b: y.len() });
        }
        if n < 2 {
            return Err(HarnessError::TooFewSamples { needed: 2, got: n });
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) || x.iter().chain(y).any(|v| !v.is_finite()) {
            return Err(HarnessError::InvalidConfig(
                "spline knots must be finite and strictly increasing".into(),
            ));
        }
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let slope: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();

        // second derivatives M, with M[0] = M[n-1] = 0; Thomas algorithm on
        // the interior rows
        let mut m = vec![0.0; n];
        if n > 2 {
            let k = n - 2;
            let mut diag = vec![0.0; k];
            let mut rhs = vec![0.0; k];
            for i in 0..k {
                diag[i] = 2.0 * (h[i] + h[i + 1]);
                rhs[i] = 6.0 * (slope[i + 1] - slope[i]);
            }
            for i in 1..k {
                let w = h[i] / diag[i - 1];
                diag[i] -= w * h[i];
                rhs[i] -= w * rhs[i - 1];
            }
            m[k] = rhs[k - 1] / diag[k - 1];
            for i in (0..k - 1).rev() {
                m[i + 1] = (rhs[i] - h[i + 1] * m[i + 2]) / diag[i];
            }
        }

        let mut b = Vec::with_capacity(n - 1);
        let mut c = Vec::with_capacity(n - 1);
        let mut d = Vec::with_capacity(n - 1);
        for i in 0..n - 1 {
            b.push(slope[i] - h[i] * (2.0 * m[i] + m[i + 1]) / 6.0);
            c.push(m[i] / 2.0);
            d.push((m[i + 1] - m[i]) / (6.0 * h[i]));
        }
        Ok(NaturalCubicSpline {
            x: x.to_vec(),
            y: y.to_vec(),
            b,
            c,
            d,
        })
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.x[0], self.x[self.x.len() - 1])
    }

    pub fn eval(&self, t: f64) -> Result<f64, HarnessError> {
        let (lo, hi) = self.domain();
        if !(t >= lo && t <= hi) {
            return Err(HarnessError::OutOfRange { t, lo, hi });
        }
        let i = match self.x.binary_search_by(|k| k.total_cmp(&t)) {
            Ok(i) => return Ok(self.y[i]),
            Err(i) => i - 1,
        };
        let dx = t - self.x[i];
        Ok(self.y[i] + dx * (self.b[i] + dx * (self.c[i] + dx * self.d[i])))
    }
}

/// Times `t0, t0 + 1/rate, …` up to and including `t1` (within rounding).
pub fn uniform_grid(t0: f64, t1: f64, rate: f64) -> Result<Vec<f64>, HarnessError> {
    if !(rate > 0.0 && rate.is_finite() && t1 >= t0) {
        return Err(HarnessError::InvalidConfig(format!(
            "bad grid [{t0}, {t1}] at {rate} Hz"
        )));
    }
    let n = ((t1 - t0) * rate * (1.0 + 1e-12)).floor() as usize + 1;
    Ok((0..n).map(|k| (t0 + k as f64 / rate).min(t1)).collect())
}

/// Evaluates a natural spline through every channel at `target_times`.
pub fn resample_cubic(traj: &Trajectory, target_times: &[f64]) -> Result<Trajectory, HarnessError> {
    let n = traj.len();
    if n < MIN_SPLINE_SAMPLES {
        return Err(HarnessError::TooFewSamples {
            needed: MIN_SPLINE_SAMPLES,
            got: n,
        });
    }
    let times = traj.times();
    let channel = |f: fn(&Sample) -> f64| -> Result<NaturalCubicSpline, HarnessError> {
        let v: Vec<f64> = traj.samples().iter().map(f).collect();
        NaturalCubicSpline::new(&times, &v)
    };
    let theta = channel(|s| s.state.theta)?;
    let omega = channel(|s| s.state.omega)?;
    let u_control = channel(|s| s.u_control)?;
    let u_noise = channel(|s| s.u_noise)?;

    let dt = if target_times.len() > 1 {
        (target_times[target_times.len() - 1] - target_times[0]) / (target_times.len() - 1) as f64
    } else {
        traj.dt
    };
    let mut out = Trajectory::with_capacity(dt, format!("{}-resampled", traj.source), target_times.len());
    for &t in target_times {
        out.push(Sample {
            t,
            state: State::new(theta.eval(t)?, omega.eval(t)?),
            u_control: u_control.eval(t)?,
            u_noise: u_noise.eval(t)?,
        })?;
    }
    Ok(out)
}
