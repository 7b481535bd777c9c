//! Linearization, Riccati solution and LQR synthesis for the two-state,
//! single-input pendulum model.
//!
//! The Riccati equation solved here is the standard continuous form
//!
//! ```text
//! AᵀX + XA − X·B·R⁻¹·Bᵀ·X + Q = 0,    K = R⁻¹·Bᵀ·X
//! ```
//!
//! using Newton–Kleinman iteration: every step solves a 2×2 Lyapunov
//! equation as a 3×3 linear system in the unknowns `(x11, x12, x22)`.

use std::cmp::Ordering;
use std::fmt::Write as _;

use nalgebra::{Complex, Matrix2, Matrix3, RowVector2, Vector2, Vector3};
use thiserror::Error;

use crate::dynamics::{self, PendulumParams, State};

/// Largest `|acceleration|` (rad/s²) accepted as an equilibrium.
pub const EQUILIBRIUM_TOL: f64 = 1e-9;
/// Newton–Kleinman iteration cap.
pub const MAX_ITERATIONS: usize = 100;
/// Successive iterates closer than this (max-abs, scaled by `1 + max|X|`) stop the iteration.
pub const STEP_TOL: f64 = 1e-12;
/// Largest accepted Frobenius norm of the Riccati residual.
pub const RESIDUAL_TOL: f64 = 1e-9;

/// Closed-loop poles used to seed Newton–Kleinman when `A` is not Hurwitz.
const SEED_POLES: (f64, f64) = (-1.0, -220.0);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinearError {
    #[error(
        "linearization point is not an equilibrium: velocity {velocity}, acceleration {acceleration} rad/s²"
    )]
    NotEquilibrium { velocity: f64, acceleration: f64 },
    #[error(transparent)]
    Dynamics(#[from] dynamics::DynamicsError),
    #[error("invalid cost matrices: {0}")]
    InvalidCost(String),
    #[error("(A, B) is not stabilizable")]
    NotStabilizable,
    #[error("Lyapunov step is singular at iteration {iteration}")]
    SingularLyapunov { iteration: usize },
    #[error("Riccati iteration did not converge in {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("dominant eigenvalue has non-negative real part {real}")]
    Unstable { real: f64 },
}

/// Linear model `ẋ = A·(x − x*) + B·(u − u*)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateSpace {
    pub a: Matrix2<f64>,
    pub b: Vector2<f64>,
    pub x_star: State,
    pub u_star: f64,
}

impl StateSpace {
    pub fn new(a: Matrix2<f64>, b: Vector2<f64>) -> Self {
        StateSpace {
            a,
            b,
            x_star: State::default(),
            u_star: 0.0,
        }
    }
}

/// Diagonal-or-full symmetric `Q ⪰ 0` and scalar `R > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostMatrices {
    pub q: Matrix2<f64>,
    pub r: f64,
}

impl CostMatrices {
    pub fn new(q: Matrix2<f64>, r: f64) -> Result<Self, LinearError> {
        if q.iter().any(|v| !v.is_finite()) || !r.is_finite() {
            return Err(LinearError::InvalidCost("non-finite entry".into()));
        }
        if q[(0, 1)] != q[(1, 0)] {
            return Err(LinearError::InvalidCost(format!(
                "Q is not symmetric: q12 = {}, q21 = {}",
                q[(0, 1)],
                q[(1, 0)]
            )));
        }
        // symmetric 2×2 is PSD iff both diagonal entries and the determinant are ≥ 0
        let scale = q.amax().max(f64::MIN_POSITIVE);
        let det = q[(0, 0)] * q[(1, 1)] - q[(0, 1)] * q[(1, 0)];
        if q[(0, 0)] < 0.0 || q[(1, 1)] < 0.0 || det < -1e-12 * scale * scale {
            return Err(LinearError::InvalidCost(format!(
                "Q is not positive semi-definite: {:?}",
                q.as_slice()
            )));
        }
        if r <= 0.0 {
            return Err(LinearError::InvalidCost(format!("R must be > 0, got {r}")));
        }
        Ok(CostMatrices { q, r })
    }

    pub fn diagonal(q11: f64, q22: f64, r11: f64) -> Result<Self, LinearError> {
        Self::new(Matrix2::new(q11, 0.0, 0.0, q22), r11)
    }

    /// The four weightings of the reference eigenvalue table, labelled `1`–`4`.
    pub fn reference_combinations() -> Vec<(String, CostMatrices)> {
        [(1.0, 0.01), (1.0, 0.1), (100.0, 0.01), (100.0, 0.1)]
            .iter()
            .enumerate()
            .map(|(i, &(q11, q22))| {
                let cost = CostMatrices::diagonal(q11, q22, 0.1).expect("valid reference weights");
                ((i + 1).to_string(), cost)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LqrSolution {
    pub x: Matrix2<f64>,
    /// State feedback gain; the control law is `u = −K·(x − x*)`.
    pub k: RowVector2<f64>,
    pub closed_loop_eigs: [Complex<f64>; 2],
    pub residual: f64,
    pub iterations: usize,
}

/// Jacobians of the pendulum about an equilibrium.
pub fn linearize(
    params: &PendulumParams,
    fp: State,
    u_star: f64,
) -> Result<StateSpace, LinearError> {
    params.validate()?;
    let acc = dynamics::acceleration(params, fp, u_star)?;
    if fp.omega.abs() > EQUILIBRIUM_TOL || acc.abs() > EQUILIBRIUM_TOL {
        return Err(LinearError::NotEquilibrium {
            velocity: fp.omega,
            acceleration: acc,
        });
    }
    let a21 = -params.g_c * fp.theta.cos() / params.m_c;
    let a22 = -params.b_c / params.m_c;
    Ok(StateSpace {
        a: Matrix2::new(0.0, 1.0, a21, a22),
        b: Vector2::new(0.0, 1.0 / params.m_c),
        x_star: fp,
        u_star,
    })
}

fn cmp_eig(x: &Complex<f64>, y: &Complex<f64>) -> Ordering {
    y.re.total_cmp(&x.re).then(y.im.total_cmp(&x.im))
}

/// Roots of `λ² − tr·λ + det`, sorted by descending real part, then
/// descending imaginary part.
pub fn eigenvalues_2x2(m: &Matrix2<f64>) -> [Complex<f64>; 2] {
    let tr = m[(0, 0)] + m[(1, 1)];
    let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    let half = 0.5 * tr;
    let disc = half * half - det;
    let mut eigs = if disc >= 0.0 {
        let s = disc.sqrt();
        // larger-magnitude root first, the other from Vieta to avoid cancellation
        let big = if half >= 0.0 { half + s } else { half - s };
        let small = if big != 0.0 { det / big } else { 0.0 };
        [Complex::new(big, 0.0), Complex::new(small, 0.0)]
    } else {
        let s = (-disc).sqrt();
        [Complex::new(half, s), Complex::new(half, -s)]
    };
    eigs.sort_by(cmp_eig);
    eigs
}

fn is_hurwitz(m: &Matrix2<f64>) -> bool {
    let tr = m[(0, 0)] + m[(1, 1)];
    let det = m.determinant();
    tr < 0.0 && det > 0.0
}

/// A gain making `A − B·K` Hurwitz, or `NotStabilizable`.
fn stabilizing_gain(a: &Matrix2<f64>, b: &Vector2<f64>) -> Result<RowVector2<f64>, LinearError> {
    if is_hurwitz(a) {
        return Ok(RowVector2::zeros());
    }
    let ab = a * b;
    let ctrb = Matrix2::from_columns(&[*b, ab]);
    let det = ctrb.determinant();
    let scale = b.norm() * ab.norm().max(b.norm());
    if scale > 0.0 && det.abs() > 1e-12 * scale {
        // Ackermann: K = [0 1]·C⁻¹·p(A)
        let (p1, p2) = SEED_POLES;
        let char_a = a * a - a * (p1 + p2) + Matrix2::identity() * (p1 * p2);
        let inv = ctrb.try_inverse().ok_or(LinearError::NotStabilizable)?;
        return Ok(RowVector2::new(0.0, 1.0) * inv * char_a);
    }
    let bb = b.dot(b);
    if bb == 0.0 {
        return Err(LinearError::NotStabilizable);
    }
    // rank-one controllability: b is an eigenvector of A with eigenvalue mu,
    // the other eigenvalue tr(A) − mu cannot be moved
    let mu = b.dot(&ab) / bb;
    let fixed = a.trace() - mu;
    if fixed >= 0.0 {
        return Err(LinearError::NotStabilizable);
    }
    Ok(b.transpose() * ((mu + 1.0) / bb))
}

/// Solves `AcᵀX + X·Ac + W = 0` for symmetric `X`.
fn solve_lyapunov(ac: &Matrix2<f64>, w: &Matrix2<f64>) -> Option<Matrix2<f64>> {
    let (a, b, c, d) = (ac[(0, 0)], ac[(0, 1)], ac[(1, 0)], ac[(1, 1)]);
    let m = Matrix3::new(
        2.0 * a, 2.0 * c, 0.0, //
        b, a + d, c, //
        0.0, 2.0 * b, 2.0 * d,
    );
    let rhs = -Vector3::new(w[(0, 0)], 0.5 * (w[(0, 1)] + w[(1, 0)]), w[(1, 1)]);
    let sol = m.lu().solve(&rhs)?;
    if sol.iter().any(|v| !v.is_finite()) {
        return None;
    }
    Some(Matrix2::new(sol[0], sol[1], sol[1], sol[2]))
}

/// Frobenius norm of `AᵀX + XA − X·B·R⁻¹·Bᵀ·X + Q`.
pub fn care_residual(ss: &StateSpace, cost: &CostMatrices, x: &Matrix2<f64>) -> f64 {
    let a = &ss.a;
    let xb = x * ss.b;
    let res = a.transpose() * x + x * a - xb * xb.transpose() / cost.r + cost.q;
    res.norm()
}

/// Stabilizing solution of the continuous algebraic Riccati equation.
pub fn solve_care(ss: &StateSpace, cost: &CostMatrices) -> Result<Matrix2<f64>, LinearError> {
    solve_care_counted(ss, cost).map(|(x, _)| x)
}

fn solve_care_counted(
    ss: &StateSpace,
    cost: &CostMatrices,
) -> Result<(Matrix2<f64>, usize), LinearError> {
    let mut k = stabilizing_gain(&ss.a, &ss.b)?;
    let mut prev: Option<Matrix2<f64>> = None;
    let mut x = Matrix2::zeros();
    for iteration in 1..=MAX_ITERATIONS {
        let ac = ss.a - ss.b * k;
        let w = cost.q + k.transpose() * k * cost.r;
        x = solve_lyapunov(&ac, &w).ok_or(LinearError::SingularLyapunov { iteration })?;
        k = ss.b.transpose() * x / cost.r;
        if let Some(p) = prev {
            let step = (x - p).amax();
            if step <= STEP_TOL * (1.0 + x.amax()) {
                let residual = care_residual(ss, cost, &x);
                if residual > RESIDUAL_TOL {
                    return Err(LinearError::NonConvergence {
                        iterations: iteration,
                        residual,
                    });
                }
                return Ok((x, iteration));
            }
        }
        prev = Some(x);
    }
    Err(LinearError::NonConvergence {
        iterations: MAX_ITERATIONS,
        residual: care_residual(ss, cost, &x),
    })
}

/// `A − B·K`.
pub fn closed_loop(ss: &StateSpace, k: &RowVector2<f64>) -> Matrix2<f64> {
    ss.a - ss.b * k
}

pub fn lqr_gain(ss: &StateSpace, cost: &CostMatrices) -> Result<LqrSolution, LinearError> {
    let (x, iterations) = solve_care_counted(ss, cost)?;
    let k = ss.b.transpose() * x / cost.r;
    let closed_loop_eigs = eigenvalues_2x2(&closed_loop(ss, &k));
    if closed_loop_eigs[0].re >= 0.0 {
        return Err(LinearError::Unstable {
            real: closed_loop_eigs[0].re,
        });
    }
    Ok(LqrSolution {
        residual: care_residual(ss, cost, &x),
        x,
        k,
        closed_loop_eigs,
        iterations,
    })
}

/// `1/|Re λ|` of the slowest (largest real part) eigenvalue.
pub fn time_constant(eigs: &[Complex<f64>; 2]) -> Result<f64, LinearError> {
    let dominant = eigs.iter().map(|e| e.re).fold(f64::NEG_INFINITY, f64::max);
    if dominant >= 0.0 {
        return Err(LinearError::Unstable { real: dominant });
    }
    Ok(1.0 / dominant.abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Feedback {
    OpenLoop,
    Lqr,
}

impl Feedback {
    pub fn as_str(&self) -> &'static str {
        match self {
            Feedback::OpenLoop => "open-loop",
            Feedback::Lqr => "lqr",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityRow {
    pub label: String,
    pub feedback: Feedback,
    pub cost: Option<CostMatrices>,
    pub eigenvalues: Result<[Complex<f64>; 2], LinearError>,
    pub gain: Option<RowVector2<f64>>,
    pub residual: Option<f64>,
}

/// Open-loop eigenvalues followed by one closed-loop row per weighting.
pub fn stability_report(ss: &StateSpace, combos: &[(String, CostMatrices)]) -> Vec<StabilityRow> {
    let mut rows = Vec::with_capacity(combos.len() + 1);
    rows.push(StabilityRow {
        label: "0".into(),
        feedback: Feedback::OpenLoop,
        cost: None,
        eigenvalues: Ok(eigenvalues_2x2(&ss.a)),
        gain: None,
        residual: None,
    });
    for (label, cost) in combos {
        let sol = lqr_gain(ss, cost);
        rows.push(StabilityRow {
            label: label.clone(),
            feedback: Feedback::Lqr,
            cost: Some(*cost),
            gain: sol.as_ref().ok().map(|s| s.k),
            residual: sol.as_ref().ok().map(|s| s.residual),
            eigenvalues: sol.map(|s| s.closed_loop_eigs),
        });
    }
    rows
}

pub const STABILITY_CSV_HEADER: &str =
    "label,feedback,q11,q12,q21,q22,r11,eig1_re,eig1_im,eig2_re,eig2_im";

/// Renders a report in the eigenvalue-table CSV layout. Failed rows carry
/// `nan` eigenvalues; open-loop rows carry `-` weights.
pub fn stability_csv(rows: &[StabilityRow]) -> String {
    let mut out = String::new();
    out.push_str(STABILITY_CSV_HEADER);
    out.push('\n');
    for row in rows {
        let weights = match &row.cost {
            Some(c) => format!(
                "{},{},{},{},{}",
                c.q[(0, 0)],
                c.q[(0, 1)],
                c.q[(1, 0)],
                c.q[(1, 1)],
                c.r
            ),
            None => "-,-,-,-,-".to_string(),
        };
        let eigs = match &row.eigenvalues {
            Ok([e1, e2]) => format!("{:.6},{:.6},{:.6},{:.6}", e1.re, e1.im, e2.re, e2.im),
            Err(_) => "nan,nan,nan,nan".to_string(),
        };
        let _ = writeln!(out, "{},{},{},{}", row.label, row.feedback.as_str(), weights, eigs);
    }
    out
}
