//! Ordinary least squares by Householder QR with column pivoting on a
//! column-equilibrated design.

use nalgebra::{DMatrix, DVector};

use super::SysidError;

/// Pivots smaller than this fraction of the largest one mark rank deficiency.
pub const RANK_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct OlsFit {
    pub coefficients: Vec<f64>,
    pub r_squared: f64,
    pub residual_std: f64,
    pub ss_res: f64,
    pub ss_tot: f64,
    pub n_samples: usize,
}

/// Minimizes `‖y − X·β‖²`.
///
/// `r_squared` uses the centered total sum of squares when the design has a
/// constant column and the uncentered one otherwise. When that total is
/// zero the fit reports 1 for a perfect fit and 0 otherwise.
pub fn ols(design: &DMatrix<f64>, y: &DVector<f64>) -> Result<OlsFit, SysidError> {
    let (n, p) = design.shape();
    if y.len() != n {
        return Err(SysidError::InsufficientData(format!(
            "design has {n} rows but y has {}",
            y.len()
        )));
    }
    if p == 0 || n <= p {
        return Err(SysidError::InsufficientData(format!(
            "need more samples than terms, got {n} samples for {p} terms"
        )));
    }
    if design.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(SysidError::InsufficientData("non-finite regression input".into()));
    }

    // unit-norm columns so the rank test does not depend on units
    let scale: Vec<f64> = design.column_iter().map(|c| c.norm()).collect();
    if scale.contains(&0.0) {
        return Err(SysidError::Singular("design matrix has an all-zero column".into()));
    }
    let mut a = design.clone();
    for (k, s) in scale.iter().enumerate() {
        a.column_mut(k).unscale_mut(*s);
    }
    let mut qty = y.clone();
    let mut perm: Vec<usize> = (0..p).collect();
    let mut diag = vec![0.0; p];

    for j in 0..p {
        let (pivot, _) = (j..p)
            .map(|k| (k, a.column(k).rows(j, n - j).norm_squared()))
            .fold((j, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if pivot != j {
            a.swap_columns(j, pivot);
            perm.swap(j, pivot);
        }
        let norm = a.column(j).rows(j, n - j).norm();
        if norm == 0.0 {
            diag[j] = 0.0;
            continue;
        }
        let alpha = if a[(j, j)] > 0.0 { -norm } else { norm };
        let mut v = a.column(j).rows(j, n - j).clone_owned();
        v[0] -= alpha;
        let vv = v.norm_squared();
        for k in j..p {
            let mut col = a.column_mut(k);
            let mut col = col.rows_mut(j, n - j);
            let s = 2.0 * v.dot(&col) / vv;
            col.axpy(-s, &v, 1.0);
        }
        let mut tail = qty.rows_mut(j, n - j);
        let s = 2.0 * v.dot(&tail) / vv;
        tail.axpy(-s, &v, 1.0);
        diag[j] = alpha;
    }

    let largest = diag.iter().fold(0.0_f64, |m, d| m.max(d.abs()));
    let smallest = diag.iter().fold(f64::INFINITY, |m, d| m.min(d.abs()));
    if largest == 0.0 || smallest < RANK_TOL * largest {
        return Err(SysidError::Singular(format!(
            "design matrix is rank deficient (pivot ratio {:e})",
            if largest == 0.0 { 0.0 } else { smallest / largest }
        )));
    }

    // back substitution on the pivoted triangle
    let mut beta_piv = vec![0.0; p];
    for i in (0..p).rev() {
        let mut acc = qty[i];
        for (k, b) in beta_piv.iter().enumerate().skip(i + 1) {
            acc -= a[(i, k)] * b;
        }
        beta_piv[i] = acc / diag[i];
    }
    let mut coefficients = vec![0.0; p];
    for (j, &col) in perm.iter().enumerate() {
        coefficients[col] = beta_piv[j] / scale[col];
    }

    let beta = DVector::from_column_slice(&coefficients);
    let resid = y - design * &beta;
    let ss_res = resid.norm_squared();
    let has_constant = (0..p).any(|k| {
        let c = design.column(k);
        c[0] != 0.0 && c.iter().all(|v| *v == c[0])
    });
    let ss_tot = if has_constant {
        let mean = y.mean();
        y.iter().map(|v| (v - mean).powi(2)).sum()
    } else {
        y.norm_squared()
    };
    let r_squared = if ss_tot == 0.0 {
        if ss_res == 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    };

    Ok(OlsFit {
        coefficients,
        r_squared,
        residual_std: (ss_res / (n - p) as f64).sqrt(),
        ss_res,
        ss_tot,
        n_samples: n,
    })
}
