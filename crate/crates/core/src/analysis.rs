//! Closed-form MSE predictors for the rank-reduced estimators, NMSE metrics
//! and convergence-rate diagnostics.

use crate::basis::RrBasis;
use crate::channel::{CorrelationMatrix, SteeringDiagonal};
use crate::error::{CsiError, Result};
use crate::linalg::{CMat, CVec};

/// Predicted MSE of a rank-reduced SSFC estimate with known `gamma` and fixed AoA.
#[derive(Debug, Clone, PartialEq)]
pub struct TheoryMse {
    pub variance: f64,
    pub bias: f64,
    pub total: f64,
    /// Diagonal of `D_m`: zeros for the retained columns, ones for the rest.
    pub d_m: Vec<f64>,
}

/// `m / (beta ||p||^2)`.
pub fn theoretical_variance(m: usize, beta: f64, pilot_energy: f64) -> Result<f64> {
    if m == 0 || !(beta > 0.0) || !(pilot_energy > 0.0) {
        return Err(CsiError::InvalidParameter(format!(
            "variance needs m > 0, beta > 0, ||p||^2 > 0 (got {m}, {beta}, {pilot_energy})"
        )));
    }
    Ok(m as f64 / (beta * pilot_energy))
}

fn aligned(phi: &CorrelationMatrix, w: Option<&SteeringDiagonal>) -> Result<CMat> {
    match w {
        Some(w) if w.m() != phi.dim() => Err(CsiError::DimensionMismatch(format!(
            "steering has {} entries, correlation is {}x{}",
            w.m(),
            phi.dim(),
            phi.dim()
        ))),
        Some(w) => Ok(w.align(phi.phi())),
        None => Ok(phi.phi().clone()),
    }
}

/// Diagonal of `Q^H A Q` for a full parent `Q`.
fn parent_diagonal(parent: &CMat, a: &CMat) -> Vec<f64> {
    let aq = a * parent;
    (0..parent.ncols())
        .map(|j| parent.column(j).dotc(&aq.column(j)).re)
        .collect()
}

/// `sum_{j>m} q_j^H W^H Phi W q_j` over the parent's discarded columns.
/// Without a steering diagonal this is the estimator-I bias.
pub fn theoretical_bias(basis: &RrBasis, phi: &CorrelationMatrix, w: Option<&SteeringDiagonal>) -> Result<f64> {
    let parent = basis.parent();
    if parent.nrows() != parent.ncols() {
        return Err(CsiError::MissingParentBasis(format!(
            "parent is {}x{}, expected square",
            parent.nrows(),
            parent.ncols()
        )));
    }
    if parent.nrows() != phi.dim() {
        return Err(CsiError::DimensionMismatch(format!(
            "basis has {} rows, correlation is {}x{}",
            parent.nrows(),
            phi.dim(),
            phi.dim()
        )));
    }
    let a = aligned(phi, w)?;
    let discarded = parent.columns(basis.m(), parent.ncols() - basis.m());
    let proj = discarded.ad_mul(&(a * discarded));
    Ok(proj.trace().re.max(0.0))
}

pub fn theoretical_mse(
    m: usize,
    beta: f64,
    pilot_energy: f64,
    basis: &RrBasis,
    phi: &CorrelationMatrix,
    w: Option<&SteeringDiagonal>,
) -> Result<TheoryMse> {
    if basis.m() != m {
        return Err(CsiError::InvalidParameter(format!(
            "basis has order {}, asked for {m}",
            basis.m()
        )));
    }
    let variance = theoretical_variance(m, beta, pilot_energy)?;
    let bias = theoretical_bias(basis, phi, w)?;
    let d_m = (0..basis.dim()).map(|j| if j < m { 0.0 } else { 1.0 }).collect();
    Ok(TheoryMse {
        variance,
        bias,
        total: variance + bias,
        d_m,
    })
}

/// Total predicted MSE for every order `m = 1..=M` (index `m - 1`).
pub fn theory_mse_curve(parent: &CMat, aligned_phi: &CMat, beta: f64, pilot_energy: f64) -> Result<Vec<f64>> {
    if !(beta > 0.0) || !(pilot_energy > 0.0) {
        return Err(CsiError::InvalidParameter("beta and ||p||^2 must be positive".into()));
    }
    if parent.shape() != aligned_phi.shape() || parent.nrows() != parent.ncols() {
        return Err(CsiError::DimensionMismatch(format!(
            "parent {:?} vs correlation {:?}",
            parent.shape(),
            aligned_phi.shape()
        )));
    }
    let diag = parent_diagonal(parent, aligned_phi);
    let mut bias: f64 = diag.iter().sum();
    Ok(diag
        .iter()
        .enumerate()
        .map(|(j, d)| {
            bias -= d;
            (j + 1) as f64 / (beta * pilot_energy) + bias.max(0.0)
        })
        .collect())
}

/// Order minimizing a curve indexed by `m - 1`; the smallest order wins ties.
pub fn optimal_order(curve: &[f64]) -> Option<usize> {
    curve
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_finite())
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i + 1)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NmseReport {
    pub nmse_ssfc: f64,
    pub nmse_lsfc_db: f64,
    pub failure_rate: f64,
}

/// Squared dB error `(10 log10(beta_hat / beta))^2`, `None` if `beta_hat <= 0`.
pub fn lsfc_db_sq_error(beta_hat: f64, beta: f64) -> Option<f64> {
    (beta_hat > 0.0 && beta > 0.0).then(|| {
        let e = 10.0 * (beta_hat / beta).log10();
        e * e
    })
}

/// `||h_hat - h||^2 / (M * entry_variance)`.
pub fn ssfc_normalized_error(h_hat: &CVec, h: &CVec, entry_variance: f64) -> f64 {
    (h_hat - h).norm_squared() / (h.len() as f64 * entry_variance)
}

/// SSFC NMSE over `(estimate, truth)` pairs.
pub fn nmse_ssfc(pairs: &[(CVec, CVec)], entry_variance: f64) -> Result<f64> {
    if pairs.is_empty() {
        return Err(CsiError::InvalidParameter("no SSFC samples".into()));
    }
    if !(entry_variance > 0.0) {
        return Err(CsiError::InvalidParameter("entry variance must be positive".into()));
    }
    let mut acc = 0.0;
    for (est, truth) in pairs {
        if est.len() != truth.len() {
            return Err(CsiError::DimensionMismatch(format!(
                "estimate has {} entries, truth {}",
                est.len(),
                truth.len()
            )));
        }
        acc += ssfc_normalized_error(est, truth, entry_variance);
    }
    Ok(acc / pairs.len() as f64)
}

/// dB-domain LSFC NMSE and the fraction of non-positive estimates. Failed
/// estimates are excluded from the error average.
pub fn nmse_lsfc_db(pairs: &[(f64, f64)], beta_db_variance: f64) -> Result<(f64, f64)> {
    if pairs.is_empty() {
        return Err(CsiError::InvalidParameter("no LSFC samples".into()));
    }
    if !(beta_db_variance > 0.0) {
        return Err(CsiError::InvalidParameter("Var{10 log10 beta} must be positive".into()));
    }
    let mut acc = 0.0;
    let mut ok = 0usize;
    for &(est, truth) in pairs {
        if let Some(e) = lsfc_db_sq_error(est, truth) {
            acc += e;
            ok += 1;
        }
    }
    let failure_rate = (pairs.len() - ok) as f64 / pairs.len() as f64;
    let nmse = if ok == 0 { f64::INFINITY } else { acc / ok as f64 / beta_db_variance };
    Ok((nmse, failure_rate))
}

pub fn nmse_metrics(
    ssfc_pairs: &[(CVec, CVec)],
    lsfc_pairs: &[(f64, f64)],
    ssfc_entry_variance: f64,
    beta_db_variance: f64,
) -> Result<NmseReport> {
    let nmse_ssfc = nmse_ssfc(ssfc_pairs, ssfc_entry_variance)?;
    let (nmse_lsfc_db, failure_rate) = nmse_lsfc_db(lsfc_pairs, beta_db_variance)?;
    Ok(NmseReport {
        nmse_ssfc,
        nmse_lsfc_db,
        failure_rate,
    })
}

/// `||(1/M) H^H H - I_K||_F`.
pub fn hardening_deviation(h: &CMat) -> f64 {
    let m = h.nrows() as f64;
    let k = h.ncols();
    (h.ad_mul(h).unscale(m) - CMat::identity(k, k)).norm()
}

/// `|p^H A p - tr A| / M`.
pub fn quadratic_form_deviation(p: &CVec, a: &CMat) -> f64 {
    (p.dotc(&(a * p)) - a.trace()).norm() / p.len() as f64
}

/// `|p^H A q| / M`.
pub fn bilinear_form_magnitude(p: &CVec, a: &CMat, q: &CVec) -> f64 {
    p.dotc(&(a * q)).norm() / p.len() as f64
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(CsiError::InvalidParameter("slope needs at least two matched points".into()));
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0)) {
        return Err(CsiError::InvalidParameter("log-log slope needs positive data".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(CsiError::InvalidParameter("all abscissae are equal".into()));
    }
    Ok(sxy / sxx)
}
