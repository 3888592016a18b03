//! Small-scale fading estimators: conventional LS and the two rank-reduced
//! estimators (plain basis, and steering-aligned basis with mean-AoA search).

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::basis::RrBasis;
use crate::channel::{steering_diag, ReceivedBlock};
use crate::error::{CsiError, Result};
use crate::linalg::{cis, CVec};

#[derive(Debug, Clone, PartialEq)]
pub struct SsfcEstimate {
    pub h_hat: CVec,
    /// Coefficients in the estimator's basis (the identity basis for LS).
    pub c_hat: CVec,
    /// Mean AoA used by the aligned estimator.
    pub phi_hat: Option<f64>,
    pub gamma_used: f64,
}

/// Coarse grid over `[-pi/2, pi/2]` plus golden-section refinement steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AoaSearchGrid {
    pub n_grid: usize,
    pub refine_iters: usize,
}

impl AoaSearchGrid {
    pub fn new(n_grid: usize, refine_iters: usize) -> Result<Self> {
        if n_grid < 16 {
            return Err(CsiError::InvalidParameter(format!(
                "AoA grid needs at least 16 points (got {n_grid})"
            )));
        }
        Ok(Self { n_grid, refine_iters })
    }

    fn point(&self, i: usize) -> f64 {
        -FRAC_PI_2 + std::f64::consts::PI * i as f64 / (self.n_grid - 1) as f64
    }
}

impl Default for AoaSearchGrid {
    /// 1° coarse spacing with 40 golden-section steps.
    fn default() -> Self {
        Self {
            n_grid: 181,
            refine_iters: 40,
        }
    }
}

/// `gamma = sqrt(beta) ||p||^2`; a non-positive LSFC is rejected.
pub fn gamma_from_lsfc(beta_hat: f64, pilot_energy: f64, user: usize) -> Result<f64> {
    if !(beta_hat > 0.0) {
        return Err(CsiError::NonPositiveLsfc { user, value: beta_hat });
    }
    Ok(beta_hat.sqrt() * pilot_energy)
}

/// `Y p`.
pub fn matched_output(y: &ReceivedBlock, p: &CVec) -> Result<CVec> {
    if y.t() != p.len() {
        return Err(CsiError::DimensionMismatch(format!(
            "Y has {} columns, pilot has {} symbols",
            y.t(),
            p.len()
        )));
    }
    Ok(&y.y * p)
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(CsiError::InvalidParameter(format!("gamma must be positive (got {gamma})")));
    }
    Ok(())
}

fn check_basis(basis: &RrBasis, m: usize) -> Result<()> {
    if basis.dim() != m {
        return Err(CsiError::DimensionMismatch(format!(
            "basis has {} rows, array has {m} antennas",
            basis.dim()
        )));
    }
    Ok(())
}

/// `h = Y p / gamma`.
pub fn conventional_ls(y: &ReceivedBlock, p: &CVec, gamma: f64) -> Result<SsfcEstimate> {
    check_gamma(gamma)?;
    let h_hat = matched_output(y, p)? / num_complex::Complex64::new(gamma, 0.0);
    Ok(SsfcEstimate {
        c_hat: h_hat.clone(),
        h_hat,
        phi_hat: None,
        gamma_used: gamma,
    })
}

/// `c = Q_m^H Y p / gamma`, `h = Q_m c`.
pub fn estimate_ssfc_i(y: &ReceivedBlock, p: &CVec, gamma_hat: f64, basis: &RrBasis) -> Result<SsfcEstimate> {
    check_gamma(gamma_hat)?;
    check_basis(basis, y.m())?;
    let yp = matched_output(y, p)?;
    let c_hat = basis.coefficients(&yp).unscale(gamma_hat);
    Ok(SsfcEstimate {
        h_hat: basis.synthesize(&c_hat),
        c_hat,
        phi_hat: None,
        gamma_used: gamma_hat,
    })
}

/// `||Q_m^H W^H(phi) Y p||^2`.
pub fn aoa_objective(yp: &CVec, basis: &RrBasis, spacing_wavelengths: f64, phi: f64) -> f64 {
    let step = 2.0 * std::f64::consts::PI * spacing_wavelengths * phi.sin();
    // W^H has entries exp(+j 2 pi (i-1) spacing sin phi).
    let aligned = CVec::from_iterator(yp.len(), yp.iter().enumerate().map(|(i, v)| v * cis(step * i as f64)));
    basis.q().ad_mul(&aligned).norm_squared()
}

/// Mean-AoA estimate maximizing [`aoa_objective`] given `Y p` directly.
pub fn aoa_search(yp: &CVec, basis: &RrBasis, spacing_wavelengths: f64, grid: &AoaSearchGrid) -> f64 {
    let f = |phi: f64| aoa_objective(yp, basis, spacing_wavelengths, phi);
    let mut best_i = 0;
    let mut best = f64::NEG_INFINITY;
    for i in 0..grid.n_grid {
        let v = f(grid.point(i));
        if v > best {
            best = v;
            best_i = i;
        }
    }
    let mut best_phi = grid.point(best_i);
    if grid.refine_iters == 0 {
        return best_phi;
    }
    let mut lo = grid.point(best_i.saturating_sub(1));
    let mut hi = grid.point((best_i + 1).min(grid.n_grid - 1));
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..grid.refine_iters {
        if f1 > best {
            best = f1;
            best_phi = x1;
        }
        if f2 > best {
            best = f2;
            best_phi = x2;
        }
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = f(x2);
        }
    }
    for (x, v) in [(x1, f1), (x2, f2)] {
        if v > best {
            best = v;
            best_phi = x;
        }
    }
    best_phi
}

/// Line search for the mean AoA over `[-pi/2, pi/2]`.
pub fn aoa_line_search(
    y: &ReceivedBlock,
    p: &CVec,
    basis: &RrBasis,
    spacing_wavelengths: f64,
    grid: &AoaSearchGrid,
) -> Result<f64> {
    check_basis(basis, y.m())?;
    let yp = matched_output(y, p)?;
    Ok(aoa_search(&yp, basis, spacing_wavelengths, grid))
}

/// `c = Q_m^H W^H(phi) Y p / gamma`, `h = W(phi) Q_m c`.
pub fn estimate_ssfc_ii(
    y: &ReceivedBlock,
    p: &CVec,
    gamma_hat: f64,
    basis: &RrBasis,
    phi_hat: f64,
    spacing_wavelengths: f64,
) -> Result<SsfcEstimate> {
    check_gamma(gamma_hat)?;
    check_basis(basis, y.m())?;
    let yp = matched_output(y, p)?;
    let w = steering_diag(y.m(), phi_hat, spacing_wavelengths);
    let c_hat = basis.coefficients(&w.apply_adjoint(&yp)).unscale(gamma_hat);
    Ok(SsfcEstimate {
        h_hat: w.apply(&basis.synthesize(&c_hat)),
        c_hat,
        phi_hat: Some(phi_hat),
        gamma_used: gamma_hat,
    })
}

/// Estimator II with the AoA found by [`aoa_line_search`].
pub fn estimate_ssfc_ii_search(
    y: &ReceivedBlock,
    p: &CVec,
    gamma_hat: f64,
    basis: &RrBasis,
    spacing_wavelengths: f64,
    grid: &AoaSearchGrid,
) -> Result<SsfcEstimate> {
    let phi = aoa_line_search(y, p, basis, spacing_wavelengths, grid)?;
    estimate_ssfc_ii(y, p, gamma_hat, basis, phi, spacing_wavelengths)
}
