//! Large-scale fading coefficient estimation that needs no small-scale
//! channel knowledge.
//!
//! With `M` antennas and orthogonal pilots, `Y^H Y / M - I_T` concentrates on
//! `P^H D_beta P`, so each user's coefficient is read off directly:
//!
//! ```text
//! beta_k = (p_k^H Y^H Y p_k - M ||p_k||^2) / (M ||p_k||^4)
//! ```
//!
//! Estimates can be negative for short arrays or low SNR; they are reported
//! unclamped.

use num_complex::Complex64;

use crate::channel::ReceivedBlock;
use crate::error::{CsiError, Result};
use crate::linalg::{CMat, CVec};
use crate::pilots::PilotMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct LsfcEstimate {
    pub beta_hat: Vec<f64>,
    pub blocks_used: usize,
}

impl LsfcEstimate {
    /// `true` when every coefficient is strictly positive.
    pub fn all_positive(&self) -> bool {
        self.beta_hat.iter().all(|&b| b > 0.0)
    }
}

fn check(y: &CMat, pilots: &PilotMatrix, m: usize) -> Result<()> {
    if y.nrows() != m || y.ncols() != pilots.t() {
        return Err(CsiError::DimensionMismatch(format!(
            "Y is {}x{}, expected {}x{}",
            y.nrows(),
            y.ncols(),
            m,
            pilots.t()
        )));
    }
    if pilots.energy().iter().any(|&e| !(e > 0.0)) {
        return Err(CsiError::InvalidPilot("zero pilot energy".into()));
    }
    Ok(())
}

/// Single-block estimate in element-wise form.
pub fn estimate_lsfc(y: &ReceivedBlock, pilots: &PilotMatrix, m: usize) -> Result<LsfcEstimate> {
    estimate_lsfc_multi(std::slice::from_ref(y), pilots, m)
}

/// `J`-block estimate: the Gram matrices of all blocks are averaged.
pub fn estimate_lsfc_multi(blocks: &[ReceivedBlock], pilots: &PilotMatrix, m: usize) -> Result<LsfcEstimate> {
    if blocks.is_empty() {
        return Err(CsiError::InvalidParameter("no received blocks".into()));
    }
    for b in blocks {
        check(&b.y, pilots, m)?;
    }
    let j = blocks.len() as f64;
    let mf = m as f64;
    let beta_hat = (0..pilots.k())
        .map(|k| {
            let p = pilots.pilot(k);
            let e = pilots.energy()[k];
            let stat: f64 = blocks.iter().map(|b| (&b.y * &p).norm_squared()).sum();
            (stat - mf * j * e) / (mf * j * e * e)
        })
        .collect();
    Ok(LsfcEstimate {
        beta_hat,
        blocks_used: blocks.len(),
    })
}

/// The same estimator written as the least-squares fit of
/// `vec(Y^H Y / M - I_T)` with the Khatri–Rao style pilot operator.
/// Kept as an independent route for cross-checking the element-wise form.
pub fn estimate_lsfc_matrix_form(y: &ReceivedBlock, pilots: &PilotMatrix, m: usize) -> Result<LsfcEstimate> {
    check(&y.y, pilots, m)?;
    let t = pilots.t();
    let k = pilots.k();
    let p = pilots.p();
    let mut g = y.y.adjoint() * &y.y / Complex64::new(m as f64, 0.0);
    for i in 0..t {
        g[(i, i)] -= Complex64::new(1.0, 0.0);
    }
    // vec() is column-major: entry (row b, col a) sits at a*T + b.
    let vec_g = CVec::from_iterator(t * t, g.iter().copied());
    // (1_T^T ⊗ P) ⊙ (P^* ⊗ 1_T^T): column a*T + b holds P[k,b] * conj(P[k,a]).
    let op = CMat::from_fn(k, t * t, |row, col| {
        let (a, b) = (col / t, col % t);
        p[(row, b)] * p[(row, a)].conj()
    });
    let fitted = op * vec_g;
    let beta_hat = (0..k)
        .map(|row| fitted[row].re / pilots.energy()[row].powi(2))
        .collect();
    Ok(LsfcEstimate {
        beta_hat,
        blocks_used: 1,
    })
}

/// Error split `beta_hat - beta = r1 + r2 + r3` (noise-only, channel
/// hardening and cross terms). Simulation-only: needs the true channel and noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LsfcErrorTerms {
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
}

impl LsfcErrorTerms {
    pub fn total(&self) -> f64 {
        self.r1 + self.r2 + self.r3
    }
}

pub fn lsfc_error_decomposition(
    h_k: &CVec,
    beta_k: f64,
    noise: &CMat,
    pilots: &PilotMatrix,
    k: usize,
) -> Result<LsfcErrorTerms> {
    let m = h_k.len();
    if noise.nrows() != m || noise.ncols() != pilots.t() || k >= pilots.k() {
        return Err(CsiError::DimensionMismatch(format!(
            "h has {m} entries, N is {}x{}, {} pilots, user {k}",
            noise.nrows(),
            noise.ncols(),
            pilots.k()
        )));
    }
    let mf = m as f64;
    let p = pilots.pilot(k);
    let e = pilots.energy()[k];
    let np = noise * &p;
    let r1 = (np.norm_squared() - mf * e) / (mf * e * e);
    let r2 = beta_k * (h_k.norm_squared() - mf) / mf;
    let r3 = beta_k.sqrt() * 2.0 * h_k.dotc(&np).re / (mf * e);
    Ok(LsfcErrorTerms { r1, r2, r3 })
}
