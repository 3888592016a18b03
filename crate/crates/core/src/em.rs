//! EM-type joint LSFC/SSFC estimators used as comparison baselines, and the
//! conventional LSFC least-squares fit that assumes the SSFCs are known.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{CorrelationMatrix, LargeScaleParams, ReceivedBlock, SmallScaleRealization};
use crate::error::{CsiError, Result};
use crate::linalg::{CMat, CVec};
use crate::pilots::PilotMatrix;

/// Prior moments of `sqrt(beta)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmPrior {
    pub mean_sqrt_beta: Vec<f64>,
    pub cov_sqrt_beta: DMatrix<f64>,
}

impl EmPrior {
    pub fn new(mean_sqrt_beta: Vec<f64>, cov_sqrt_beta: DMatrix<f64>) -> Result<Self> {
        let k = mean_sqrt_beta.len();
        if cov_sqrt_beta.shape() != (k, k) {
            return Err(CsiError::DimensionMismatch(format!(
                "prior mean has {k} entries, covariance is {}x{}",
                cov_sqrt_beta.nrows(),
                cov_sqrt_beta.ncols()
            )));
        }
        if (&cov_sqrt_beta - cov_sqrt_beta.transpose()).norm() > 1e-12 * cov_sqrt_beta.norm().max(1e-300) {
            return Err(CsiError::InvalidParameter("prior covariance is not symmetric".into()));
        }
        let eig = cov_sqrt_beta.clone().symmetric_eigen();
        let scale = cov_sqrt_beta.norm();
        if eig.eigenvalues.iter().any(|&v| v < -1e-12 * scale) {
            return Err(CsiError::InvalidParameter("prior covariance is not PSD".into()));
        }
        Ok(Self {
            mean_sqrt_beta,
            cov_sqrt_beta,
        })
    }

    /// Moments of `sqrt(beta)` estimated from `n_samples` draws of the
    /// large-scale model. Users are i.i.d., so the covariance is `var * I_K`.
    pub fn monte_carlo<R: Rng + ?Sized>(params: &LargeScaleParams, k: usize, n_samples: usize, rng: &mut R) -> Result<Self> {
        if n_samples < 2 {
            return Err(CsiError::InvalidParameter("need at least two prior samples".into()));
        }
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..n_samples {
            let (d, s) = params.sample_user(rng);
            let r = params.beta_of(d, s).sqrt();
            sum += r;
            sum_sq += r * r;
        }
        let n = n_samples as f64;
        let mean = sum / n;
        let var = (sum_sq - n * mean * mean) / (n - 1.0);
        Self::new(vec![mean; k], DMatrix::identity(k, k) * var)
    }

    pub fn k(&self) -> usize {
        self.mean_sqrt_beta.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmVariant {
    /// Step 3 uses the exact Gram matrix `A^H A`.
    Em,
    /// Step 3 uses its large-array limit `Diag(M ||p_k||^2)`.
    Mem,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmOptions {
    pub max_iters: usize,
    pub variant: EmVariant,
    /// Stop when the largest relative change of `sqrt(beta)` falls below this.
    pub tol: f64,
}

impl EmOptions {
    pub fn new(variant: EmVariant) -> Self {
        Self {
            max_iters: 20,
            variant,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EmState {
    pub sqrt_beta_hat: Vec<f64>,
    pub h_hat: CMat,
    pub iteration: usize,
    /// `(1_T ⊗ H) ⊙ (P^T ⊗ 1_M)` for the current `h_hat`.
    pub a_matrix: CMat,
}

impl EmState {
    pub fn beta_hat(&self) -> Vec<f64> {
        self.sqrt_beta_hat.iter().map(|s| s * s).collect()
    }
}

/// Output of [`em_joint`]: final state and `beta_hat` after every iteration
/// (entry 0 is the initialization).
#[derive(Debug, Clone)]
pub struct EmRun {
    pub state: EmState,
    pub beta_trace: Vec<Vec<f64>>,
    pub converged: bool,
}

/// `A = (1_T ⊗ H) ⊙ (P^T ⊗ 1_M)`, an `MT x K` matrix with
/// `vec(H D(c) P) = A c`. Column `k` is `vec(h_k P[k, :])`.
pub fn khatri_rao_design(h: &CMat, pilots: &PilotMatrix) -> Result<CMat> {
    let (m, k) = h.shape();
    if pilots.k() != k {
        return Err(CsiError::DimensionMismatch(format!("H has {k} columns, {} pilots", pilots.k())));
    }
    let t = pilots.t();
    let p = pilots.p();
    Ok(CMat::from_fn(m * t, k, |row, col| {
        let (tt, i) = (row / m, row % m);
        h[(i, col)] * p[(col, tt)]
    }))
}

fn vec_of(y: &CMat) -> CVec {
    CVec::from_iterator(y.len(), y.iter().copied())
}

/// `(H^H H) ⊙ (P^* P^T)`, equal to `A^H A` without forming `A`.
pub fn design_gram(h: &CMat, pilots: &PilotMatrix) -> CMat {
    let hh = h.adjoint() * h;
    let pp = pilots.p().map(|v| v.conj()) * pilots.p().transpose();
    hh.component_mul(&pp)
}

/// `||A^H A - Diag(M ||p_k||^2)||_F / (M mean_k ||p_k||^2)`.
pub fn gram_deviation(h: &CMat, pilots: &PilotMatrix) -> f64 {
    let m = h.nrows() as f64;
    let mut g = design_gram(h, pilots);
    for (k, e) in pilots.energy().iter().enumerate() {
        g[(k, k)] -= Complex64::new(m * e, 0.0);
    }
    let mean_e = pilots.energy().iter().sum::<f64>() / pilots.k() as f64;
    g.norm() / (m * mean_e)
}

/// Real-parameter solve of a complex Hermitian system `G x = b`.
fn solve_real(g: DMatrix<f64>, b: DVector<f64>, what: &str) -> Result<Vec<f64>> {
    let lu = g.lu();
    lu.solve(&b)
        .filter(|x| x.iter().all(|v| v.is_finite()))
        .map(|x| x.iter().copied().collect())
        .ok_or_else(|| CsiError::Singular(what.into()))
}

/// Conventional LS fit of `sqrt(beta)` from `vec(Y) = A sqrt(beta) + vec(N)`
/// with the true SSFCs plugged into `A`. Returns `beta_hat = sqrt(beta_hat)^2`.
///
/// `sqrt(beta)` is real, so the real part of the normal equations is solved.
pub fn conventional_lsfc_ls(y: &ReceivedBlock, h_true: &SmallScaleRealization, pilots: &PilotMatrix) -> Result<Vec<f64>> {
    if y.m() != h_true.m() || y.t() != pilots.t() {
        return Err(CsiError::DimensionMismatch(format!(
            "Y is {}x{}, H has {} rows, pilots have {} symbols",
            y.m(),
            y.t(),
            h_true.m(),
            pilots.t()
        )));
    }
    let a = khatri_rao_design(&h_true.h, pilots)?;
    let gram = a.ad_mul(&a);
    let rhs = a.ad_mul(&vec_of(&y.y));
    let sqrt_beta = solve_real(gram.map(|v| v.re), rhs.map(|v| v.re), "A^H A is singular")?;
    Ok(sqrt_beta.iter().map(|s| s * s).collect())
}

/// EM / modified-EM joint estimation with a Gaussian prior on `sqrt(beta)`
/// and the users' correlation matrices known at the BS.
pub fn em_joint(
    y: &ReceivedBlock,
    pilots: &PilotMatrix,
    correlations: &[CorrelationMatrix],
    prior: &EmPrior,
    options: &EmOptions,
) -> Result<EmRun> {
    let k = pilots.k();
    let m = y.m();
    if correlations.len() != k || prior.k() != k || y.t() != pilots.t() {
        return Err(CsiError::DimensionMismatch(format!(
            "{} correlations, prior for {}, {} pilots",
            correlations.len(),
            prior.k(),
            k
        )));
    }
    if let Some(c) = correlations.iter().find(|c| c.dim() != m) {
        return Err(CsiError::DimensionMismatch(format!(
            "correlation is {}x{}, array has {m} antennas",
            c.dim(),
            c.dim()
        )));
    }
    let cov_inv = prior
        .cov_sqrt_beta
        .clone()
        .try_inverse()
        .ok_or_else(|| CsiError::Singular("prior covariance".into()))?;
    let matched: Vec<CVec> = (0..k).map(|kk| &y.y * pilots.pilot(kk)).collect();
    let vec_y = vec_of(&y.y);

    let mut sqrt_beta = prior.mean_sqrt_beta.clone();
    let mut h_hat = CMat::zeros(m, k);
    let mut trace = vec![sqrt_beta.iter().map(|s| s * s).collect::<Vec<_>>()];
    let mut a = khatri_rao_design(&h_hat, pilots)?;
    let mut converged = false;
    let mut iteration = 0;

    while iteration < options.max_iters {
        // Step 2: h_k = (Phi_k + ||p_k||^2 beta_k I)^{-1} sqrt(beta_k) Y p_k.
        for kk in 0..k {
            let beta_k = sqrt_beta[kk] * sqrt_beta[kk];
            let shift = pilots.energy()[kk] * beta_k;
            let eig = correlations[kk].eigen();
            if eig.values.iter().any(|&v| (v + shift).abs() < 1e-300) {
                return Err(CsiError::Singular(format!(
                    "Phi_{kk} + ||p||^2 beta I is singular at iteration {iteration}"
                )));
            }
            let col = eig.spectral_apply(|v| 1.0 / (v + shift), &matched[kk]) * Complex64::new(sqrt_beta[kk], 0.0);
            h_hat.set_column(kk, &col);
        }

        // Step 3: prior-regularized LS for sqrt(beta).
        a = khatri_rao_design(&h_hat, pilots)?;
        let prior_mean = DVector::from_column_slice(&prior.mean_sqrt_beta);
        let a_mean = &a * prior_mean.map(|v| Complex64::new(v, 0.0));
        let rhs = a.ad_mul(&(&vec_y - a_mean)).map(|v| v.re);
        let gram = match options.variant {
            EmVariant::Em => a.ad_mul(&a).map(|v| v.re),
            EmVariant::Mem => DMatrix::from_diagonal(&DVector::from_iterator(
                k,
                pilots.energy().iter().map(|e| m as f64 * e),
            )),
        };
        let update = solve_real(&cov_inv + gram, rhs, "regularized Step-3 system")?;
        let next: Vec<f64> = prior.mean_sqrt_beta.iter().zip(&update).map(|(mu, d)| mu + d).collect();

        let change = next
            .iter()
            .zip(&sqrt_beta)
            .map(|(n, o)| (n - o).abs() / o.abs().max(1e-300))
            .fold(0.0, f64::max);
        sqrt_beta = next;
        iteration += 1;
        trace.push(sqrt_beta.iter().map(|s| s * s).collect());
        if change < options.tol {
            converged = true;
            break;
        }
    }

    Ok(EmRun {
        state: EmState {
            sqrt_beta_hat: sqrt_beta,
            h_hat,
            iteration,
            a_matrix: a,
        },
        beta_trace: trace,
        converged,
    })
}
