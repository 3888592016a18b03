//! Uplink channel generation: large-scale fading, BS-side spatial
//! correlation, small-scale fading and received pilot blocks.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{CsiError, Result};
use crate::linalg::{cis, hermitian_defect, hermitianize, CMat, CVec, HermitianEigen, EIGEN_CLAMP};
use crate::pilots::PilotMatrix;
use crate::quadrature;
use crate::rng::{complex_normal, StreamKey};

/// Antenna count `m`, user count `k`, pilot length `t` and coherence blocks `j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemDims {
    pub m: usize,
    pub k: usize,
    pub t: usize,
    pub j: usize,
}

impl SystemDims {
    pub fn new(m: usize, k: usize, t: usize, j: usize) -> Result<Self> {
        let dims = Self { m, k, t, j };
        dims.validate()?;
        Ok(dims)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.j == 0 || self.t < self.k || self.m < self.t {
            return Err(CsiError::InvalidDims(format!(
                "need M >= T >= K >= 1 and J >= 1, got M={} T={} K={} J={}",
                self.m, self.t, self.k, self.j
            )));
        }
        Ok(())
    }
}

impl Default for SystemDims {
    fn default() -> Self {
        Self {
            m: 100,
            k: 8,
            t: 8,
            j: 1,
        }
    }
}

/// Pathloss exponent, log-normal shadowing and cell geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LargeScaleParams {
    pub alpha: f64,
    pub sigma_s_db: f64,
    pub cell_radius: f64,
    /// Users closer than this are not placed, which bounds `beta`.
    pub min_distance: f64,
}

impl LargeScaleParams {
    pub fn new(alpha: f64, sigma_s_db: f64, cell_radius: f64) -> Result<Self> {
        let params = Self {
            alpha,
            sigma_s_db,
            cell_radius,
            min_distance: 1.0,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if !(self.alpha > 2.0) || !self.alpha.is_finite() {
            bad.push(format!("alpha must exceed 2 (got {})", self.alpha));
        }
        if !(self.sigma_s_db >= 0.0) || !self.sigma_s_db.is_finite() {
            bad.push(format!("sigma_s_db must be >= 0 (got {})", self.sigma_s_db));
        }
        if !(self.min_distance > 0.0) || !(self.cell_radius > self.min_distance) {
            bad.push(format!(
                "need 0 < min_distance < cell_radius (got {} and {})",
                self.min_distance, self.cell_radius
            ));
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(CsiError::InvalidParameter(bad.join("; ")))
        }
    }

    /// Draws one user: area-uniform distance on the annulus
    /// `[min_distance, cell_radius]` and a shadowing value in dB.
    pub fn sample_user<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        let r0 = self.min_distance * self.min_distance;
        let r1 = self.cell_radius * self.cell_radius;
        let u: f64 = rng.random();
        let d = (r0 + u * (r1 - r0)).sqrt();
        let shadow = if self.sigma_s_db > 0.0 {
            Normal::new(0.0, self.sigma_s_db)
                .expect("validated sigma")
                .sample(rng)
        } else {
            0.0
        };
        (d, shadow)
    }

    pub fn beta_of(&self, distance: f64, shadow_db: f64) -> f64 {
        10f64.powf(shadow_db / 10.0) * distance.powf(-self.alpha)
    }

    /// `Var{10 log10 beta}` in dB², evaluated in closed form for the
    /// area-uniform distance law plus independent shadowing.
    pub fn beta_db_variance(&self) -> f64 {
        // ln d = (1/2) ln X with X uniform on [a, b].
        let a = self.min_distance * self.min_distance;
        let b = self.cell_radius * self.cell_radius;
        let first = |x: f64| x * x.ln() - x;
        let second = |x: f64| x * (x.ln().powi(2) - 2.0 * x.ln() + 2.0);
        let mean = (first(b) - first(a)) / (b - a);
        let mean_sq = (second(b) - second(a)) / (b - a);
        let var_ln_d = 0.25 * (mean_sq - mean * mean);
        let slope = 10.0 * self.alpha / std::f64::consts::LN_10;
        self.sigma_s_db.powi(2) + slope * slope * var_ln_d
    }
}

impl Default for LargeScaleParams {
    fn default() -> Self {
        Self {
            alpha: 3.0,
            sigma_s_db: 10.0,
            cell_radius: 100.0,
            min_distance: 1.0,
        }
    }
}

/// Per-user large-scale fading coefficients with the geometry that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct LargeScaleRealization {
    pub beta: Vec<f64>,
    pub distances: Vec<f64>,
    pub shadow_db: Vec<f64>,
}

impl LargeScaleRealization {
    pub fn from_geometry(distances: Vec<f64>, shadow_db: Vec<f64>, alpha: f64) -> Result<Self> {
        if distances.len() != shadow_db.len() {
            return Err(CsiError::DimensionMismatch(format!(
                "{} distances vs {} shadowing values",
                distances.len(),
                shadow_db.len()
            )));
        }
        if distances.iter().any(|&d| !(d > 0.0)) {
            return Err(CsiError::InvalidParameter("distances must be positive".into()));
        }
        let beta = distances
            .iter()
            .zip(&shadow_db)
            .map(|(&d, &s)| 10f64.powf(s / 10.0) * d.powf(-alpha))
            .collect();
        Ok(Self {
            beta,
            distances,
            shadow_db,
        })
    }

    /// Known coefficients without geometry (distance 1, shadowing carries `beta`).
    pub fn from_beta(beta: Vec<f64>) -> Self {
        let shadow_db = beta.iter().map(|b| 10.0 * b.log10()).collect();
        Self {
            distances: vec![1.0; beta.len()],
            beta,
            shadow_db,
        }
    }

    pub fn k(&self) -> usize {
        self.beta.len()
    }
}

/// Draws `dims.k` users' LSFCs.
pub fn gen_lsfc<R: Rng + ?Sized>(
    dims: &SystemDims,
    params: &LargeScaleParams,
    rng: &mut R,
) -> LargeScaleRealization {
    let mut distances = Vec::with_capacity(dims.k);
    let mut shadow_db = Vec::with_capacity(dims.k);
    let mut beta = Vec::with_capacity(dims.k);
    for _ in 0..dims.k {
        let (d, s) = params.sample_user(rng);
        distances.push(d);
        shadow_db.push(s);
        beta.push(params.beta_of(d, s));
    }
    LargeScaleRealization {
        beta,
        distances,
        shadow_db,
    }
}

/// Power azimuth spectrum family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PasKind {
    /// Uniform density on `[phi - delta, phi + delta]`.
    Uniform,
    /// Equal-power SCM subpaths at the standard fixed offsets.
    ScmSubpaths { n_path: usize, n_subpath: usize },
}

/// SCM subpath offsets (degrees) for a 2° RMS angle spread at the BS.
const SCM_OFFSETS_2DEG: [f64; 10] = [
    0.0894, 0.2826, 0.4984, 0.7431, 1.0257, 1.3594, 1.7688, 2.2961, 3.0389, 4.3101,
];

/// Angular profile seen at the BS for one user.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpatialProfile {
    /// Mean angle of arrival (radians from broadside).
    pub mean_aoa: f64,
    /// Half-width `delta` of the equivalent uniform spread (radians).
    /// The RMS angle spread is `delta / sqrt(3)` in both PAS modes.
    pub angle_spread: f64,
    /// Element spacing in wavelengths.
    pub spacing_wavelengths: f64,
    pub pas: PasKind,
}

impl SpatialProfile {
    pub fn new(mean_aoa: f64, angle_spread: f64, spacing_wavelengths: f64, pas: PasKind) -> Result<Self> {
        let profile = Self {
            mean_aoa,
            angle_spread,
            spacing_wavelengths,
            pas,
        };
        profile.validate()?;
        Ok(profile)
    }

    /// Builds a profile from an RMS angle spread, using `delta = sqrt(3) * rms`.
    pub fn from_rms_spread(mean_aoa: f64, rms_spread: f64, spacing_wavelengths: f64, pas: PasKind) -> Result<Self> {
        Self::new(mean_aoa, 3f64.sqrt() * rms_spread, spacing_wavelengths, pas)
    }

    pub fn rms_spread(&self) -> f64 {
        self.angle_spread / 3f64.sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mean_aoa.abs() <= FRAC_PI_2 + 1e-12) {
            return Err(CsiError::InvalidParameter(format!(
                "mean AoA {} outside [-pi/2, pi/2]",
                self.mean_aoa
            )));
        }
        if !(self.angle_spread >= 0.0) || !self.angle_spread.is_finite() {
            return Err(CsiError::InvalidParameter(format!(
                "angle spread must be finite and >= 0 (got {})",
                self.angle_spread
            )));
        }
        if !(self.spacing_wavelengths >= 0.0) || !self.spacing_wavelengths.is_finite() {
            return Err(CsiError::InvalidParameter(format!(
                "antenna spacing must be finite and >= 0 (got {})",
                self.spacing_wavelengths
            )));
        }
        if let PasKind::ScmSubpaths { n_path, n_subpath } = self.pas {
            if n_path != 1 || n_subpath != 20 {
                return Err(CsiError::InvalidParameter(format!(
                    "SCM mode supports 1 path with 20 subpaths (got {n_path} x {n_subpath})"
                )));
            }
        }
        Ok(())
    }

    /// Subpath arrival angles for the SCM mode.
    pub fn scm_angles(&self) -> Vec<f64> {
        let scale = self.rms_spread() / 2f64.to_radians();
        SCM_OFFSETS_2DEG
            .iter()
            .flat_map(|&o| {
                let off = (o * scale).to_radians();
                [self.mean_aoa - off, self.mean_aoa + off]
            })
            .collect()
    }

    /// Correlation between two elements `lag` positions apart:
    /// `E{h_i h_j^*}` with `i - j = lag`.
    pub fn lag_correlation(&self, lag: usize) -> Result<Complex64> {
        let kappa = 2.0 * PI * self.spacing_wavelengths * lag as f64;
        let phase = |theta: f64| cis(-kappa * theta.sin());
        if lag == 0 || kappa == 0.0 {
            return Ok(Complex64::new(1.0, 0.0));
        }
        match self.pas {
            PasKind::Uniform => {
                let delta = self.angle_spread;
                if delta == 0.0 {
                    return Ok(phase(self.mean_aoa));
                }
                let width = 2.0 * delta;
                // At most kappa * width radians of phase rotation.
                let pieces = (kappa * width / PI).ceil() as usize + 1;
                let integral = quadrature::integrate(
                    phase,
                    self.mean_aoa - delta,
                    self.mean_aoa + delta,
                    QUAD_TOL * width,
                    pieces,
                )?;
                Ok(integral / width)
            }
            PasKind::ScmSubpaths { .. } => {
                let angles = self.scm_angles();
                let sum: Complex64 = angles.iter().map(|&a| phase(a)).sum();
                Ok(sum / angles.len() as f64)
            }
        }
    }
}

const QUAD_TOL: f64 = 1e-11;

/// A spatial correlation matrix together with its PSD square root.
#[derive(Debug, Clone)]
pub struct CorrelationMatrix {
    phi: CMat,
    sqrt: CMat,
    eigen: HermitianEigen,
}

impl CorrelationMatrix {
    /// Symmetrizes `phi`, clamps eigenvalues below `EIGEN_CLAMP` to zero and
    /// forms the Hermitian square root.
    pub fn from_hermitian(phi: CMat) -> Result<Self> {
        if !phi.is_square() || phi.nrows() == 0 {
            return Err(CsiError::DimensionMismatch(format!(
                "correlation matrix must be square, got {}x{}",
                phi.nrows(),
                phi.ncols()
            )));
        }
        let phi = hermitianize(&phi);
        let mut eigen = HermitianEigen::new(&phi)?;
        let scale = phi.norm().max(1.0);
        if let Some(&min) = eigen.values.last() {
            if min < -1e-6 * scale {
                return Err(CsiError::InvalidParameter(format!(
                    "correlation matrix is not positive semidefinite (eigenvalue {min:e})"
                )));
            }
        }
        for v in eigen.values.iter_mut() {
            if *v < EIGEN_CLAMP {
                *v = 0.0;
            }
        }
        let sqrt = eigen.spectral_map(f64::sqrt);
        Ok(Self { phi, sqrt, eigen })
    }

    pub fn identity(m: usize) -> Self {
        Self::from_hermitian(CMat::identity(m, m)).expect("identity is a valid correlation")
    }

    pub fn phi(&self) -> &CMat {
        &self.phi
    }

    pub fn sqrt(&self) -> &CMat {
        &self.sqrt
    }

    /// Clamped eigen-decomposition (descending).
    pub fn eigen(&self) -> &HermitianEigen {
        &self.eigen
    }

    pub fn dim(&self) -> usize {
        self.phi.nrows()
    }

    pub fn spectral_norm(&self) -> f64 {
        self.eigen.values.first().copied().unwrap_or(0.0)
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.phi.norm_squared()
    }

    /// `||Phi - I||_F`.
    pub fn distance_from_identity(&self) -> f64 {
        (&self.phi - CMat::identity(self.dim(), self.dim())).norm()
    }

    /// `||sqrt sqrt^H - Phi||_F`.
    pub fn sqrt_residual(&self) -> f64 {
        (&self.sqrt * self.sqrt.adjoint() - &self.phi).norm()
    }

    pub fn hermitian_defect(&self) -> f64 {
        hermitian_defect(&self.phi)
    }
}

/// Builds the `m x m` Toeplitz correlation of a ULA for the given profile.
pub fn correlation_from_profile(m: usize, profile: &SpatialProfile) -> Result<CorrelationMatrix> {
    if m == 0 {
        return Err(CsiError::InvalidDims("antenna count must be >= 1".into()));
    }
    profile.validate()?;
    let lags = (0..m)
        .map(|l| profile.lag_correlation(l))
        .collect::<Result<Vec<_>>>()?;
    let phi = CMat::from_fn(m, m, |i, j| {
        if i >= j {
            lags[i - j]
        } else {
            lags[j - i].conj()
        }
    });
    CorrelationMatrix::from_hermitian(phi)
}

/// Small-scale fading for all users.
#[derive(Debug, Clone)]
pub struct SmallScaleRealization {
    /// i.i.d. CN(0, 1) innovations, one column per user.
    pub h_tilde: CMat,
    /// Correlated channels `h_k = Phi_k^{1/2} h_tilde_k`.
    pub h: CMat,
}

impl SmallScaleRealization {
    /// Applies each user's correlation root to the given innovations.
    pub fn from_innovations(correlations: &[CorrelationMatrix], h_tilde: CMat) -> Result<Self> {
        let (m, k) = h_tilde.shape();
        if correlations.len() != k {
            return Err(CsiError::DimensionMismatch(format!(
                "{} correlation matrices for {} users",
                correlations.len(),
                k
            )));
        }
        let mut h = CMat::zeros(m, k);
        for (col, corr) in correlations.iter().enumerate() {
            if corr.dim() != m {
                return Err(CsiError::DimensionMismatch(format!(
                    "user {col}: correlation is {}x{}, array has {m} antennas",
                    corr.dim(),
                    corr.dim()
                )));
            }
            h.set_column(col, &(corr.sqrt() * h_tilde.column(col)));
        }
        Ok(Self { h_tilde, h })
    }

    pub fn m(&self) -> usize {
        self.h.nrows()
    }

    pub fn k(&self) -> usize {
        self.h.ncols()
    }

    pub fn user(&self, k: usize) -> CVec {
        self.h.column(k).into_owned()
    }
}

/// Draws small-scale fading for all users from a single stream.
pub fn gen_ssfc<R: Rng + ?Sized>(
    correlations: &[CorrelationMatrix],
    rng: &mut R,
) -> Result<SmallScaleRealization> {
    let m = correlations
        .first()
        .map(|c| c.dim())
        .ok_or_else(|| CsiError::InvalidDims("no users".into()))?;
    let h_tilde = CMat::from_fn(m, correlations.len(), |_, _| complex_normal(rng));
    SmallScaleRealization::from_innovations(correlations, h_tilde)
}

/// Draws small-scale fading with one substream per user (`key.user(k)`).
pub fn gen_ssfc_streams(correlations: &[CorrelationMatrix], key: StreamKey) -> Result<SmallScaleRealization> {
    let m = correlations
        .first()
        .map(|c| c.dim())
        .ok_or_else(|| CsiError::InvalidDims("no users".into()))?;
    let mut h_tilde = CMat::zeros(m, correlations.len());
    for k in 0..correlations.len() {
        let mut rng = key.user(k as u64).rng();
        for i in 0..m {
            h_tilde[(i, k)] = complex_normal(&mut rng);
        }
    }
    SmallScaleRealization::from_innovations(correlations, h_tilde)
}

/// Diagonal steering matrix `W(phi)` of a ULA.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringDiagonal {
    pub phi_angle: f64,
    pub entries: Vec<Complex64>,
}

impl SteeringDiagonal {
    pub fn m(&self) -> usize {
        self.entries.len()
    }

    /// `W x`.
    pub fn apply(&self, x: &CVec) -> CVec {
        CVec::from_iterator(x.len(), x.iter().zip(&self.entries).map(|(a, w)| a * w))
    }

    /// `W^H x`.
    pub fn apply_adjoint(&self, x: &CVec) -> CVec {
        CVec::from_iterator(x.len(), x.iter().zip(&self.entries).map(|(a, w)| a * w.conj()))
    }

    /// The steering vector (diagonal of `W`).
    pub fn vector(&self) -> CVec {
        CVec::from_column_slice(&self.entries)
    }

    pub fn matrix(&self) -> CMat {
        CMat::from_diagonal(&self.vector())
    }

    /// `W^H A W`.
    pub fn align(&self, a: &CMat) -> CMat {
        CMat::from_fn(a.nrows(), a.ncols(), |i, j| {
            self.entries[i].conj() * a[(i, j)] * self.entries[j]
        })
    }
}

/// `[W]_ii = exp(-j 2 pi (i-1) spacing sin(phi))`.
pub fn steering_diag(m: usize, phi: f64, spacing_wavelengths: f64) -> SteeringDiagonal {
    let step = -2.0 * PI * spacing_wavelengths * phi.sin();
    SteeringDiagonal {
        phi_angle: phi,
        entries: (0..m).map(|i| cis(step * i as f64)).collect(),
    }
}

/// One received pilot block `Y = H D_beta^{1/2} P + N`.
#[derive(Debug, Clone)]
pub struct ReceivedBlock {
    pub y: CMat,
    /// The noise realization, kept for simulation diagnostics.
    pub noise: Option<CMat>,
    pub noise_power: f64,
}

impl ReceivedBlock {
    /// Wraps an observed matrix with unit noise variance.
    pub fn from_matrix(y: CMat) -> Self {
        Self {
            y,
            noise: None,
            noise_power: 1.0,
        }
    }

    pub fn m(&self) -> usize {
        self.y.nrows()
    }

    pub fn t(&self) -> usize {
        self.y.ncols()
    }

    /// Rescales a block observed with noise variance `noise_power` to unit noise.
    pub fn normalized(&self, noise_power: f64) -> Result<Self> {
        if !(noise_power > 0.0) {
            return Err(CsiError::InvalidParameter(format!(
                "noise power must be positive (got {noise_power})"
            )));
        }
        let s = 1.0 / noise_power.sqrt();
        Ok(Self {
            y: self.y.scale(s),
            noise: self.noise.as_ref().map(|n| n.scale(s)),
            noise_power: 1.0,
        })
    }
}

/// Noise-free part `H D_beta^{1/2} P`.
pub fn noiseless_block(
    ssfc: &SmallScaleRealization,
    lsfc: &LargeScaleRealization,
    pilots: &PilotMatrix,
) -> Result<CMat> {
    let (m, k) = ssfc.h.shape();
    if lsfc.k() != k || pilots.k() != k {
        return Err(CsiError::DimensionMismatch(format!(
            "H has {k} users, beta {} and pilots {}",
            lsfc.k(),
            pilots.k()
        )));
    }
    let mut scaled = ssfc.h.clone();
    for (col, b) in lsfc.beta.iter().enumerate() {
        scaled.column_mut(col).scale_mut(b.sqrt());
    }
    let y = scaled * pilots.p();
    debug_assert_eq!(y.nrows(), m);
    Ok(y)
}

/// Received pilot block with i.i.d. CN(0, `noise_power`) noise.
pub fn received_block<R: Rng + ?Sized>(
    ssfc: &SmallScaleRealization,
    lsfc: &LargeScaleRealization,
    pilots: &PilotMatrix,
    noise_power: f64,
    rng: &mut R,
) -> Result<ReceivedBlock> {
    if !(noise_power >= 0.0) {
        return Err(CsiError::InvalidParameter(format!(
            "noise power must be >= 0 (got {noise_power})"
        )));
    }
    let clean = noiseless_block(ssfc, lsfc, pilots)?;
    let sd = noise_power.sqrt();
    let noise = CMat::from_fn(clean.nrows(), clean.ncols(), |_, _| complex_normal(rng) * sd);
    Ok(ReceivedBlock {
        y: clean + &noise,
        noise: Some(noise),
        noise_power,
    })
}
