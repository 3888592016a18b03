use serde::{Deserialize, Serialize};

use crate::basis::BasisKind;
use crate::channel::{LargeScaleParams, PasKind, SystemDims};
use crate::error::{CsiError, Result};
use crate::ssfc::AoaSearchGrid;

/// Experiment family. Each one sweeps a different set of coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// LSFC dB-NMSE over element spacing, angle spread, SNR and block count.
    LsfcVsSpacing,
    /// LSFC dB-NMSE over the antenna count, with the known-SSFC LS baseline.
    #[serde(rename = "lsfc_vs_m")]
    LsfcVsM,
    /// Per-iteration LSFC dB-NMSE of EM and MEM against the decoupled estimator.
    EmVsProposed,
    /// SSFC NMSE of the rank-reduced estimators over SNR, basis and order.
    SsfcVsSnrOrder,
    /// Closed-form MSE over SNR, basis and order (no sampling).
    TheoryMseSurface,
}

impl Scenario {
    pub fn name(&self) -> &'static str {
        match self {
            Scenario::LsfcVsSpacing => "lsfc_vs_spacing",
            Scenario::LsfcVsM => "lsfc_vs_m",
            Scenario::EmVsProposed => "em_vs_proposed",
            Scenario::SsfcVsSnrOrder => "ssfc_vs_snr_order",
            Scenario::TheoryMseSurface => "theory_mse_surface",
        }
    }
}

/// Angular sweep settings shared by all users.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpatialConfig {
    /// RMS angle spreads in degrees; 0 gives a point source.
    pub angle_spread_deg: Vec<f64>,
    pub spacing_wavelengths: Vec<f64>,
    pub pas: PasKind,
    /// Common mean AoA in degrees. When absent each user's AoA is drawn
    /// uniformly in `[-aoa_range_deg, aoa_range_deg]` once per experiment.
    pub mean_aoa_deg: Option<f64>,
    pub aoa_range_deg: f64,
    /// Zero correlation (`Phi = I`) instead of the angular model.
    pub uncorrelated: bool,
}

impl Default for SpatialConfig {
    fn default() -> Self {
        Self {
            angle_spread_deg: vec![15.0],
            spacing_wavelengths: vec![0.5],
            pas: PasKind::Uniform,
            mean_aoa_deg: None,
            aoa_range_deg: 60.0,
            uncorrelated: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EmConfig {
    pub max_iters: usize,
    /// Draws used for the prior moments of `sqrt(beta)`.
    pub prior_samples: usize,
}

impl Default for EmConfig {
    fn default() -> Self {
        Self {
            max_iters: 20,
            prior_samples: 1_000_000,
        }
    }
}

/// One experiment, read from a TOML document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    #[serde(default)]
    pub dims: SystemDims,
    #[serde(default)]
    pub large_scale: LargeScaleParams,
    #[serde(default)]
    pub spatial: SpatialConfig,
    /// Antenna counts to sweep; empty means `[dims.m]`.
    #[serde(default)]
    pub antenna_counts: Vec<usize>,
    #[serde(default = "default_snr")]
    pub snr_db: Vec<f64>,
    #[serde(default = "default_orders")]
    pub modeling_orders: Vec<usize>,
    #[serde(default = "default_bases")]
    pub basis_kinds: Vec<BasisKind>,
    /// Coherence blocks per LSFC estimate; empty means `[dims.j]`.
    #[serde(default)]
    pub j_blocks: Vec<usize>,
    #[serde(default = "default_trials")]
    pub n_trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub em: EmConfig,
    #[serde(default)]
    pub aoa_grid: AoaSearchGrid,
}

fn default_snr() -> Vec<f64> {
    vec![10.0]
}

fn default_orders() -> Vec<usize> {
    vec![10, 30]
}

fn default_bases() -> Vec<BasisKind> {
    vec![BasisKind::Dct2, BasisKind::Polynomial]
}

fn default_trials() -> usize {
    1000
}

impl ExperimentConfig {
    /// Defaults for a scenario with Table-style system parameters.
    pub fn new(scenario: Scenario) -> Self {
        Self {
            scenario,
            dims: SystemDims::default(),
            large_scale: LargeScaleParams::default(),
            spatial: SpatialConfig::default(),
            antenna_counts: Vec::new(),
            snr_db: default_snr(),
            modeling_orders: default_orders(),
            basis_kinds: default_bases(),
            j_blocks: Vec::new(),
            n_trials: default_trials(),
            seed: 0,
            em: EmConfig::default(),
            aoa_grid: AoaSearchGrid::default(),
        }
    }

    /// Parses and validates a TOML document.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| CsiError::Config(vec![e.to_string()]))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn antenna_counts(&self) -> Vec<usize> {
        if self.antenna_counts.is_empty() {
            vec![self.dims.m]
        } else {
            self.antenna_counts.clone()
        }
    }

    pub fn j_blocks(&self) -> Vec<usize> {
        if self.j_blocks.is_empty() {
            vec![self.dims.j]
        } else {
            self.j_blocks.clone()
        }
    }

    /// Checks every field and reports all problems at once.
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        let d = &self.dims;
        if d.k == 0 {
            bad.push("dims.k: must be at least 1".to_string());
        }
        if d.t < d.k {
            bad.push(format!("dims.t: pilot length {} is shorter than K = {}", d.t, d.k));
        }
        if d.j == 0 {
            bad.push("dims.j: must be at least 1".to_string());
        }
        let counts = self.antenna_counts();
        for &m in &counts {
            if m < d.t.max(2) {
                bad.push(format!("antenna_counts: M = {m} is below max(T, 2) = {}", d.t.max(2)));
            }
        }
        if let Err(e) = self.large_scale.validate() {
            bad.push(format!("large_scale: {e}"));
        }
        let sp = &self.spatial;
        if sp.angle_spread_deg.is_empty() {
            bad.push("spatial.angle_spread_deg: empty sweep".to_string());
        }
        if sp.angle_spread_deg.iter().any(|a| !(*a >= 0.0 && *a <= 45.0)) {
            bad.push("spatial.angle_spread_deg: values must lie in [0, 45]".to_string());
        }
        if sp.spacing_wavelengths.is_empty() {
            bad.push("spatial.spacing_wavelengths: empty sweep".to_string());
        }
        if sp.spacing_wavelengths.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
            bad.push("spatial.spacing_wavelengths: values must be positive".to_string());
        }
        if let Some(a) = sp.mean_aoa_deg {
            if !(a.abs() < 90.0) {
                bad.push(format!("spatial.mean_aoa_deg: {a} is not inside (-90, 90)"));
            }
        }
        if !(sp.aoa_range_deg >= 0.0 && sp.aoa_range_deg < 90.0) {
            bad.push(format!("spatial.aoa_range_deg: {} is not in [0, 90)", sp.aoa_range_deg));
        }
        if let PasKind::ScmSubpaths { n_path, n_subpath } = sp.pas {
            if n_path != 1 || n_subpath != 20 {
                bad.push("spatial.pas: only 1 path with 20 subpaths is supported".to_string());
            }
        }
        if self.snr_db.is_empty() {
            bad.push("snr_db: empty sweep".to_string());
        }
        if self.snr_db.iter().any(|s| !s.is_finite()) {
            bad.push("snr_db: values must be finite".to_string());
        }
        if self.j_blocks().contains(&0) {
            bad.push("j_blocks: values must be at least 1".to_string());
        }
        if self.n_trials == 0 {
            bad.push("n_trials: must be at least 1".to_string());
        }
        if matches!(self.scenario, Scenario::SsfcVsSnrOrder | Scenario::TheoryMseSurface) {
            if self.modeling_orders.is_empty() {
                bad.push("modeling_orders: empty sweep".to_string());
            }
            let min_m = counts.iter().copied().min().unwrap_or(0);
            if let Some(m) = self.modeling_orders.iter().find(|&&m| m == 0 || m > min_m) {
                bad.push(format!("modeling_orders: {m} is outside 1..={min_m}"));
            }
            if self.basis_kinds.is_empty() {
                bad.push("basis_kinds: empty sweep".to_string());
            }
            if self.aoa_grid.n_grid < 16 {
                bad.push("aoa_grid.n_grid: needs at least 16 points".to_string());
            }
        }
        if self.scenario == Scenario::EmVsProposed && self.em.prior_samples < 2 {
            bad.push("em.prior_samples: needs at least 2".to_string());
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(CsiError::Config(bad))
        }
    }
}
