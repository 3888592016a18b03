use crate::analysis::{lsfc_db_sq_error, theory_mse_curve, optimal_order};
use crate::basis::{klt_basis, BasisCache, BasisKind, RrBasis};
use crate::channel::{
    correlation_from_profile, gen_ssfc_streams, received_block, steering_diag, CorrelationMatrix,
    LargeScaleRealization, ReceivedBlock, SmallScaleRealization, SpatialProfile,
};
use crate::em::{conventional_lsfc_ls, em_joint, gram_deviation, EmOptions, EmPrior, EmVariant};
use crate::error::{CsiError, Result};
use crate::lsfc::estimate_lsfc_multi;
use crate::pilots::{pilots_for_snr, PilotMatrix};
use crate::rng::{Purpose, StreamKey};
use crate::ssfc::{aoa_search, conventional_ls, estimate_ssfc_i, estimate_ssfc_ii, gamma_from_lsfc, matched_output};

use super::config::{ExperimentConfig, Scenario};
use super::stats::{run_trials, Slots};

/// One output record: sweep coordinates, a metric and its Monte Carlo summary.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub scenario: String,
    pub keys: Vec<(String, String)>,
    pub metric: String,
    pub value: f64,
    /// Trials behind `value`; 0 for closed-form rows.
    pub n: usize,
    pub stderr: f64,
}

impl ResultRow {
    pub fn key(&self, name: &str) -> Option<&str> {
        self.keys.iter().find(|(k, _)| k == name).map(|(_, v)| v.as_str())
    }
}

/// Users' large-scale fading and mean AoAs, drawn once per experiment.
#[derive(Debug, Clone)]
pub struct Geometry {
    pub lsfc: LargeScaleRealization,
    pub aoas: Vec<f64>,
}

pub fn draw_geometry(cfg: &ExperimentConfig) -> Geometry {
    let mut rng = StreamKey::new(cfg.seed, Purpose::Geometry).rng();
    let lsfc = crate::channel::gen_lsfc(&cfg.dims, &cfg.large_scale, &mut rng);
    let range = cfg.spatial.aoa_range_deg.to_radians();
    let aoas = (0..cfg.dims.k)
        .map(|_| match cfg.spatial.mean_aoa_deg {
            Some(a) => a.to_radians(),
            None => {
                let u: f64 = rand::Rng::random(&mut rng);
                (2.0 * u - 1.0) * range
            }
        })
        .collect();
    Geometry { lsfc, aoas }
}

/// Per-user correlation matrices for one sweep point.
pub fn user_correlations(
    cfg: &ExperimentConfig,
    geometry: &Geometry,
    m: usize,
    spacing: f64,
    spread_deg: f64,
) -> Result<Vec<CorrelationMatrix>> {
    geometry
        .aoas
        .iter()
        .map(|&aoa| {
            if cfg.spatial.uncorrelated {
                return Ok(CorrelationMatrix::identity(m));
            }
            let profile = SpatialProfile::from_rms_spread(aoa, spread_deg.to_radians(), spacing, cfg.spatial.pas)?;
            correlation_from_profile(m, &profile)
        })
        .collect()
}

/// Runs `cfg` with one worker per available core.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    run_experiment_with_workers(cfg, 0)
}

/// Runs `cfg` on `workers` threads (0 = all cores). The rows do not depend on
/// the worker count.
pub fn run_experiment_with_workers(cfg: &ExperimentConfig, workers: usize) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let geometry = draw_geometry(cfg);
    let ctx = Ctx { cfg, geometry: &geometry, workers, rows: Vec::new() };
    match cfg.scenario {
        Scenario::LsfcVsSpacing | Scenario::LsfcVsM => ctx.lsfc_sweep(),
        Scenario::EmVsProposed => ctx.em_sweep(),
        Scenario::SsfcVsSnrOrder => ctx.ssfc_sweep(),
        Scenario::TheoryMseSurface => ctx.theory_surface(),
    }
}

/// Received blocks and the first block's small-scale fading for one trial.
pub struct TrialBlocks {
    pub blocks: Vec<ReceivedBlock>,
    pub first_ssfc: SmallScaleRealization,
}

/// Draws `j` unit-noise pilot blocks for trial `trial`.
pub fn draw_blocks(
    seed: u64,
    trial: u64,
    corrs: &[CorrelationMatrix],
    lsfc: &LargeScaleRealization,
    pilots: &PilotMatrix,
    j: usize,
) -> Result<TrialBlocks> {
    let mut blocks = Vec::with_capacity(j);
    let mut first = None;
    for b in 0..j as u64 {
        let ssfc = gen_ssfc_streams(corrs, StreamKey::new(seed, Purpose::SmallScale).trial(trial).block(b))?;
        let mut rng = StreamKey::new(seed, Purpose::Noise).trial(trial).block(b).rng();
        blocks.push(received_block(&ssfc, lsfc, pilots, 1.0, &mut rng)?);
        if first.is_none() {
            first = Some(ssfc);
        }
    }
    Ok(TrialBlocks {
        blocks,
        first_ssfc: first.expect("j >= 1"),
    })
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    geometry: &'a Geometry,
    workers: usize,
    rows: Vec<ResultRow>,
}

fn fmt_key(name: &str, v: impl ToString) -> (String, String) {
    (name.to_string(), v.to_string())
}

impl Ctx<'_> {
    fn push(&mut self, keys: &[(String, String)], metric: &str, value: f64, n: usize, stderr: f64) {
        self.rows.push(ResultRow {
            scenario: self.cfg.scenario.name().to_string(),
            keys: keys.to_vec(),
            metric: metric.to_string(),
            value,
            n,
            stderr,
        });
    }

    fn push_slot(&mut self, keys: &[(String, String)], metric: &str, slots: &Slots, i: usize) {
        let s = slots.summary(i);
        self.push(keys, metric, s.value, s.n, s.stderr);
    }

    /// Every `(M, spacing, spread, snr)` combination in sweep order.
    fn grid(&self) -> Vec<(usize, f64, f64, f64)> {
        let mut out = Vec::new();
        for m in self.cfg.antenna_counts() {
            for &spacing in &self.cfg.spatial.spacing_wavelengths {
                for &spread in &self.cfg.spatial.angle_spread_deg {
                    for &snr in &self.cfg.snr_db {
                        out.push((m, spacing, spread, snr));
                    }
                }
            }
        }
        out
    }

    fn base_keys(m: usize, spacing: f64, spread: f64, snr: f64) -> Vec<(String, String)> {
        vec![
            fmt_key("m", m),
            fmt_key("spacing", spacing),
            fmt_key("angle_spread_deg", spread),
            fmt_key("snr_db", snr),
        ]
    }

    fn lsfc_sweep(mut self) -> Result<Vec<ResultRow>> {
        let cfg = self.cfg;
        let var_db = cfg.large_scale.beta_db_variance();
        let k = cfg.dims.k;
        let with_ls = cfg.scenario == Scenario::LsfcVsM;
        for (m, spacing, spread, snr) in self.grid() {
            let corrs = user_correlations(cfg, self.geometry, m, spacing, spread)?;
            let lsfc = &self.geometry.lsfc;
            let pilots = pilots_for_snr(lsfc, cfg.dims.t, snr)?;
            for j in cfg.j_blocks() {
                // Slots: proposed NMSE, failure rate, known-SSFC LS NMSE.
                let slots = run_trials(cfg.n_trials, self.workers, 3, |trial| {
                    let tb = draw_blocks(cfg.seed, trial, &corrs, lsfc, &pilots, j)?;
                    let est = estimate_lsfc_multi(&tb.blocks, &pilots, m)?;
                    let mut out = vec![(0.0, 0.0); 3];
                    for (&bh, &b) in est.beta_hat.iter().zip(&lsfc.beta) {
                        match lsfc_db_sq_error(bh, b) {
                            Some(e) => {
                                out[0].0 += e / var_db;
                                out[0].1 += 1.0;
                            }
                            None => out[1].0 += 1.0,
                        }
                        out[1].1 += 1.0;
                    }
                    if with_ls {
                        let ls = conventional_lsfc_ls(&tb.blocks[0], &tb.first_ssfc, &pilots)?;
                        for (&bh, &b) in ls.iter().zip(&lsfc.beta) {
                            if let Some(e) = lsfc_db_sq_error(bh, b) {
                                out[2].0 += e / var_db;
                                out[2].1 += 1.0;
                            }
                        }
                    }
                    debug_assert_eq!(out[1].1 as usize, k);
                    Ok(out)
                })?;
                let mut keys = Self::base_keys(m, spacing, spread, snr);
                keys.push(fmt_key("j", j));
                self.push_slot(&keys, "nmse_lsfc_db", &slots, 0);
                self.push_slot(&keys, "failure_rate", &slots, 1);
                if with_ls {
                    self.push_slot(&keys, "nmse_lsfc_db_known_ssfc_ls", &slots, 2);
                }
            }
        }
        Ok(self.rows)
    }

    fn em_sweep(mut self) -> Result<Vec<ResultRow>> {
        let cfg = self.cfg;
        let var_db = cfg.large_scale.beta_db_variance();
        let k = cfg.dims.k;
        let iters = cfg.em.max_iters;
        let mut prior_rng = StreamKey::new(cfg.seed, Purpose::Prior).rng();
        let prior = EmPrior::monte_carlo(&cfg.large_scale, k, cfg.em.prior_samples, &mut prior_rng)?;
        let em_opts = EmOptions { max_iters: iters, variant: EmVariant::Em, tol: 0.0 };
        let mem_opts = EmOptions { variant: EmVariant::Mem, ..em_opts };
        // Slots: proposed, gram deviation, then EM and MEM per iteration.
        let n_slots = 2 + 2 * (iters + 1);
        for (m, spacing, spread, snr) in self.grid() {
            let corrs = user_correlations(cfg, self.geometry, m, spacing, spread)?;
            let lsfc = &self.geometry.lsfc;
            let pilots = pilots_for_snr(lsfc, cfg.dims.t, snr)?;
            let db_err = |bh: &[f64], acc: &mut (f64, f64)| {
                for (&x, &b) in bh.iter().zip(&lsfc.beta) {
                    if let Some(e) = lsfc_db_sq_error(x, b) {
                        acc.0 += e / var_db;
                        acc.1 += 1.0;
                    }
                }
            };
            let slots = run_trials(cfg.n_trials, self.workers, n_slots, |trial| {
                let tb = draw_blocks(cfg.seed, trial, &corrs, lsfc, &pilots, 1)?;
                let y = &tb.blocks[0];
                let mut out = vec![(0.0, 0.0); n_slots];
                db_err(&estimate_lsfc_multi(&tb.blocks, &pilots, m)?.beta_hat, &mut out[0]);
                out[1] = (gram_deviation(&tb.first_ssfc.h, &pilots), 1.0);
                let em = em_joint(y, &pilots, &corrs, &prior, &em_opts)?;
                let mem = em_joint(y, &pilots, &corrs, &prior, &mem_opts)?;
                for it in 0..=iters {
                    db_err(&em.beta_trace[it.min(em.beta_trace.len() - 1)], &mut out[2 + 2 * it]);
                    db_err(&mem.beta_trace[it.min(mem.beta_trace.len() - 1)], &mut out[3 + 2 * it]);
                }
                Ok(out)
            })?;
            let base = Self::base_keys(m, spacing, spread, snr);
            for it in 0..=iters {
                let mut keys = base.clone();
                keys.push(fmt_key("iteration", it));
                self.push_slot(&keys, "nmse_lsfc_db_proposed", &slots, 0);
                self.push_slot(&keys, "nmse_lsfc_db_em", &slots, 2 + 2 * it);
                self.push_slot(&keys, "nmse_lsfc_db_mem", &slots, 3 + 2 * it);
                if it == 0 {
                    self.push_slot(&keys, "mem_gram_deviation", &slots, 1);
                }
            }
        }
        Ok(self.rows)
    }

    /// Predetermined parents come from the cache; KLT parents are per user.
    fn user_bases(cache: &BasisCache, kind: BasisKind, m: usize, corrs: &[CorrelationMatrix]) -> Result<Vec<RrBasis>> {
        match kind {
            BasisKind::Klt => corrs.iter().map(|c| klt_basis(c, None, m)).collect(),
            _ => Ok(vec![cache.get(kind, m, m)?; corrs.len()]),
        }
    }

    fn ssfc_sweep(mut self) -> Result<Vec<ResultRow>> {
        let cfg = self.cfg;
        let k = cfg.dims.k;
        let cache = BasisCache::new();
        let orders = cfg.modeling_orders.clone();
        let kinds = cfg.basis_kinds.clone();
        let n_slots = kinds.len() * orders.len() * 2 + 1;
        let slot = |b: usize, o: usize, est: usize| (b * orders.len() + o) * 2 + est;
        for (m, spacing, spread, snr) in self.grid() {
            let corrs = user_correlations(cfg, self.geometry, m, spacing, spread)?;
            let lsfc = &self.geometry.lsfc;
            let pilots = pilots_for_snr(lsfc, cfg.dims.t, snr)?;
            let parents: Vec<Vec<RrBasis>> = kinds
                .iter()
                .map(|&kind| Self::user_bases(&cache, kind, m, &corrs))
                .collect::<Result<_>>()?;
            let theory = self.ssfc_theory(&parents, &corrs, &pilots, m, spacing)?;
            for j in cfg.j_blocks() {
                let slots = run_trials(cfg.n_trials, self.workers, n_slots, |trial| {
                    let tb = draw_blocks(cfg.seed, trial, &corrs, lsfc, &pilots, j)?;
                    let est = estimate_lsfc_multi(&tb.blocks, &pilots, m)?;
                    let y = &tb.blocks[0];
                    let mut out = vec![(0.0, 0.0); n_slots];
                    let mut add = |i: usize, h_hat: &crate::linalg::CVec, h: &crate::linalg::CVec| {
                        out[i].0 += (h_hat - h).norm_squared() / m as f64;
                        out[i].1 += 1.0;
                    };
                    #[allow(clippy::needless_range_loop)]
                    for kk in 0..k {
                        let Ok(gamma) = gamma_from_lsfc(est.beta_hat[kk], pilots.energy()[kk], kk) else {
                            continue;
                        };
                        let p = pilots.pilot(kk);
                        let h = tb.first_ssfc.user(kk);
                        add(n_slots - 1, &conventional_ls(y, &p, gamma)?.h_hat, &h);
                        let yp = matched_output(y, &p)?;
                        for (b, kind) in kinds.iter().enumerate() {
                            for (o, &order) in orders.iter().enumerate() {
                                let basis = parents[b][kk].with_order(order)?;
                                add(slot(b, o, 0), &estimate_ssfc_i(y, &p, gamma, &basis)?.h_hat, &h);
                                if *kind != BasisKind::Klt {
                                    let phi = aoa_search(&yp, &basis, spacing, &cfg.aoa_grid);
                                    let e = estimate_ssfc_ii(y, &p, gamma, &basis, phi, spacing)?;
                                    add(slot(b, o, 1), &e.h_hat, &h);
                                }
                            }
                        }
                    }
                    Ok(out)
                })?;
                let mut base = Self::base_keys(m, spacing, spread, snr);
                base.push(fmt_key("j", j));
                for (b, kind) in kinds.iter().enumerate() {
                    for (o, &order) in orders.iter().enumerate() {
                        let mut keys = base.clone();
                        keys.push(fmt_key("basis", kind.name()));
                        keys.push(fmt_key("order", order));
                        self.push_slot(&keys, "nmse_ssfc_i", &slots, slot(b, o, 0));
                        self.push(&keys, "theory_nmse_i", theory[b][0][order - 1], 0, 0.0);
                        if *kind != BasisKind::Klt {
                            self.push_slot(&keys, "nmse_ssfc_ii", &slots, slot(b, o, 1));
                            self.push(&keys, "theory_nmse_ii", theory[b][1][order - 1], 0, 0.0);
                        }
                    }
                }
                let mut keys = base.clone();
                keys.push(fmt_key("basis", "ls"));
                keys.push(fmt_key("order", m));
                self.push_slot(&keys, "nmse_ssfc_ls", &slots, n_slots - 1);
            }
        }
        Ok(self.rows)
    }

    /// User-averaged closed-form NMSE curves `[basis][estimator][order - 1]`,
    /// estimator II aligned at each user's true mean AoA.
    fn ssfc_theory(
        &self,
        parents: &[Vec<RrBasis>],
        corrs: &[CorrelationMatrix],
        pilots: &PilotMatrix,
        m: usize,
        spacing: f64,
    ) -> Result<Vec<[Vec<f64>; 2]>> {
        let k = corrs.len();
        let lsfc = &self.geometry.lsfc;
        parents
            .iter()
            .map(|users| {
                let mut acc = [vec![0.0; m], vec![0.0; m]];
                for kk in 0..k {
                    let w = steering_diag(m, self.geometry.aoas[kk], spacing);
                    let beta = lsfc.beta[kk];
                    let energy = pilots.energy()[kk];
                    let plain = theory_mse_curve(users[kk].parent(), corrs[kk].phi(), beta, energy)?;
                    let aligned = theory_mse_curve(users[kk].parent(), &w.align(corrs[kk].phi()), beta, energy)?;
                    for i in 0..m {
                        acc[0][i] += plain[i] / (k * m) as f64;
                        acc[1][i] += aligned[i] / (k * m) as f64;
                    }
                }
                Ok(acc)
            })
            .collect()
    }

    fn theory_surface(mut self) -> Result<Vec<ResultRow>> {
        let cfg = self.cfg;
        let cache = BasisCache::new();
        let k = cfg.dims.k;
        let snr_grid = cfg.snr_db.clone();
        for m in cfg.antenna_counts() {
            for &spacing in &cfg.spatial.spacing_wavelengths {
                for &spread in &cfg.spatial.angle_spread_deg {
                    let corrs = user_correlations(cfg, self.geometry, m, spacing, spread)?;
                    let aligned: Vec<_> = (0..k)
                        .map(|kk| steering_diag(m, self.geometry.aoas[kk], spacing).align(corrs[kk].phi()))
                        .collect();
                    for &kind in &cfg.basis_kinds {
                        let parents: Vec<crate::linalg::CMat> = match kind {
                            BasisKind::Klt => aligned
                                .iter()
                                .map(|a| {
                                    let c = CorrelationMatrix::from_hermitian(a.clone())?;
                                    Ok(klt_basis(&c, None, m)?.parent().clone())
                                })
                                .collect::<Result<_>>()?,
                            _ => vec![cache.get(kind, m, m)?.parent().clone(); k],
                        };
                        for &snr in &snr_grid {
                            // Power control: beta ||p||^2 = T * snr for every user.
                            let energy_beta = cfg.dims.t as f64 * crate::pilots::db_to_linear(snr);
                            let mut total = vec![0.0; m];
                            let mut variance = vec![0.0; m];
                            for (parent, phi) in parents.iter().zip(&aligned) {
                                let curve = theory_mse_curve(parent, phi, 1.0, energy_beta)?;
                                for i in 0..m {
                                    total[i] += curve[i] / (k * m) as f64;
                                    variance[i] += (i + 1) as f64 / energy_beta / (k * m) as f64;
                                }
                            }
                            let mut base = Self::base_keys(m, spacing, spread, snr);
                            base.push(fmt_key("basis", kind.name()));
                            for &order in &cfg.modeling_orders {
                                let mut keys = base.clone();
                                keys.push(fmt_key("order", order));
                                let (t, v) = (total[order - 1], variance[order - 1]);
                                self.push(&keys, "theory_nmse", t, 0, 0.0);
                                self.push(&keys, "theory_variance", v, 0, 0.0);
                                self.push(&keys, "theory_bias", (t - v).max(0.0), 0, 0.0);
                            }
                            let opt = optimal_order(&total)
                                .ok_or_else(|| CsiError::InvalidParameter("empty MSE curve".into()))?;
                            let mut keys = base.clone();
                            keys.push(fmt_key("order", "opt"));
                            self.push(&keys, "optimal_order", opt as f64, 0, 0.0);
                        }
                    }
                }
            }
        }
        Ok(self.rows)
    }
}
