//! Orthogonal uplink pilots and SNR bookkeeping.

use std::f64::consts::PI;

use crate::channel::LargeScaleRealization;
use crate::error::{CsiError, Result};
use crate::linalg::{cis, CMat, CVec};

/// `K x T` pilot matrix whose `k`-th row is `p_k^H`.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotMatrix {
    p: CMat,
    energy: Vec<f64>,
}

impl PilotMatrix {
    /// Wraps an arbitrary pilot matrix after checking row orthogonality.
    pub fn from_matrix(p: CMat) -> Result<Self> {
        let (k, t) = p.shape();
        if k == 0 || t < k {
            return Err(CsiError::InvalidPilot(format!("need T >= K >= 1, got K={k} T={t}")));
        }
        let gram = &p * p.adjoint();
        let energy: Vec<f64> = (0..k).map(|i| gram[(i, i)].re).collect();
        if energy.iter().any(|&e| !(e > 0.0)) {
            return Err(CsiError::InvalidPilot("zero pilot energy".into()));
        }
        let scale = energy.iter().cloned().fold(0.0, f64::max);
        for i in 0..k {
            for j in 0..k {
                if i != j && gram[(i, j)].norm() > 1e-10 * scale {
                    return Err(CsiError::InvalidPilot(format!(
                        "pilots {i} and {j} are not orthogonal"
                    )));
                }
            }
        }
        Ok(Self { p, energy })
    }

    pub fn p(&self) -> &CMat {
        &self.p
    }

    pub fn k(&self) -> usize {
        self.p.nrows()
    }

    pub fn t(&self) -> usize {
        self.p.ncols()
    }

    /// `||p_k||^2` for every user.
    pub fn energy(&self) -> &[f64] {
        &self.energy
    }

    /// Pilot vector `p_k` (the conjugated `k`-th row).
    pub fn pilot(&self, k: usize) -> CVec {
        self.p.row(k).adjoint()
    }

    /// `P P^H`.
    pub fn gram(&self) -> CMat {
        &self.p * self.p.adjoint()
    }

    /// Scales every row's power by `c` (energy scales by `c`).
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c > 0.0) {
            return Err(CsiError::InvalidPilot(format!("power scale must be positive (got {c})")));
        }
        Ok(Self {
            p: self.p.scale(c.sqrt()),
            energy: self.energy.iter().map(|e| e * c).collect(),
        })
    }
}

/// First `k` rows of a `t`-point DFT, scaled so each symbol has power
/// `per_symbol_power` (so `||p_k||^2 = t * per_symbol_power`).
pub fn orthogonal_pilots(k: usize, t: usize, per_symbol_power: f64) -> Result<PilotMatrix> {
    pilots_with_powers(t, &vec![per_symbol_power; k])
}

/// DFT pilots with a per-user symbol power.
pub fn pilots_with_powers(t: usize, per_symbol_power: &[f64]) -> Result<PilotMatrix> {
    let k = per_symbol_power.len();
    if k == 0 || t < k {
        return Err(CsiError::InvalidPilot(format!("need T >= K >= 1, got K={k} T={t}")));
    }
    if let Some(bad) = per_symbol_power.iter().find(|&&p| !(p > 0.0) || !p.is_finite()) {
        return Err(CsiError::InvalidPilot(format!("pilot power must be positive (got {bad})")));
    }
    let p = CMat::from_fn(k, t, |row, col| {
        let idx = (row * col) % t;
        cis(-2.0 * PI * idx as f64 / t as f64) * per_symbol_power[row].sqrt()
    });
    let energy = per_symbol_power.iter().map(|&s| s * t as f64).collect();
    Ok(PilotMatrix { p, energy })
}

/// Per-user average received SNR, `beta_k ||p_k||^2 / T` (linear).
#[derive(Debug, Clone, PartialEq)]
pub struct SnrSpec {
    pub snr: Vec<f64>,
}

impl SnrSpec {
    pub fn db(&self) -> Vec<f64> {
        self.snr.iter().map(|s| 10.0 * s.log10()).collect()
    }
}

pub fn snr_for(lsfc: &LargeScaleRealization, pilots: &PilotMatrix) -> Result<SnrSpec> {
    if lsfc.k() != pilots.k() {
        return Err(CsiError::DimensionMismatch(format!(
            "{} LSFCs vs {} pilots",
            lsfc.k(),
            pilots.k()
        )));
    }
    let t = pilots.t() as f64;
    Ok(SnrSpec {
        snr: lsfc
            .beta
            .iter()
            .zip(pilots.energy())
            .map(|(b, e)| b * e / t)
            .collect(),
    })
}

/// Per-symbol power that gives `snr` (linear) for a user with LSFC `beta`.
pub fn power_for_snr(beta: f64, snr: f64) -> f64 {
    snr / beta
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// DFT pilots with each user's power set so that every SNR equals `snr_db`.
pub fn pilots_for_snr(lsfc: &LargeScaleRealization, t: usize, snr_db: f64) -> Result<PilotMatrix> {
    let snr = db_to_linear(snr_db);
    let powers: Vec<f64> = lsfc.beta.iter().map(|&b| power_for_snr(b, snr)).collect();
    pilots_with_powers(t, &powers)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{gen_lsfc, LargeScaleParams, SystemDims};
    use crate::rng::{Purpose, StreamKey};
    use num_complex::Complex64;

    #[test]
    fn two_point_dft() {
        let p = orthogonal_pilots(2, 2, 1.0).unwrap();
        let expect = [[1.0, 1.0], [1.0, -1.0]];
        for (r, row) in expect.iter().enumerate() {
            for (c, &v) in row.iter().enumerate() {
                assert!((p.p()[(r, c)] - Complex64::new(v, 0.0)).norm() < 1e-15);
            }
        }
        assert_eq!(p.energy(), &[2.0, 2.0]);
    }

    #[test]
    fn table_one_gram() {
        let p = orthogonal_pilots(8, 8, 1.0).unwrap();
        let g = p.gram();
        assert!((g - CMat::identity(8, 8) * Complex64::new(8.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn gram_is_diagonal_for_any_k_le_t() {
        for t in 1..12 {
            for k in 1..=t {
                let p = orthogonal_pilots(k, t, 0.7).unwrap();
                let g = p.gram();
                for i in 0..k {
                    for j in 0..k {
                        if i != j {
                            assert!(g[(i, j)].norm() < 1e-10);
                        }
                    }
                    assert!((g[(i, i)].re - 0.7 * t as f64).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn rejects_short_pilots() {
        assert!(matches!(orthogonal_pilots(3, 2, 1.0), Err(CsiError::InvalidPilot(_))));
        assert!(orthogonal_pilots(2, 2, 0.0).is_err());
        let mut m = CMat::identity(2, 2);
        m[(0, 1)] = Complex64::new(1.0, 0.0);
        assert!(PilotMatrix::from_matrix(m).is_err());
    }

    #[test]
    fn snr_definition_and_inverse() {
        let lsfc = LargeScaleRealization::from_beta(vec![1.0]);
        let p = orthogonal_pilots(1, 8, 1.0).unwrap();
        assert!((snr_for(&lsfc, &p).unwrap().snr[0] - 1.0).abs() < 1e-15);
        assert!((power_for_snr(1e-6, db_to_linear(10.0)) - 1e7).abs() < 1e-6);
    }

    #[test]
    fn normalized_pilots_hit_target_snr() {
        let dims = SystemDims::default();
        let lsfc = gen_lsfc(&dims, &LargeScaleParams::default(), &mut StreamKey::new(3, Purpose::Geometry).rng());
        let p = pilots_for_snr(&lsfc, dims.t, 10.0).unwrap();
        let snr = snr_for(&lsfc, &p).unwrap();
        assert!(snr.snr.iter().all(|s| (s - 10.0).abs() < 1e-9));
        let g = p.gram();
        let scale = p.energy().iter().cloned().fold(0.0, f64::max);
        for i in 0..8 {
            for j in 0..8 {
                if i != j {
                    assert!(g[(i, j)].norm() < 1e-10 * scale);
                }
            }
        }
    }

    #[test]
    fn scaling_scales_snr() {
        let lsfc = LargeScaleRealization::from_beta(vec![0.5, 2.0]);
        let p = orthogonal_pilots(2, 4, 1.0).unwrap();
        let q = p.scaled(3.0).unwrap();
        let a = snr_for(&lsfc, &p).unwrap();
        let b = snr_for(&lsfc, &q).unwrap();
        for (x, y) in a.snr.iter().zip(&b.snr) {
            assert!((y - 3.0 * x).abs() < 1e-12);
        }
        assert!(PilotMatrix::from_matrix(q.p().clone()).is_ok());
    }
}
