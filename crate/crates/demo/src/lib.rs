//! Browser demo: basis energy compaction, predicted MSE against modeling
//! order, and the mean-AoA search objective. Every export returns a JSON
//! string so the same functions can be exercised natively.

use massive_csi::analysis::{optimal_order, theory_mse_curve};
use massive_csi::basis::{dct2_basis, energy_profile, klt_basis, polynomial_basis};
use massive_csi::channel::{
    correlation_from_profile, gen_ssfc_streams, received_block, steering_diag, CorrelationMatrix,
    LargeScaleRealization, PasKind, SpatialProfile,
};
use massive_csi::pilots::{db_to_linear, orthogonal_pilots};
use massive_csi::rng::{Purpose, StreamKey};
use massive_csi::ssfc::{aoa_objective, aoa_search, matched_output, AoaSearchGrid};
use serde::Serialize;
use wasm_bindgen::prelude::wasm_bindgen;

const MAX_ANTENNAS: usize = 256;

fn check_antennas(m: usize) -> Result<(), String> {
    if (2..=MAX_ANTENNAS).contains(&m) {
        Ok(())
    } else {
        Err(format!("antenna count must be in 2..={MAX_ANTENNAS} (got {m})"))
    }
}

fn correlation(m: usize, rms_spread_deg: f64, mean_aoa_deg: f64, spacing: f64) -> Result<CorrelationMatrix, String> {
    check_antennas(m)?;
    let profile = SpatialProfile::from_rms_spread(
        mean_aoa_deg.to_radians(),
        rms_spread_deg.to_radians(),
        spacing,
        PasKind::Uniform,
    )
    .map_err(|e| e.to_string())?;
    correlation_from_profile(m, &profile).map_err(|e| e.to_string())
}

fn json<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("plain data serializes")
}

#[derive(Serialize)]
struct Curves {
    orders: Vec<usize>,
    dct2: Vec<f64>,
    polynomial: Vec<f64>,
    klt: Vec<f64>,
}

/// Captured energy fraction against modeling order for each basis, with the
/// correlation aligned to the mean AoA when `aligned` is set.
#[wasm_bindgen]
pub fn energy_compaction(
    m: usize,
    rms_spread_deg: f64,
    mean_aoa_deg: f64,
    spacing: f64,
    aligned: bool,
) -> Result<String, String> {
    let phi = correlation(m, rms_spread_deg, mean_aoa_deg, spacing)?;
    let w = steering_diag(m, mean_aoa_deg.to_radians(), spacing);
    let target = if aligned { w.align(phi.phi()) } else { phi.phi().clone() };
    let dct = dct2_basis(m, m).map_err(|e| e.to_string())?;
    let poly = polynomial_basis(m, m).map_err(|e| e.to_string())?;
    let klt = klt_basis(&phi, aligned.then_some(&w), m).map_err(|e| e.to_string())?;
    Ok(json(&Curves {
        orders: (1..=m).collect(),
        dct2: energy_profile(dct.parent(), &target),
        polynomial: energy_profile(poly.parent(), &target),
        klt: energy_profile(klt.parent(), &target),
    }))
}

#[derive(Serialize)]
struct MseCurves {
    #[serde(flatten)]
    curves: Curves,
    optimal: Optimal,
}

#[derive(Serialize)]
struct Optimal {
    dct2: usize,
    polynomial: usize,
    klt: usize,
}

/// Predicted NMSE (MSE / M) of the AoA-aligned estimator for every order,
/// with known LSFC and the AoA fixed at its true value.
#[wasm_bindgen]
pub fn theory_mse_vs_order(
    m: usize,
    rms_spread_deg: f64,
    mean_aoa_deg: f64,
    spacing: f64,
    snr_db: f64,
    pilot_length: usize,
) -> Result<String, String> {
    if pilot_length == 0 {
        return Err("pilot length must be positive".into());
    }
    let phi = correlation(m, rms_spread_deg, mean_aoa_deg, spacing)?;
    let w = steering_diag(m, mean_aoa_deg.to_radians(), spacing);
    let aligned = w.align(phi.phi());
    let energy = pilot_length as f64 * db_to_linear(snr_db);
    let curve = |parent: &massive_csi::linalg::CMat| -> Result<Vec<f64>, String> {
        Ok(theory_mse_curve(parent, &aligned, 1.0, energy)
            .map_err(|e| e.to_string())?
            .into_iter()
            .map(|v| v / m as f64)
            .collect())
    };
    let dct2 = curve(dct2_basis(m, m).map_err(|e| e.to_string())?.parent())?;
    let polynomial = curve(polynomial_basis(m, m).map_err(|e| e.to_string())?.parent())?;
    let klt = curve(klt_basis(&phi, Some(&w), m).map_err(|e| e.to_string())?.parent())?;
    let optimal = Optimal {
        dct2: optimal_order(&dct2).unwrap_or(m),
        polynomial: optimal_order(&polynomial).unwrap_or(m),
        klt: optimal_order(&klt).unwrap_or(m),
    };
    Ok(json(&MseCurves {
        curves: Curves {
            orders: (1..=m).collect(),
            dct2,
            polynomial,
            klt,
        },
        optimal,
    }))
}

#[derive(Serialize)]
struct AoaCurve {
    angles_deg: Vec<f64>,
    objective: Vec<f64>,
    phi_hat_deg: f64,
    true_deg: f64,
}

/// Draws one noisy pilot observation and returns the normalized AoA
/// objective over `[-90, 90]` degrees together with the refined estimate.
#[allow(clippy::too_many_arguments)]
#[wasm_bindgen]
pub fn aoa_objective_curve(
    m: usize,
    rms_spread_deg: f64,
    true_aoa_deg: f64,
    spacing: f64,
    snr_db: f64,
    order: usize,
    seed: u64,
    n_points: usize,
) -> Result<String, String> {
    if !(16..=20_001).contains(&n_points) {
        return Err(format!("n_points must be in 16..=20001 (got {n_points})"));
    }
    if order == 0 || order > m {
        return Err(format!("order must be in 1..={m} (got {order})"));
    }
    let phi = correlation(m, rms_spread_deg, true_aoa_deg, spacing)?;
    let ssfc = gen_ssfc_streams(std::slice::from_ref(&phi), StreamKey::new(seed, Purpose::SmallScale))
        .map_err(|e| e.to_string())?;
    let t = 8;
    let pilots = orthogonal_pilots(1, t, db_to_linear(snr_db)).map_err(|e| e.to_string())?;
    let mut rng = StreamKey::new(seed, Purpose::Noise).rng();
    let lsfc = LargeScaleRealization::from_beta(vec![1.0]);
    let y = received_block(&ssfc, &lsfc, &pilots, 1.0, &mut rng).map_err(|e| e.to_string())?;
    let p = pilots.pilot(0);
    let yp = matched_output(&y, &p).map_err(|e| e.to_string())?;
    let basis = dct2_basis(m, order).map_err(|e| e.to_string())?;
    let angles: Vec<f64> = (0..n_points)
        .map(|i| -90.0 + 180.0 * i as f64 / (n_points - 1) as f64)
        .collect();
    let raw: Vec<f64> = angles
        .iter()
        .map(|a| aoa_objective(&yp, &basis, spacing, a.to_radians()))
        .collect();
    let peak = raw.iter().copied().fold(f64::MIN_POSITIVE, f64::max);
    let phi_hat = aoa_search(&yp, &basis, spacing, &AoaSearchGrid::default());
    Ok(json(&AoaCurve {
        angles_deg: angles,
        objective: raw.iter().map(|v| v / peak).collect(),
        phi_hat_deg: phi_hat.to_degrees(),
        true_deg: true_aoa_deg,
    }))
}
