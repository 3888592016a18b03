//! Rank-reduction bases: discrete orthogonal polynomials, DCT-2 and the
//! channel-dependent KLT.
//!
//! Every basis keeps its full `M x M` parent so the discarded directions
//! (columns `m+1..M`) stay available for bias computations.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, RwLock};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::channel::{CorrelationMatrix, SteeringDiagonal};
use crate::error::{CsiError, Result};
use crate::linalg::{complexify, CMat, CVec, HermitianEigen};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisKind {
    Polynomial,
    Dct2,
    Klt,
}

impl BasisKind {
    pub fn name(&self) -> &'static str {
        match self {
            BasisKind::Polynomial => "polynomial",
            BasisKind::Dct2 => "dct2",
            BasisKind::Klt => "klt",
        }
    }
}

/// First `m` columns `Q_m` of a unitary parent `Q`.
#[derive(Debug, Clone)]
pub struct RrBasis {
    kind: BasisKind,
    m: usize,
    parent: Arc<CMat>,
    q: CMat,
    /// KLT only: eigenvalues in parent column order.
    eigenvalues: Option<Arc<Vec<f64>>>,
}

impl RrBasis {
    fn from_parent(kind: BasisKind, parent: Arc<CMat>, m: usize, eigenvalues: Option<Arc<Vec<f64>>>) -> Result<Self> {
        let big_m = parent.nrows();
        if m == 0 || m > big_m {
            return Err(CsiError::InvalidParameter(format!(
                "modeling order {m} outside 1..={big_m}"
            )));
        }
        let q = parent.columns(0, m).into_owned();
        Ok(Self {
            kind,
            m,
            parent,
            q,
            eigenvalues,
        })
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    /// Modeling order.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Antenna count.
    pub fn dim(&self) -> usize {
        self.q.nrows()
    }

    pub fn q(&self) -> &CMat {
        &self.q
    }

    pub fn parent(&self) -> &CMat {
        &self.parent
    }

    pub fn eigenvalues(&self) -> Option<&[f64]> {
        self.eigenvalues.as_deref().map(|v| v.as_slice())
    }

    /// Same parent, different order.
    pub fn with_order(&self, m: usize) -> Result<Self> {
        Self::from_parent(self.kind, Arc::clone(&self.parent), m, self.eigenvalues.clone())
    }

    /// `Q_m^H x`.
    pub fn coefficients(&self, x: &CVec) -> CVec {
        self.q.ad_mul(x)
    }

    /// `Q_m c`.
    pub fn synthesize(&self, c: &CVec) -> CVec {
        &self.q * c
    }

    /// `Q_m Q_m^H x`.
    pub fn project(&self, x: &CVec) -> CVec {
        self.synthesize(&self.coefficients(x))
    }

    /// `||Q_m^H Q_m - I_m||_F`.
    pub fn orthonormality_defect(&self) -> f64 {
        (self.q.ad_mul(&self.q) - CMat::identity(self.m, self.m)).norm()
    }
}

/// Orthonormal discrete polynomial basis: `Q` from the QR factorisation of
/// the Vandermonde matrix `[U]_ij = (i-1)^(j-1)`, columns in ascending degree.
///
/// Built with a Stieltjes recurrence and two passes of full
/// reorthogonalization per column, which spans the same nested subspaces as
/// the QR columns while staying orthonormal at `M` in the hundreds.
pub fn polynomial_basis(m_antennas: usize, m: usize) -> Result<RrBasis> {
    check_order(m_antennas, m)?;
    RrBasis::from_parent(BasisKind::Polynomial, Arc::new(polynomial_parent(m_antennas)), m, None)
}

fn polynomial_parent(n: usize) -> CMat {
    let mut q = DMatrix::<f64>::zeros(n, n);
    // Nodes rescaled to [-1, 1]; affine maps preserve polynomial degree and
    // the sign of the leading coefficient.
    let nodes: Vec<f64> = if n == 1 {
        vec![0.0]
    } else {
        (0..n).map(|i| (2.0 * i as f64 - (n - 1) as f64) / (n - 1) as f64).collect()
    };
    q.column_mut(0).fill(1.0 / (n as f64).sqrt());
    for j in 1..n {
        let mut v: nalgebra::DVector<f64> = q.column(j - 1).component_mul(&nalgebra::DVector::from_column_slice(&nodes));
        for _ in 0..2 {
            for i in 0..j {
                let c = q.column(i).dot(&v);
                v.axpy(-c, &q.column(i), 1.0);
            }
        }
        let norm = v.norm();
        q.column_mut(j).copy_from(&(v / norm));
    }
    complexify(&q)
}

/// Orthonormal DCT-2 basis `[Q]_ij = q_j cos(pi (2i-1)(j-1) / (2M))`.
pub fn dct2_basis(m_antennas: usize, m: usize) -> Result<RrBasis> {
    check_order(m_antennas, m)?;
    RrBasis::from_parent(BasisKind::Dct2, Arc::new(dct2_parent(m_antennas)), m, None)
}

fn dct2_parent(n: usize) -> CMat {
    let nf = n as f64;
    let q = DMatrix::<f64>::from_fn(n, n, |i, j| {
        let scale = if j == 0 { (1.0 / nf).sqrt() } else { (2.0 / nf).sqrt() };
        scale * (PI * (2 * i + 1) as f64 * j as f64 / (2.0 * nf)).cos()
    });
    complexify(&q)
}

/// KLT basis: eigenvectors of `Phi` (or of `W^H Phi W` when a steering
/// diagonal is given) in descending eigenvalue order.
pub fn klt_basis(phi: &CorrelationMatrix, w: Option<&SteeringDiagonal>, m: usize) -> Result<RrBasis> {
    check_order(phi.dim(), m)?;
    let target = match w {
        Some(w) => {
            if w.m() != phi.dim() {
                return Err(CsiError::DimensionMismatch(format!(
                    "steering has {} entries, correlation is {}x{}",
                    w.m(),
                    phi.dim(),
                    phi.dim()
                )));
            }
            w.align(phi.phi())
        }
        None => phi.phi().clone(),
    };
    let eig = HermitianEigen::new(&target)?;
    RrBasis::from_parent(BasisKind::Klt, Arc::new(eig.vectors), m, Some(Arc::new(eig.values)))
}

fn check_order(m_antennas: usize, m: usize) -> Result<()> {
    if m_antennas == 0 || m == 0 || m > m_antennas {
        return Err(CsiError::InvalidParameter(format!(
            "modeling order {m} outside 1..={m_antennas}"
        )));
    }
    Ok(())
}

/// Captured-energy fraction `tr(Q_m^H W^H Phi W Q_m) / M`.
pub fn energy_fraction(basis: &RrBasis, phi: &CorrelationMatrix, w: Option<&SteeringDiagonal>) -> Result<f64> {
    if basis.dim() != phi.dim() {
        return Err(CsiError::DimensionMismatch(format!(
            "basis has {} rows, correlation is {}x{}",
            basis.dim(),
            phi.dim(),
            phi.dim()
        )));
    }
    let aligned = match w {
        Some(w) => w.align(phi.phi()),
        None => phi.phi().clone(),
    };
    let captured = (basis.q().adjoint() * aligned * basis.q()).trace().re;
    Ok(captured / phi.phi().trace().re)
}

/// Energy fraction for every order `1..=M` at once (prefix sums over the parent).
pub fn energy_profile(parent: &CMat, aligned_phi: &CMat) -> Vec<f64> {
    let total = aligned_phi.trace().re;
    let proj = parent.adjoint() * aligned_phi * parent;
    let mut acc = 0.0;
    (0..parent.ncols())
        .map(|j| {
            acc += proj[(j, j)].re;
            acc / total
        })
        .collect()
}

/// Shared parent bases for the predetermined kinds, keyed by `(kind, M)`.
#[derive(Debug, Default)]
pub struct BasisCache {
    parents: RwLock<HashMap<(BasisKind, usize), Arc<CMat>>>,
}

impl BasisCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, kind: BasisKind, m_antennas: usize, m: usize) -> Result<RrBasis> {
        check_order(m_antennas, m)?;
        if kind == BasisKind::Klt {
            return Err(CsiError::InvalidParameter(
                "KLT bases are channel-dependent and are not cached".into(),
            ));
        }
        if let Some(parent) = self.parents.read().expect("basis cache poisoned").get(&(kind, m_antennas)) {
            return RrBasis::from_parent(kind, Arc::clone(parent), m, None);
        }
        let parent = Arc::new(match kind {
            BasisKind::Polynomial => polynomial_parent(m_antennas),
            BasisKind::Dct2 => dct2_parent(m_antennas),
            BasisKind::Klt => unreachable!(),
        });
        let parent = Arc::clone(
            self.parents
                .write()
                .expect("basis cache poisoned")
                .entry((kind, m_antennas))
                .or_insert(parent),
        );
        RrBasis::from_parent(kind, parent, m, None)
    }
}

/// Builds a predetermined basis by kind.
pub fn predetermined_basis(kind: BasisKind, m_antennas: usize, m: usize) -> Result<RrBasis> {
    match kind {
        BasisKind::Polynomial => polynomial_basis(m_antennas, m),
        BasisKind::Dct2 => dct2_basis(m_antennas, m),
        BasisKind::Klt => Err(CsiError::InvalidParameter(
            "KLT needs a correlation matrix; use klt_basis".into(),
        )),
    }
}
