//! Decoupled channel estimation for uplink massive MIMO.
//!
//! Large-scale fading coefficients are estimated from the received pilot
//! energy alone, and the small-scale fading vectors are then estimated with
//! rank-reduced (polynomial, DCT-2 or KLT) bases, optionally aligned to the
//! user's mean angle of arrival. An EM-type joint estimator is provided as a
//! baseline, and the [`experiment`] module runs seeded Monte Carlo sweeps.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod basis;
pub mod channel;
pub mod em;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod lsfc;
pub mod pilots;
pub mod quadrature;
pub mod rng;
pub mod ssfc;

pub use error::{CsiError, Result};
