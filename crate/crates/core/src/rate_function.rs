//! The lower-tail rate function
//!
//! ```text
//! Phi(z) = 4/(15 pi^6) (1 - pi^2 z)^{5/2} - 4/(15 pi^6) + 2/(3 pi^4) z - z^2/(2 pi^2),   z <= 0,
//! ```
//!
//! and its beta-scaled form `(2/beta)^5 Phi((beta/2)^2 z)`.
//!
//! The four terms cancel to third order at `z = 0`. With `u = -pi^2 z` and
//! `s = sqrt(1 + u)` the bracket factors as
//! `(1+u)^{5/2} - 1 - 5u/2 - 15u^2/8 = (s - 1)^3 (8 s^2 + 9 s + 3) / 8`,
//! and `s - 1 = u / (1 + s)`, which gives
//!
//! ```text
//! Phi(z) = |z|^3 (8 s^2 + 9 s + 3) / (30 (1 + s)^3)
//! ```
//!
//! with no subtraction anywhere. This form is used for every `z`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{LabError, Result};

/// A point on the graph of the rate function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatePoint {
    pub z: f64,
    pub value: f64,
}

impl RatePoint {
    pub fn at(z: f64) -> Result<Self> {
        Ok(RatePoint { z, value: phi_minus(z)? })
    }
}

/// `Phi_-(z)` for `z <= 0`.
pub fn phi_minus(z: f64) -> Result<f64> {
    if z.is_nan() || z > 0.0 {
        return Err(LabError::Domain(format!(
            "lower-tail rate function needs z <= 0, got {z}"
        )));
    }
    if z == f64::NEG_INFINITY {
        return Ok(f64::INFINITY);
    }
    let a = z.abs();
    let s = (1.0 + PI * PI * a).sqrt();
    let p = 1.0 + s;
    Ok(a * a * a * (8.0 * s * s + 9.0 * s + 3.0) / (30.0 * p * p * p))
}

/// `(2/beta)^5 Phi_-((beta/2)^2 z)`.
pub fn phi_minus_scaled(beta: f64, z: f64) -> Result<f64> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(LabError::Domain(format!("beta must be positive and finite, got {beta}")));
    }
    let half = 0.5 * beta;
    Ok(phi_minus(half * half * z)? / half.powi(5))
}
