//! The constant-drift variational problem.
//!
//! Level `j` of the localized operator lives on an interval of length
//! `xi = t^a`, with `a` in `(-1/3, 2/3)`. Its noise is tilted by a drift
//! `t^{2/3} v`, which costs `t^{a+4/3} v^2 / 2` in probability and shifts the
//! potential by `(2/sqrt(beta)) t^{2/3} v`. Balancing this cost against the
//! Weyl-law linear statistic gives the per-level objective
//!
//! ```text
//! v^2/2 + (2/(3 pi)) X_+^{3/2},   X = -z - (2/sqrt(beta)) v - nu,
//! ```
//!
//! in the continuum level variable `nu = j t^{a-2/3}`. Integrating its
//! minimum over `nu` gives the scaled rate function.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{require, LabError, Result};
use crate::quadrature::AdaptiveQuad;

/// One level of the continuum problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DriftProblem {
    pub z: f64,
    pub beta: f64,
    pub nu: f64,
}

impl DriftProblem {
    pub fn new(z: f64, beta: f64, nu: f64) -> Result<Self> {
        require(z <= 0.0 && z.is_finite(), || LabError::Domain(format!("z must be <= 0, got {z}")))?;
        require(beta > 0.0 && beta.is_finite(), || {
            LabError::Domain(format!("beta must be positive, got {beta}"))
        })?;
        require(nu >= 0.0 && nu.is_finite(), || LabError::Domain(format!("nu must be >= 0, got {nu}")))?;
        Ok(DriftProblem { z, beta, nu })
    }

    /// `X = -z - (2/sqrt(beta)) v - nu` before taking the positive part.
    pub fn gap(&self, v: f64) -> f64 {
        -self.z - 2.0 / self.beta.sqrt() * v - self.nu
    }
}

/// Time, mesoscale exponent, interval length and number of levels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiscretizationParams {
    pub t: f64,
    pub a: f64,
    pub xi: f64,
    pub n: usize,
}

impl DiscretizationParams {
    pub fn new(t: f64, a: f64, n: usize) -> Result<Self> {
        require(t > 0.0 && t.is_finite(), || LabError::Domain(format!("t must be positive, got {t}")))?;
        require(a > -1.0 / 3.0 && a < 2.0 / 3.0, || {
            LabError::Domain(format!("mesoscale exponent must lie in (-1/3, 2/3), got {a}"))
        })?;
        Ok(DiscretizationParams { t, a, xi: t.powf(a), n })
    }

    /// Levels needed to cover the deviation: `n = ceil(-z t^{2/3 - a})`.
    pub fn for_deviation(z: f64, t: f64, a: f64) -> Result<Self> {
        require(z <= 0.0 && z.is_finite(), || LabError::Domain(format!("z must be <= 0, got {z}")))?;
        let mut p = DiscretizationParams::new(t, a, 0)?;
        let raw = -z * t.powf(2.0 / 3.0 - a);
        // powf rounding must not push an exact integer up by one level
        let near = raw.round();
        let levels = if (raw - near).abs() <= 1e-12 * near.max(1.0) { near } else { raw.ceil() };
        require(levels < 1e9, || LabError::Config(format!("{levels} levels requested")))?;
        p.n = levels as usize;
        Ok(p)
    }

    /// Spacing of the continuum variable between consecutive levels.
    pub fn level_spacing(&self) -> f64 {
        self.t.powf(self.a - 2.0 / 3.0)
    }
}

/// `v^2/2 + (2/(3 pi)) X_+^{3/2}`.
pub fn drift_objective(v: f64, p: &DriftProblem) -> f64 {
    let x = p.gap(v).max(0.0);
    0.5 * v * v + 2.0 / (3.0 * PI) * x * x.sqrt()
}

/// Closed-form minimizer of [`drift_objective`].
pub fn optimal_drift(p: &DriftProblem) -> f64 {
    let w = (-p.z - p.nu).max(0.0);
    let k = 0.5 * p.beta * PI;
    let arg = k * k * w;
    // -1 + sqrt(1 + arg) written without cancellation
    let root = arg / (1.0 + (1.0 + arg).sqrt());
    4.0 / (PI * PI) * p.beta.powf(-1.5) * root
}

/// Weyl law for a shifted Dirichlet Laplacian on an interval of length `xi`:
/// `(xi/pi) sqrt((lambda - shift)_+)`.
pub fn weyl_count(lambda: f64, shift: f64, xi: f64) -> Result<f64> {
    require(xi > 0.0, || LabError::Domain(format!("interval length must be positive, got {xi}")))?;
    Ok(xi / PI * (lambda - shift).max(0.0).sqrt())
}

/// Weyl-law linear statistic of level `j` under drift `v`:
/// `-(2 t^{a+4/3} / (3 pi)) X_+^{3/2}` with `X = -z - (2/sqrt(beta)) v - j t^{a-2/3}`.
pub fn linear_statistic_drifted(
    z: f64,
    t: f64,
    beta: f64,
    v: f64,
    j: usize,
    params: &DiscretizationParams,
) -> f64 {
    let x = (-z - 2.0 / beta.sqrt() * v - j as f64 * params.level_spacing()).max(0.0);
    -2.0 * t.powf(params.a + 4.0 / 3.0) / (3.0 * PI) * x * x.sqrt()
}

/// Optimal per-level cost at `nu`.
pub fn optimal_cost(z: f64, beta: f64, nu: f64) -> f64 {
    let p = DriftProblem { z, beta, nu };
    drift_objective(optimal_drift(&p), &p)
}

/// Integral of the optimal per-level cost over `nu in [0, -z]`; equals the
/// scaled rate function.
pub fn variational_value(z: f64, beta: f64) -> Result<f64> {
    variational_value_with(z, beta, &AdaptiveQuad::new(1e-13))
}

pub fn variational_value_with(z: f64, beta: f64, quad: &AdaptiveQuad) -> Result<f64> {
    DriftProblem::new(z, beta, 0.0)?;
    if z == 0.0 {
        return Ok(0.0);
    }
    quad.integrate(|nu| optimal_cost(z, beta, nu), 0.0, -z)
}

/// Left Riemann sum over levels `j = 0..n-1` with spacing `t^{a-2/3}`.
pub fn riemann_sum_value(z: f64, beta: f64, params: &DiscretizationParams) -> Result<f64> {
    DriftProblem::new(z, beta, 0.0)?;
    let dnu = params.level_spacing();
    let total: f64 = (0..params.n).map(|j| optimal_cost(z, beta, j as f64 * dnu)).sum();
    Ok(dnu * total)
}
