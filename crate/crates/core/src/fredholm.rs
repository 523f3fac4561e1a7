//! The deformed Airy kernel
//! `K_{s,t}(x, y) = int dr Ai(x + r) Ai(y + r) / (1 + s^{-1} exp(-t^{1/3} r))`,
//! its Fredholm determinant on `L^2[0, inf)` by Nystrom discretization, and
//! the Monte-Carlo side `E[prod_i 1 / (1 + s exp(-t^{1/3} lambda_i))]` over
//! spectra of the `beta = 2` stochastic Airy operator.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{require, LabError, Result};
use crate::linalg::{dense_symmetric_eigenvalues, lu_log_det};
use crate::noise::McEstimate;
use crate::quadrature::QuadratureGrid;
use crate::special_fn::{ai, ai_prime};
use crate::stochastic_airy::{sao_spectrum, SaoConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelParams {
    pub s: f64,
    pub t: f64,
}

impl KernelParams {
    pub fn new(s: f64, t: f64) -> Result<Self> {
        require(s > 0.0 && s.is_finite() && t > 0.0 && t.is_finite(), || {
            LabError::Domain(format!("s and t must be positive, got s={s}, t={t}"))
        })?;
        Ok(KernelParams { s, t })
    }

    /// `1 / (1 + s^{-1} exp(-t^{1/3} r))`, a logistic function of
    /// `t^{1/3} r + ln s`.
    pub fn fermi(&self, r: f64) -> f64 {
        let u = self.t.cbrt() * r + self.s.ln();
        if u >= 0.0 {
            1.0 / (1.0 + (-u).exp())
        } else {
            let e = u.exp();
            e / (1.0 + e)
        }
    }

    /// Eigenvalues above this give factors `1/(1 + s e^{-t^{1/3} lambda})`
    /// within `1e-15` of one.
    pub fn truncation_level(&self) -> f64 {
        (15.0 * std::f64::consts::LN_10 + self.s.ln()) / self.t.cbrt()
    }
}

/// Resolution of the Nystrom discretization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FredholmSetup {
    /// Right end of the truncated outer domain `[0, x_max]`.
    pub x_max: f64,
    /// Gauss-Legendre nodes on the outer domain.
    pub outer_n: usize,
    /// Gauss-Legendre nodes per unit-length panel of the inner `r` integral.
    pub inner_per_panel: usize,
    /// Largest accepted change under refinement.
    pub tolerance: f64,
}

impl Default for FredholmSetup {
    fn default() -> Self {
        FredholmSetup { x_max: 16.0, outer_n: 60, inner_per_panel: 16, tolerance: 1e-8 }
    }
}

impl FredholmSetup {
    pub fn new(x_max: f64, outer_n: usize, inner_per_panel: usize) -> Result<Self> {
        require(x_max > 0.0 && x_max.is_finite(), || {
            LabError::Config(format!("x_max must be positive, got {x_max}"))
        })?;
        require(outer_n >= 40, || LabError::Config(format!("need at least 40 outer nodes, got {outer_n}")))?;
        require(inner_per_panel >= 4, || LabError::Config("need at least 4 inner nodes per panel".into()))?;
        Ok(FredholmSetup { x_max, outer_n, inner_per_panel, ..Default::default() })
    }

    pub fn outer_grid(&self) -> Result<QuadratureGrid> {
        QuadratureGrid::gauss_legendre(self.outer_n, 0.0, self.x_max)
    }

    /// Panels of width at most one on `[-40/t^{1/3}, 40]`.
    pub fn inner_grid(&self, params: &KernelParams) -> Result<QuadratureGrid> {
        inner_grid_on(-40.0 / params.t.cbrt(), 40.0, self.inner_per_panel)
    }

    fn refined(&self) -> FredholmSetup {
        FredholmSetup {
            outer_n: self.outer_n + self.outer_n / 2,
            inner_per_panel: self.inner_per_panel + self.inner_per_panel / 2,
            ..*self
        }
    }
}

fn inner_grid_on(lo: f64, hi: f64, per_panel: usize) -> Result<QuadratureGrid> {
    let panels = (hi - lo).ceil() as usize;
    let edges: Vec<f64> = (0..=panels).map(|k| lo + (hi - lo) * k as f64 / panels as f64).collect();
    let g = QuadratureGrid::composite(&edges, per_panel)?;
    QuadratureGrid::new(g.nodes().to_vec(), g.weights().to_vec(), lo, hi)
}

/// `K_{s,t}(x, y)` by the quadrature `grid` over `r`.
pub fn kernel_eval(x: f64, y: f64, params: &KernelParams, grid: &QuadratureGrid) -> f64 {
    weighted_airy_product(x, y, grid, |r| params.fermi(r))
}

fn weighted_airy_product(x: f64, y: f64, grid: &QuadratureGrid, weight: impl Fn(f64) -> f64) -> f64 {
    // accumulate in a fixed order of the pair so that K(x,y) == K(y,x) bitwise
    let (a, b) = if x <= y { (x, y) } else { (y, x) };
    grid.nodes()
        .iter()
        .zip(grid.weights())
        .map(|(&r, &w)| w * weight(r) * ai(a + r) * ai(b + r))
        .sum()
}

/// `int_0^inf Ai(x + r) Ai(y + r) dr` by the quadrature `grid`, which
/// should cover `[0, R]` with `R` large.
pub fn airy_kernel_by_quadrature(x: f64, y: f64, grid: &QuadratureGrid) -> f64 {
    weighted_airy_product(x, y, grid, |r| if r >= 0.0 { 1.0 } else { 0.0 })
}

/// Closed form `(Ai(x) Ai'(y) - Ai'(x) Ai(y)) / (x - y)`, with
/// `Ai'(x)^2 - x Ai(x)^2` on the diagonal.
pub fn airy_kernel(x: f64, y: f64) -> f64 {
    if (x - y).abs() < 1e-7 * (1.0 + x.abs()) {
        let m = 0.5 * (x + y);
        let (a, ap) = (ai(m), ai_prime(m));
        ap * ap - m * a * a
    } else {
        (ai(x) * ai_prime(y) - ai_prime(x) * ai(y)) / (x - y)
    }
}

/// Symmetrized Nystrom matrix `sqrt(w_i) K(x_i, x_j) sqrt(w_j)`.
pub fn nystrom_matrix(params: &KernelParams, setup: &FredholmSetup) -> Result<DMatrix<f64>> {
    let outer = setup.outer_grid()?;
    let inner = setup.inner_grid(params)?;
    let n = outer.len();
    // A[i][k] = Ai(x_i + r_k) sqrt(w_k fermi(r_k))
    let cols: Vec<f64> = inner
        .nodes()
        .iter()
        .zip(inner.weights())
        .map(|(&r, &w)| (w * params.fermi(r)).sqrt())
        .collect();
    let rows: Vec<Vec<f64>> = outer
        .nodes()
        .iter()
        .map(|&x| inner.nodes().iter().zip(&cols).map(|(&r, &c)| ai(x + r) * c).collect())
        .collect();
    let sw: Vec<f64> = outer.weights().iter().map(|w| w.sqrt()).collect();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let k: f64 = rows[i].iter().zip(&rows[j]).map(|(a, b)| a * b).sum();
            let v = sw[i] * k * sw[j];
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    Ok(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FredholmValue {
    pub value: f64,
    pub log_value: f64,
    /// Change of the determinant between the requested and refined grids.
    pub refinement_change: f64,
    pub outer_n: usize,
}

fn det_at(params: &KernelParams, setup: &FredholmSetup) -> Result<(f64, f64)> {
    let k = nystrom_matrix(params, setup)?;
    let n = k.nrows();
    let mut rows = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            rows.push(if i == j { 1.0 } else { 0.0 } - k[(i, j)]);
        }
    }
    let (sign, log) = lu_log_det(rows, n);
    require(sign > 0.0, || {
        LabError::Resolution(format!("Nystrom determinant is not positive (sign {sign})"))
    })?;
    Ok((log.exp(), log))
}

/// `det(I - K_{s,t})` on `L^2[0, x_max]`, accepted only when a refinement
/// of both quadratures moves it by at most `setup.tolerance`.
pub fn fredholm_det(params: &KernelParams, setup: &FredholmSetup) -> Result<FredholmValue> {
    let (value, log_value) = det_at(params, setup)?;
    let (finer, _) = det_at(params, &setup.refined())?;
    let change = (finer - value).abs();
    require(change <= setup.tolerance, || {
        LabError::Resolution(format!(
            "determinant moved by {change:e} under refinement (tolerance {:e})",
            setup.tolerance
        ))
    })?;
    Ok(FredholmValue { value, log_value, refinement_change: change, outer_n: setup.outer_n })
}

/// `prod_i 1 / (1 + s exp(-t^{1/3} lambda_i))` over eigenvalues up to the
/// truncation level.
pub fn laplace_functional(eigenvalues: &[f64], params: &KernelParams) -> f64 {
    let cut = params.truncation_level();
    let t13 = params.t.cbrt();
    let ln_s = params.s.ln();
    let log: f64 = eigenvalues
        .iter()
        .take_while(|&&l| l <= cut)
        .map(|&l| -softplus(ln_s - t13 * l))
        .sum();
    log.exp()
}

fn check_sao(config: &SaoConfig, params: &[KernelParams]) -> Result<()> {
    require(config.beta == 2.0, || {
        LabError::Domain(format!("the Airy point process identity needs beta = 2, got {}", config.beta))
    })?;
    for p in params {
        let need = p.truncation_level();
        require(config.lambda_cap >= need, || {
            LabError::Incomplete(format!(
                "lambda_cap {} is below the truncation level {need} for s={}, t={}",
                config.lambda_cap, p.s, p.t
            ))
        })?;
    }
    Ok(())
}

/// Monte-Carlo estimate of `E[prod_i 1/(1 + s e^{-t^{1/3} lambda_i})]` over
/// `beta = 2` SAO spectra.
pub fn laplace_transform_mc(params: &KernelParams, config: &SaoConfig, n_samples: usize) -> Result<McEstimate> {
    Ok(laplace_transform_mc_batch(std::slice::from_ref(params), config, n_samples)?.remove(0))
}

/// As [`laplace_transform_mc`] for several parameter pairs evaluated on the
/// same SAO samples.
pub fn laplace_transform_mc_batch(
    params: &[KernelParams],
    config: &SaoConfig,
    n_samples: usize,
) -> Result<Vec<McEstimate>> {
    check_sao(config, params)?;
    require(n_samples > 1, || LabError::Config("need at least two samples".into()))?;
    let values = (0..n_samples as u64)
        .into_par_iter()
        .map(|i| {
            let s = sao_spectrum(config, &config.path(i))?;
            Ok(params.iter().map(|p| laplace_functional(s.eigenvalues(), p)).collect::<Vec<f64>>())
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    (0..params.len())
        .map(|k| {
            let column: Vec<f64> = values.iter().map(|v| v[k]).collect();
            McEstimate::from_samples(&column, config.seed)
        })
        .collect()
}

/// Smallest eigenvalue of the Nystrom matrix; the kernel is a Gram kernel,
/// so this should be nonnegative up to rounding.
pub fn nystrom_min_eigenvalue(params: &KernelParams, setup: &FredholmSetup) -> Result<f64> {
    let m = nystrom_matrix(params, setup)?;
    Ok(dense_symmetric_eigenvalues(&m)[0])
}

/// `F(x) = exp(-e^x)`.
pub fn proxy_f(x: f64) -> f64 {
    if x > 709.0 {
        0.0
    } else {
        (-x.exp()).exp()
    }
}

/// `psi_{t,z}(a) = log(1 + exp(-t (z + a)))`.
pub fn proxy_psi(a: f64, t: f64, z: f64) -> f64 {
    softplus(-t * (z + a))
}

fn softplus(u: f64) -> f64 {
    if u > 0.0 {
        u + (-u).exp().ln_1p()
    } else {
        u.exp().ln_1p()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn p(s: f64, t: f64) -> KernelParams {
        KernelParams::new(s, t).unwrap()
    }

    #[test]
    fn params_are_validated() {
        assert!(KernelParams::new(0.0, 1.0).is_err());
        assert!(KernelParams::new(1.0, -1.0).is_err());
        assert!(FredholmSetup::new(16.0, 20, 16).is_err());
        let q = p(1.0, 1.0);
        assert_eq!(q.fermi(0.0), 0.5);
        assert!(q.fermi(-800.0) >= 0.0 && q.fermi(800.0) == 1.0);
    }

    #[test]
    fn kernel_is_symmetric_and_decays() {
        let q = p(1.0, 1.0);
        let g = FredholmSetup::default().inner_grid(&q).unwrap();
        for &(x, y) in &[(0.0, 1.0), (0.3, 7.7), (2.5, 2.5001), (12.0, 0.1)] {
            assert_eq!(kernel_eval(x, y, &q, &g), kernel_eval(y, x, &q, &g));
        }
        assert!(kernel_eval(0.0, 0.0, &q, &g) > 0.0);
        assert!(kernel_eval(30.0, 30.0, &q, &g).abs() < 1e-10);
    }

    #[test]
    fn hard_edge_reproduces_the_airy_kernel() {
        let g = inner_grid_on(0.0, 40.0, 24).unwrap();
        for &(x, y) in &[(0.0, 0.0), (0.5, 1.5), (-2.0, 1.0), (3.0, 3.0), (-4.0, -1.5)] {
            let a = airy_kernel_by_quadrature(x, y, &g);
            let b = airy_kernel(x, y);
            assert!((a - b).abs() < 1e-10, "({x},{y}): {a} vs {b}");
        }
        // a steep Fermi factor at s = 1 approaches the indicator of r > 0
        let q = p(1.0, 1e9);
        let mut edges: Vec<f64> = (-40..=40).map(|k| k as f64 * 1e-3).collect();
        edges.extend((1..=40).map(|k| k as f64));
        let steep = QuadratureGrid::composite(&edges, 24).unwrap();
        for &(x, y) in &[(0.0, 0.0), (0.5, 1.5), (2.0, 3.0)] {
            let a = kernel_eval(x, y, &q, &steep);
            assert!((a - airy_kernel(x, y)).abs() < 1e-6, "({x},{y})");
        }
    }

    #[test]
    fn determinant_limits_and_monotonicity() {
        let setup = FredholmSetup::default();
        let tiny = fredholm_det(&p(1e-12, 1.0), &setup).unwrap();
        assert!((tiny.value - 1.0).abs() < 1e-10);
        let d: Vec<f64> = [0.1, 1.0, 10.0].iter().map(|&s| fredholm_det(&p(s, 1.0), &setup).unwrap().value).collect();
        assert!(d.iter().all(|&v| v > 0.0 && v < 1.0));
        assert!(d[0] > d[1] && d[1] > d[2], "{d:?}");
    }

    #[test]
    fn hard_edge_determinant_is_the_gue_edge_law_at_zero() {
        // det(I - K_Ai) on L^2(0, inf) = F_2(0) ~ 0.96937
        let outer = QuadratureGrid::gauss_legendre(60, 0.0, 16.0).unwrap();
        let n = outer.len();
        let mut m = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let (xi, xj) = (outer.nodes()[i], outer.nodes()[j]);
                let k = (outer.weights()[i] * outer.weights()[j]).sqrt() * airy_kernel(xi, xj);
                m.push(if i == j { 1.0 } else { 0.0 } - k);
            }
        }
        let (sign, log) = lu_log_det(m, n);
        assert_eq!(sign, 1.0);
        assert!((log.exp() - 0.96937).abs() < 1e-4, "{}", log.exp());
    }

    #[test]
    fn refinement_gate_rejects_coarse_grids() {
        let coarse = FredholmSetup { inner_per_panel: 2, ..FredholmSetup::default() };
        assert!(matches!(fredholm_det(&p(10.0, 0.05), &coarse), Err(LabError::Resolution(_))));
        let strict = FredholmSetup { tolerance: 0.0, ..FredholmSetup::default() };
        assert!(matches!(fredholm_det(&p(1.0, 1.0), &strict), Err(LabError::Resolution(_))));
    }

    #[test]
    fn nystrom_matrix_is_positive_semidefinite() {
        for &(s, t) in &[(1.0, 1.0), (0.5, 1.0), (2.0, 0.5), (20.0, 3.0)] {
            let m = nystrom_min_eigenvalue(&p(s, t), &FredholmSetup::default()).unwrap();
            assert!(m >= -1e-10, "{m}");
        }
    }

    #[test]
    fn truncation_rule_bounds_dropped_factors() {
        for &(s, t) in &[(1.0, 1.0), (0.5, 1.0), (2.0, 0.5), (1e3, 8.0)] {
            let q = p(s, t);
            let l = q.truncation_level();
            let x = s * (-t.cbrt() * l).exp();
            assert!((x - 1e-15).abs() < 1e-26, "{x}");
        }
        let q = p(1.0, 1.0);
        let l = q.truncation_level();
        assert_eq!(laplace_functional(&[l + 1.0, l + 2.0], &q), 1.0);
    }

    #[test]
    fn mc_side_validates_beta_and_cap() {
        let q = p(1.0, 1.0);
        let c = SaoConfig::new(1.0, 40.0, 1024, 40.0, 0).unwrap();
        assert!(matches!(laplace_transform_mc(&q, &c, 10), Err(LabError::Domain(_))));
        let c = SaoConfig::new(2.0, 40.0, 1024, 20.0, 0).unwrap();
        assert!(matches!(laplace_transform_mc(&q, &c, 10), Err(LabError::Incomplete(_))));
        let c = SaoConfig::new(2.0, 40.0, 1024, 40.0, 0).unwrap();
        let e = laplace_transform_mc(&p(1e-30, 1.0), &c, 20).unwrap();
        assert!((e.mean - 1.0).abs() < 1e-25);
    }

    #[test]
    fn proxy_examples() {
        assert!((proxy_f(-40.0) - 1.0).abs() <= 1e-15);
        assert!(proxy_f(5.0) <= (-(5f64.exp())).exp());
        assert_eq!(proxy_f(1e6), 0.0);
        assert_eq!(proxy_psi(1.0, 3.0, -1.0), 2f64.ln());
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let mut prev = f64::INFINITY;
        for k in 0..200 {
            let f = proxy_f(-20.0 + 0.2 * k as f64);
            assert!(f <= prev);
            prev = f;
        }
        for _ in 0..1000 {
            let a: f64 = rng.random_range(-10.0..10.0);
            let t: f64 = rng.random_range(0.01..100.0);
            let z: f64 = rng.random_range(-10.0..10.0);
            let u = t * (z + a);
            let gap = (proxy_psi(a, t, z) - (-u).max(0.0)).abs();
            // the subtraction itself costs a few ulps of |u|
            let slack = 4.0 * f64::EPSILON * u.abs();
            assert!(gap <= (-u.abs()).exp().ln_1p() + slack);
            assert!(gap <= (-u.abs()).exp() + slack);
        }
        assert!(proxy_psi(-1e6, 1e3, 0.0).is_finite());
    }
}
