//! Finite Hill operators `H_j = -d^2/dy^2 + j xi + (2/sqrt(beta)) W'` on
//! `[0, xi]`, discretized on `grid_n` cells of width `h = xi / grid_n`.
//!
//! Dirichlet: interior nodes `y_i = i h`, `i = 1..grid_n-1`. Periodic: nodes
//! `i = 0..grid_n-1` with the ring closed by corner entries. Node `i` carries
//! the noise of cell `i` as `Delta W_i / h`; the Riccati flow sees the same
//! increments as a potential that is constant on each cell.

use serde::{Deserialize, Serialize};

use crate::error::{require, LabError, Result};
use crate::linalg::{eigenvalues_in, InertiaCount, PeriodicTridiag, SymTridiag};
use crate::noise::NoisePath;
use crate::riccati::explosion_count;
use crate::spectrum::SpectrumSample;

pub(crate) const EIGEN_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Dirichlet,
    Periodic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HillConfig {
    pub j: usize,
    pub xi: f64,
    pub beta: f64,
    pub boundary: Boundary,
    pub grid_n: usize,
    pub lambda_cap: f64,
}

impl HillConfig {
    pub fn new(j: usize, xi: f64, beta: f64, boundary: Boundary, grid_n: usize, lambda_cap: f64) -> Result<Self> {
        require(xi > 0.0 && xi.is_finite(), || LabError::Config(format!("xi must be positive, got {xi}")))?;
        require(beta > 0.0 && beta.is_finite(), || {
            LabError::Domain(format!("beta must be positive, got {beta}"))
        })?;
        require(grid_n >= 16, || LabError::Config(format!("grid_n must be at least 16, got {grid_n}")))?;
        require(lambda_cap.is_finite(), || LabError::Config("lambda_cap must be finite".into()))?;
        Ok(HillConfig { j, xi, beta, boundary, grid_n, lambda_cap })
    }

    pub fn step(&self) -> f64 {
        self.xi / self.grid_n as f64
    }

    /// Constant part of the potential, `j xi`.
    pub fn floor(&self) -> f64 {
        self.j as f64 * self.xi
    }

    fn check_path(&self, path: &NoisePath) -> Result<()> {
        require(path.len() == self.grid_n, || {
            LabError::Config(format!("path has {} cells, grid has {}", path.len(), self.grid_n))
        })?;
        require((path.span() - self.xi).abs() <= 1e-12 * self.xi.max(1.0), || {
            LabError::Config(format!("path covers {} but xi = {}", path.span(), self.xi))
        })
    }

    fn noise_scale(&self) -> f64 {
        2.0 / self.beta.sqrt()
    }
}

/// Potential value seen by node or cell `i`.
fn cell_potential<'a>(config: &HillConfig, path: &'a NoisePath) -> impl Fn(usize) -> f64 + 'a {
    let h = config.step();
    let scale = config.noise_scale() / h;
    let floor = config.floor();
    move |i| floor + scale * path.increments()[i]
}

/// Symmetric tridiagonal finite-difference Dirichlet operator with node
/// potentials `v` (nodes 1..n-1, so `v.len() = n - 1`).
pub(crate) fn dirichlet_matrix(h: f64, v: Vec<f64>) -> Result<SymTridiag> {
    let inv = 1.0 / (h * h);
    let off = vec![-inv; v.len().saturating_sub(1)];
    let diag = v.into_iter().map(|x| 2.0 * inv + x).collect();
    SymTridiag::new(diag, off)
}

/// Periodic finite-difference operator with node potentials `v`.
pub(crate) fn periodic_matrix(h: f64, v: Vec<f64>) -> Result<PeriodicTridiag> {
    let inv = 1.0 / (h * h);
    let off = vec![-inv; v.len()];
    let diag = v.into_iter().map(|x| 2.0 * inv + x).collect();
    PeriodicTridiag::new(diag, off)
}

/// Eigenvalues `<= cap` of an operator as a [`SpectrumSample`].
pub(crate) fn spectrum_below<C: InertiaCount>(op: &C, cap: f64) -> Result<SpectrumSample> {
    let (lo, _) = op.gershgorin();
    let hi = cap.next_up();
    let ev = if lo < hi { eigenvalues_in(op, lo, hi, EIGEN_TOL) } else { Vec::new() };
    let ev: Vec<f64> = ev.into_iter().map(|l| l.min(cap)).collect();
    SpectrumSample::new(ev, cap, true)
}

enum HillMatrix {
    Dirichlet(SymTridiag),
    Periodic(PeriodicTridiag),
}

fn hill_matrix(config: &HillConfig, path: &NoisePath) -> Result<HillMatrix> {
    config.check_path(path)?;
    let v = cell_potential(config, path);
    let h = config.step();
    Ok(match config.boundary {
        Boundary::Dirichlet => HillMatrix::Dirichlet(dirichlet_matrix(h, (1..config.grid_n).map(&v).collect())?),
        Boundary::Periodic => HillMatrix::Periodic(periodic_matrix(h, (0..config.grid_n).map(&v).collect())?),
    })
}

/// Eigenvalues `<= lambda_cap` of the discretized Hill operator.
pub fn hill_spectrum(config: &HillConfig, path: &NoisePath) -> Result<SpectrumSample> {
    match hill_matrix(config, path)? {
        HillMatrix::Dirichlet(m) => spectrum_below(&m, config.lambda_cap),
        HillMatrix::Periodic(m) => spectrum_below(&m, config.lambda_cap),
    }
}

/// `#{eigenvalues <= lambda}` of the discretized operator, by one Sturm count.
pub fn hill_matrix_count(lambda: f64, config: &HillConfig, path: &NoisePath) -> Result<usize> {
    let l = lambda.next_up();
    Ok(match hill_matrix(config, path)? {
        HillMatrix::Dirichlet(m) => m.count_below(l),
        HillMatrix::Periodic(m) => m.count_below(l),
    })
}

/// Explosions of `g' = j xi - lambda - g^2 + (2/sqrt(beta)) W'` on `(0, xi]`.
pub fn riccati_count_hill(lambda: f64, config: &HillConfig, path: &NoisePath) -> Result<usize> {
    require(config.boundary == Boundary::Dirichlet, || {
        LabError::Config("explosion counting is defined for the Dirichlet problem".into())
    })?;
    config.check_path(path)?;
    let v = cell_potential(config, path);
    Ok(explosion_count(config.step(), (0..config.grid_n).map(v), lambda))
}
