//! The stochastic Airy operator `-d^2/dx^2 + x + (2/sqrt(beta)) B'` on
//! `[0, domain_l]` with Dirichlet ends: matrix spectra, Riccati explosion
//! counts, the localization sandwich and the importance-sampled large
//! deviation estimator.
//!
//! Discretization matches the Hill operators: interior nodes `x_i = i h`
//! carry `x_i + (2/sqrt(beta)) Delta B_i / h`, while the Riccati flow uses
//! cell `k` with potential `(k + 1/2) h + (2/sqrt(beta)) Delta B_k / h`.
//!
//! Drift convention: a drift `t^{2/3} v` per unit length is added to the
//! Brownian motion itself, so the potential moves by
//! `(2/sqrt(beta)) t^{2/3} v` and the Girsanov cost of a window of length
//! `xi` is `t^{a+4/3} v^2 / 2`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{require, LabError, Result};
use crate::hill::{dirichlet_matrix, hill_spectrum, spectrum_below, Boundary, HillConfig};
use crate::linalg::{InertiaCount, SymTridiag};
use crate::noise::{derive_seed, tag, LogMean, McEstimate, NoisePath};
use crate::riccati::{explosion_cells, explosion_count};
use crate::spectrum::{linear_statistic, SpectrumSample};
use crate::variational::{optimal_drift, DiscretizationParams, DriftProblem};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SaoConfig {
    pub beta: f64,
    pub domain_l: f64,
    pub grid_n: usize,
    pub lambda_cap: f64,
    pub seed: u64,
}

impl SaoConfig {
    pub fn new(beta: f64, domain_l: f64, grid_n: usize, lambda_cap: f64, seed: u64) -> Result<Self> {
        require(beta > 0.0 && beta.is_finite(), || {
            LabError::Domain(format!("beta must be positive, got {beta}"))
        })?;
        require(domain_l > 0.0 && domain_l.is_finite(), || {
            LabError::Config(format!("domain length must be positive, got {domain_l}"))
        })?;
        require(grid_n >= 16, || LabError::Config(format!("grid_n must be at least 16, got {grid_n}")))?;
        require(lambda_cap.is_finite(), || LabError::Config("lambda_cap must be finite".into()))?;
        Ok(SaoConfig { beta, domain_l, grid_n, lambda_cap, seed })
    }

    pub fn step(&self) -> f64 {
        self.domain_l / self.grid_n as f64
    }

    /// Whether eigenfunctions below the cap have room to decay before the
    /// far boundary (`domain_l >= 2 lambda_cap`). Advisory only.
    pub fn truncation_margin_ok(&self) -> bool {
        self.lambda_cap <= 0.0 || self.domain_l >= 2.0 * self.lambda_cap
    }

    pub fn with_cap(&self, lambda_cap: f64) -> SaoConfig {
        SaoConfig { lambda_cap, ..*self }
    }

    /// Brownian path over the whole domain for sample `index`.
    pub fn path(&self, index: u64) -> NoisePath {
        NoisePath::brownian(self.step(), self.grid_n, derive_seed(self.seed, &[tag("sao"), index]))
    }

    fn check_path(&self, path: &NoisePath) -> Result<()> {
        require(path.len() == self.grid_n, || {
            LabError::Config(format!("path has {} cells, grid has {}", path.len(), self.grid_n))
        })?;
        require((path.step() - self.step()).abs() <= 1e-12 * self.step(), || {
            LabError::Config(format!("path step {} differs from grid step {}", path.step(), self.step()))
        })
    }

    fn noise_scale(&self) -> f64 {
        2.0 / self.beta.sqrt()
    }
}

fn sao_matrix(config: &SaoConfig, path: &NoisePath) -> Result<SymTridiag> {
    config.check_path(path)?;
    let h = config.step();
    let s = config.noise_scale() / h;
    let inc = path.increments();
    let v = (1..config.grid_n).map(|i| i as f64 * h + s * inc[i]).collect();
    dirichlet_matrix(h, v)
}

fn cell_potentials<'a>(config: &SaoConfig, path: &'a NoisePath) -> impl Iterator<Item = f64> + 'a {
    let h = config.step();
    let s = config.noise_scale() / h;
    path.increments().iter().enumerate().map(move |(k, d)| (k as f64 + 0.5) * h + s * d)
}

/// Eigenvalues `<= lambda_cap` of the discretized operator.
pub fn sao_spectrum(config: &SaoConfig, path: &NoisePath) -> Result<SpectrumSample> {
    spectrum_below(&sao_matrix(config, path)?, config.lambda_cap)
}

/// `#{eigenvalues <= lambda}` from one Sturm count.
pub fn sao_matrix_count(lambda: f64, config: &SaoConfig, path: &NoisePath) -> Result<usize> {
    Ok(sao_matrix(config, path)?.count_below(lambda.next_up()))
}

/// Explosions of `g' = x - lambda - g^2 + (2/sqrt(beta)) B'` on `(0, domain_l]`.
pub fn riccati_count_sao(lambda: f64, config: &SaoConfig, path: &NoisePath) -> Result<usize> {
    config.check_path(path)?;
    Ok(explosion_count(config.step(), cell_potentials(config, path), lambda))
}

/// Explosion counts of the SAO flow inside consecutive windows of
/// `cells_per_window` cells.
pub fn riccati_window_counts(
    lambda: f64,
    config: &SaoConfig,
    path: &NoisePath,
    cells_per_window: usize,
) -> Result<Vec<usize>> {
    config.check_path(path)?;
    require(cells_per_window > 0, || LabError::Config("empty window".into()))?;
    let windows = config.grid_n.div_ceil(cells_per_window);
    let mut counts = vec![0usize; windows];
    for c in explosion_cells(config.step(), cell_potentials(config, path), lambda) {
        counts[c / cells_per_window] += 1;
    }
    Ok(counts)
}

/// What a drifted path looks like: drift `t^{2/3} v_j` on level `j`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriftPlan {
    pub base_seed: u64,
    pub drift_per_level: Vec<f64>,
    pub t: f64,
    pub xi: f64,
}

impl DriftPlan {
    pub fn new(base_seed: u64, drift_per_level: Vec<f64>, t: f64, xi: f64) -> Result<Self> {
        require(drift_per_level.iter().all(|v| v.is_finite()), || {
            LabError::Domain("drifts must be finite".into())
        })?;
        require(t > 0.0 && xi > 0.0, || LabError::Domain("t and xi must be positive".into()))?;
        Ok(DriftPlan { base_seed, drift_per_level, t, xi })
    }

    /// Drift rate on the Brownian motion at level `j`.
    pub fn drift_rate(&self, j: usize) -> f64 {
        self.drift_per_level.get(j).copied().unwrap_or(0.0) * self.t.powf(2.0 / 3.0)
    }
}

/// Exact log Radon-Nikodym derivative of the undrifted against the drifted
/// law, `sum_k (-theta Delta W_k + theta^2 h / 2)`, for increments sampled
/// under the drifted law.
pub fn girsanov_log_weight(theta: f64, h: f64, increments: &[f64]) -> f64 {
    if theta == 0.0 {
        return 0.0;
    }
    let total: f64 = increments.iter().sum();
    -theta * total + 0.5 * theta * theta * h * increments.len() as f64
}

/// Path on level `j` (sample `index`) with drift `t^{2/3} v_j` and its
/// Girsanov log weight.
pub fn sample_drifted_path(
    plan: &DriftPlan,
    level_j: usize,
    index: u64,
    grid_n: usize,
) -> Result<(NoisePath, f64)> {
    require(grid_n > 0, || LabError::Config("grid_n must be positive".into()))?;
    let h = plan.xi / grid_n as f64;
    let seed = derive_seed(plan.base_seed, &[tag("drifted"), level_j as u64, index]);
    let theta = plan.drift_rate(level_j);
    let path = NoisePath::brownian(h, grid_n, seed).with_drift(theta);
    let w = girsanov_log_weight(theta, h, path.increments());
    Ok((path, w))
}

/// Monte-Carlo estimates of the three members of the localization sandwich.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SandwichReport {
    pub lower: McEstimate,
    pub middle: McEstimate,
    pub upper: McEstimate,
    pub lower_levels: Vec<McEstimate>,
    pub upper_levels: Vec<McEstimate>,
    pub shifted_sao: McEstimate,
}

impl SandwichReport {
    /// `lower <= middle <= upper`, each up to `k` combined standard errors.
    pub fn ordered_within(&self, k: f64) -> bool {
        let ok = |a: &McEstimate, b: &McEstimate| {
            a.mean <= b.mean + k * (a.stderr.powi(2) + b.stderr.powi(2)).sqrt()
        };
        ok(&self.lower, &self.middle) && ok(&self.middle, &self.upper)
    }
}

/// Grid resolutions for the sandwich members.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SandwichGrids {
    pub hill_grid_n: usize,
    pub sao: SaoConfig,
}

/// `E[exp(linear statistic)]` for every level of the lower and upper
/// products, the SAO itself and the shifted SAO.
pub fn sandwich_check(
    z: f64,
    t: f64,
    beta: f64,
    params: &DiscretizationParams,
    n_samples: usize,
    grids: &SandwichGrids,
) -> Result<SandwichReport> {
    require(z <= 0.0, || LabError::Domain(format!("z must be <= 0, got {z}")))?;
    require(n_samples > 1, || LabError::Config("need at least two samples".into()))?;
    require(params.n > 0, || LabError::Config("need at least one level".into()))?;
    require(grids.sao.beta == beta, || LabError::Config("SAO config has a different beta".into()))?;
    let seed = grids.sao.seed;
    let threshold = -z * t.powf(2.0 / 3.0);
    let n = params.n;

    let level = |j: usize, side: &str| -> Result<McEstimate> {
        let root = derive_seed(seed, &[tag("sandwich"), tag(side), j as u64]);
        let values = hill_level_samples(z, t, beta, params.xi, j, grids.hill_grid_n, n_samples, root)?;
        McEstimate::from_samples(&values, root)
    };
    let sao_side = |side: &str, shift: f64| -> Result<McEstimate> {
        let cfg = SaoConfig { seed: derive_seed(seed, &[tag("sandwich"), tag(side)]), ..grids.sao };
        let cfg = cfg.with_cap(threshold - shift);
        let values = (0..n_samples as u64)
            .into_par_iter()
            .map(|i| {
                let s = sao_spectrum(&cfg, &cfg.path(i))?.shifted(shift);
                Ok(linear_statistic(&s, z, t)?.exp())
            })
            .collect::<Result<Vec<f64>>>()?;
        McEstimate::from_samples(&values, cfg.seed)
    };

    let lower_levels = (0..n).map(|j| level(j, "lower")).collect::<Result<Vec<_>>>()?;
    let upper_levels = (1..=n).map(|j| level(j, "upper")).collect::<Result<Vec<_>>>()?;
    let middle = sao_side("middle", 0.0)?;
    let shifted_sao = sao_side("shifted", n as f64 * params.xi)?;

    let mut lower_factors = lower_levels.clone();
    lower_factors.push(shifted_sao);
    let lower = McEstimate::product(&lower_factors, seed).scaled((-(n as f64)).exp());
    let upper = McEstimate::product(&upper_levels, seed);
    Ok(SandwichReport { lower, middle, upper, lower_levels, upper_levels, shifted_sao })
}

/// Samples of `exp(linear statistic)` for the Dirichlet Hill operator of
/// level `j`, one independent path per sample derived from `root`.
#[allow(clippy::too_many_arguments)]
pub fn hill_level_samples(
    z: f64,
    t: f64,
    beta: f64,
    xi: f64,
    j: usize,
    grid_n: usize,
    n_samples: usize,
    root: u64,
) -> Result<Vec<f64>> {
    let cfg = HillConfig::new(j, xi, beta, Boundary::Dirichlet, grid_n, -z * t.powf(2.0 / 3.0))?;
    (0..n_samples as u64)
        .into_par_iter()
        .map(|i| {
            let p = NoisePath::brownian(cfg.step(), cfg.grid_n, derive_seed(root, &[i]));
            let s = hill_spectrum(&cfg, &p)?;
            Ok(linear_statistic(&s, z, t)?.exp())
        })
        .collect()
}

/// Drift rate on the Brownian motion for each window of length `xi`:
/// window `w` covers `[w xi, (w + 1) xi)` and gets `t^{2/3} v_{w,*}`.
pub fn window_drifts(z: f64, t: f64, beta: f64, params: &DiscretizationParams) -> Result<Vec<f64>> {
    let dnu = params.level_spacing();
    let t23 = t.powf(2.0 / 3.0);
    (0..params.n)
        .map(|w| {
            let p = DriftProblem::new(z, beta, w as f64 * dnu)?;
            Ok(t23 * optimal_drift(&p))
        })
        .collect()
}

/// Large-deviation estimate `(1/t^2) log E[exp(-sum (lambda_i t^{1/3} + z t)_-)]`
/// over SAO samples. With `use_importance` the Brownian motion on window `w`
/// is drifted by `t^{2/3} v_{w,*}` and every sample is reweighted by its
/// exact Girsanov factor; averaging happens in log space.
pub fn ldp_estimate(
    z: f64,
    t: f64,
    beta: f64,
    a: f64,
    config: &SaoConfig,
    n_samples: usize,
    use_importance: bool,
) -> Result<McEstimate> {
    require(t >= 1.0, || LabError::Domain(format!("t must be at least 1, got {t}")))?;
    require(z <= 0.0, || LabError::Domain(format!("z must be <= 0, got {z}")))?;
    require(config.beta == beta, || LabError::Config("SAO config has a different beta".into()))?;
    require(n_samples > 1, || LabError::Config("need at least two samples".into()))?;
    let params = DiscretizationParams::for_deviation(z, t, a)?;
    let h = config.step();
    let threshold = -z * t.powf(2.0 / 3.0);
    let cfg = config.with_cap(threshold);
    let drifts = if use_importance { window_drifts(z, t, beta, &params)? } else { Vec::new() };
    // cell k belongs to window floor((k + 1/2) h / xi)
    let cell_drift: Vec<f64> = (0..cfg.grid_n)
        .map(|k| {
            let w = ((k as f64 + 0.5) * h / params.xi).floor() as usize;
            drifts.get(w).copied().unwrap_or(0.0)
        })
        .collect();

    let logs = (0..n_samples as u64)
        .into_par_iter()
        .map(|i| {
            let base = cfg.path(i);
            let (path, log_w) = if use_importance {
                let inc: Vec<f64> =
                    base.increments().iter().zip(&cell_drift).map(|(x, th)| x + th * h).collect();
                let log_w: f64 = inc
                    .iter()
                    .zip(&cell_drift)
                    .map(|(x, &th)| -th * x + 0.5 * th * th * h)
                    .sum();
                (NoisePath::new(h, inc, base.seed())?, log_w)
            } else {
                (base, 0.0)
            };
            let s = sao_spectrum(&cfg, &path)?;
            Ok(linear_statistic(&s, z, t)? + log_w)
        })
        .collect::<Result<Vec<f64>>>()?;

    let floor = f64::MIN_POSITIVE.ln();
    if logs.iter().all(|&l| l < floor) {
        return Err(LabError::Underflow(if use_importance {
            "every weighted sample underflows even with importance sampling".into()
        } else {
            "every sample underflows; enable importance sampling".into()
        }));
    }
    let m = LogMean::from_log_samples(&logs)?;
    let t2 = t * t;
    Ok(McEstimate { mean: m.log_mean / t2, stderr: m.log_stderr / t2, samples: m.samples, seed: config.seed })
}
