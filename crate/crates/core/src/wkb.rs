//! Deterministic spectral comparison behind the constant-drift ansatz.
//!
//! For `f` continuous on `[0, xi]`, `H = -d^2/dy^2 + f'` and
//! `H~ = -d^2/dy^2 + (f(xi) - f(0))/xi`, both periodic, satisfy
//! `-sum (r + lambda_i)_- <= -sum (r + lambda~_i)_-` for every `r`. The
//! discrete `f'` is the cell increment `(f_{i+1} - f_i)/h`, which keeps the
//! two traces equal at every resolution.

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use serde::Serialize;

use crate::error::{require, LabError, Result};
use crate::hill::periodic_matrix;
use crate::linalg::{all_eigenvalues, dense_symmetric_eigenvalues, PeriodicTridiag};
use crate::spectrum::SpectrumSample;

const EIGEN_TOL: f64 = 1e-10;
const DENSE_LIMIT: usize = 4096;

/// Samples `f(i h)`, `i = 0..=grid_n`, of a potential primitive on `[0, xi]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PotentialProfile {
    pub xi: f64,
    samples: Vec<f64>,
    pub grid_n: usize,
}

impl PotentialProfile {
    pub fn new(xi: f64, samples: Vec<f64>, grid_n: usize) -> Result<Self> {
        require(xi > 0.0 && xi.is_finite(), || LabError::Domain(format!("xi must be positive, got {xi}")))?;
        require(samples.len() == grid_n + 1, || {
            LabError::Contract(format!("{} samples for a grid of {grid_n} cells", samples.len()))
        })?;
        require(samples.iter().all(|v| v.is_finite()), || LabError::Domain("samples must be finite".into()))?;
        Ok(PotentialProfile { xi, samples, grid_n })
    }

    pub fn from_fn(xi: f64, grid_n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let h = xi / grid_n as f64;
        Self::new(xi, (0..=grid_n).map(|i| f(i as f64 * h)).collect(), grid_n)
    }

    /// Piecewise-linear `f` through 2 to 16 breakpoints (both ends included)
    /// with values uniform in `[-5, 5]`.
    pub fn random_piecewise_linear<R: Rng + ?Sized>(xi: f64, grid_n: usize, rng: &mut R) -> Result<Self> {
        let k = rng.random_range(2..=16usize);
        let mut xs: Vec<f64> = (0..k - 2).map(|_| rng.random_range(0.0..xi)).collect();
        xs.push(0.0);
        xs.push(xi);
        xs.sort_by(f64::total_cmp);
        let ys: Vec<f64> = (0..k).map(|_| rng.random_range(-5.0..=5.0)).collect();
        Self::from_fn(xi, grid_n, |y| {
            let j = xs.partition_point(|&b| b <= y).clamp(1, k - 1);
            let (x0, x1) = (xs[j - 1], xs[j]);
            if x1 > x0 {
                ys[j - 1] + (ys[j] - ys[j - 1]) * (y - x0) / (x1 - x0)
            } else {
                ys[j]
            }
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn step(&self) -> f64 {
        self.xi / self.grid_n as f64
    }

    pub fn mean_slope(&self) -> f64 {
        (self.samples[self.grid_n] - self.samples[0]) / self.xi
    }
}

/// `min_{N} sum_{i <= N} (a_i + r)` over `N = 0..=len`, which equals
/// `-sum_i (r + a_i)_-` for ascending `a`.
pub fn min_partial_sum(a: &[f64], r: f64) -> Result<f64> {
    require(a.windows(2).all(|w| w[0] <= w[1]), || LabError::Contract("input must be ascending".into()))?;
    let mut best = 0.0f64;
    let mut acc = 0.0;
    for &x in a {
        acc += x + r;
        best = best.min(acc);
    }
    Ok(best)
}

fn negative_part_sum(a: &[f64], r: f64) -> f64 {
    -a.iter().map(|&x| (-(x + r)).max(0.0)).sum::<f64>()
}

/// Sum of the `n` smallest eigenvalues of a symmetric matrix.
pub fn ky_fan_sum(matrix: &DMatrix<f64>, n: usize) -> Result<f64> {
    require(matrix.is_square(), || LabError::Contract("matrix must be square".into()))?;
    let dim = matrix.nrows();
    require(n <= dim, || LabError::Contract(format!("asked for {n} eigenvalues of a {dim}x{dim} matrix")))?;
    let scale = matrix.amax().max(1.0);
    for i in 0..dim {
        for j in 0..i {
            require((matrix[(i, j)] - matrix[(j, i)]).abs() <= 1e-12 * scale, || {
                LabError::Contract(format!("matrix is not symmetric at ({i}, {j})"))
            })?;
        }
    }
    if n == 0 {
        return Ok(0.0);
    }
    Ok(dense_symmetric_eigenvalues(matrix)[..n].iter().sum())
}

/// Periodic finite-difference matrices of `H` and `H~`.
pub fn hill_pair_matrices(profile: &PotentialProfile) -> Result<(PeriodicTridiag, PeriodicTridiag)> {
    require(profile.grid_n >= 16, || {
        LabError::Config(format!("grid_n must be at least 16, got {}", profile.grid_n))
    })?;
    let h = profile.step();
    let f = profile.samples();
    let rough = (0..profile.grid_n).map(|i| (f[i + 1] - f[i]) / h).collect();
    let flat = vec![profile.mean_slope(); profile.grid_n];
    Ok((periodic_matrix(h, rough)?, periodic_matrix(h, flat)?))
}

/// Full spectra of `H` and `H~`. `H~` has exactly double eigenvalues, which
/// the ladder count only splits to about `sqrt(eps)`, so grids up to 4096
/// nodes go through a dense solver.
pub fn periodic_hill_pair(profile: &PotentialProfile) -> Result<(SpectrumSample, SpectrumSample)> {
    let (rough, flat) = hill_pair_matrices(profile)?;
    let full = |m: &PeriodicTridiag| {
        let ev = if profile.grid_n <= DENSE_LIMIT {
            dense_symmetric_eigenvalues(&m.to_dense())
        } else {
            all_eigenvalues(m, EIGEN_TOL)
        };
        let cap = ev.last().copied().unwrap_or(0.0);
        SpectrumSample::new(ev, cap, true)
    };
    Ok((full(&rough)?, full(&flat)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WkbComparison {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

fn compare_spectra(rough: &SpectrumSample, flat: &SpectrumSample, r: f64) -> WkbComparison {
    let lhs = negative_part_sum(rough.eigenvalues(), r);
    let rhs = negative_part_sum(flat.eigenvalues(), r);
    WkbComparison { lhs, rhs, holds: lhs <= rhs + 1e-8 * (1.0 + lhs.abs()) }
}

/// `-sum (r + lambda_i)_-` for `H` against the same for `H~`.
pub fn wkb_compare(profile: &PotentialProfile, r: f64) -> Result<WkbComparison> {
    let (rough, flat) = periodic_hill_pair(profile)?;
    Ok(compare_spectra(&rough, &flat, r))
}

/// Sums of the `n` lowest eigenvalues of `H` and of `H~`.
pub fn eigensum_compare(profile: &PotentialProfile, n: usize) -> Result<(f64, f64)> {
    let (rough, flat) = periodic_hill_pair(profile)?;
    require(n <= rough.len(), || {
        LabError::Contract(format!("asked for {n} eigenvalues out of {}", rough.len()))
    })?;
    Ok((rough.eigenvalues()[..n].iter().sum(), flat.eigenvalues()[..n].iter().sum()))
}

/// Real discrete Fourier basis on `grid_n` periodic nodes, lowest frequency
/// first: the constant, then `cos` and `sin` pairs. Columns are orthonormal.
pub fn fourier_modes(grid_n: usize, count: usize) -> DMatrix<f64> {
    let n = grid_n as f64;
    let mut m = DMatrix::zeros(grid_n, count);
    for c in 0..count {
        let k = c.div_ceil(2);
        for i in 0..grid_n {
            let phase = 2.0 * std::f64::consts::PI * (k * i) as f64 / n;
            m[(i, c)] = if c == 0 {
                1.0 / n.sqrt()
            } else if 2 * k == grid_n {
                if c % 2 == 1 { phase.cos() / n.sqrt() } else { 0.0 }
            } else if c % 2 == 1 {
                (2.0 / n).sqrt() * phase.cos()
            } else {
                (2.0 / n).sqrt() * phase.sin()
            };
        }
    }
    m
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WkbReport {
    pub trials: usize,
    pub violations: usize,
    /// Largest `lhs - rhs` seen; the inequality wants this `<= 0`.
    pub max_gap: f64,
}

/// Random piecewise-linear profiles on `[0, 1]` against random `r` in
/// `[-20, 20]`.
pub fn wkb_trials(trials: usize, grid_n: usize, seed: u64) -> Result<WkbReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = 0;
    let mut max_gap = f64::NEG_INFINITY;
    for _ in 0..trials {
        let profile = PotentialProfile::random_piecewise_linear(1.0, grid_n, &mut rng)?;
        let r = rng.random_range(-20.0..=20.0);
        let c = wkb_compare(&profile, r)?;
        if !c.holds {
            violations += 1;
        }
        max_gap = max_gap.max(c.lhs - c.rhs);
    }
    Ok(WkbReport { trials, violations, max_gap })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{prop, prop_assert, proptest};

    #[test]
    fn min_partial_sum_examples() {
        assert_eq!(min_partial_sum(&[-2.0, -1.0, 3.0], 0.0).unwrap(), -3.0);
        assert_eq!(min_partial_sum(&[1.0, 2.0], 0.5).unwrap(), 0.0);
        assert_eq!(min_partial_sum(&[], -4.0).unwrap(), 0.0);
        assert!(matches!(min_partial_sum(&[1.0, 0.0], 0.0), Err(LabError::Contract(_))));
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..1000 {
            let len = rng.random_range(0..30);
            let mut a: Vec<f64> = (0..len).map(|_| rng.random_range(-10.0..10.0)).collect();
            a.sort_by(f64::total_cmp);
            let r = rng.random_range(-10.0..10.0);
            let direct = negative_part_sum(&a, r);
            assert!((min_partial_sum(&a, r).unwrap() - direct).abs() <= 1e-12 * (1.0 + direct.abs()));
        }
    }

    fn random_symmetric(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
        let g = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        (&g + g.transpose()) * 0.5
    }

    fn random_orthonormal(rng: &mut ChaCha8Rng, n: usize, k: usize) -> DMatrix<f64> {
        let g = DMatrix::from_fn(n, k, |_, _| rand_distr::Distribution::sample(&rand_distr::StandardNormal, rng));
        g.qr().q()
    }

    fn rayleigh_sum(m: &DMatrix<f64>, psi: &DMatrix<f64>) -> f64 {
        (psi.transpose() * m * psi).trace()
    }

    #[test]
    fn ky_fan_examples() {
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![3.0, 1.0, 2.0]));
        assert_eq!(ky_fan_sum(&d, 0).unwrap(), 0.0);
        assert!((ky_fan_sum(&d, 2).unwrap() - 3.0).abs() < 1e-14);
        assert!(ky_fan_sum(&d, 4).is_err());
        let mut a = d.clone();
        a[(0, 1)] = 1e-6;
        assert!(matches!(ky_fan_sum(&a, 1), Err(LabError::Contract(_))));
    }

    #[test]
    fn ky_fan_is_the_infimum_over_orthonormal_sets() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..200 {
            let m = random_symmetric(&mut rng, 8);
            let k = rng.random_range(1..=8);
            let best = ky_fan_sum(&m, k).unwrap();
            let psi = random_orthonormal(&mut rng, 8, k);
            assert!(best <= rayleigh_sum(&m, &psi) + 1e-12);
            let eig = m.clone().symmetric_eigen();
            let mut order: Vec<usize> = (0..8).collect();
            order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
            let vecs = DMatrix::from_columns(&order[..k].iter().map(|&i| eig.eigenvectors.column(i)).collect::<Vec<_>>());
            assert!((rayleigh_sum(&m, &vecs) - best).abs() < 1e-10);
        }
    }

    #[test]
    fn constant_and_linear_profiles_give_equal_spectra() {
        let c = PotentialProfile::from_fn(1.0, 64, |_| 2.5).unwrap();
        let (a, b) = periodic_hill_pair(&c).unwrap();
        assert_eq!(a, b);
        let lin = PotentialProfile::from_fn(2.0, 64, |y| 3.0 * y).unwrap();
        let (a, b) = periodic_hill_pair(&lin).unwrap();
        for (x, y) in a.eigenvalues().iter().zip(b.eigenvalues()) {
            assert!((x - y).abs() <= 1e-9 * x.abs().max(1.0));
        }
        let w = wkb_compare(&lin, 5.0).unwrap();
        assert!((w.lhs - w.rhs).abs() <= 1e-9 * (1.0 + w.lhs.abs()) && w.holds);
        assert!(periodic_hill_pair(&PotentialProfile::from_fn(1.0, 8, |y| y).unwrap()).is_err());
    }

    #[test]
    fn flat_operator_is_a_shifted_periodic_laplacian() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = PotentialProfile::random_piecewise_linear(1.5, 100, &mut rng).unwrap();
        let (_, flat) = periodic_hill_pair(&p).unwrap();
        let h = p.step();
        let mut expect: Vec<f64> = (0..100)
            .map(|k| 4.0 / (h * h) * (std::f64::consts::PI * k as f64 / 100.0).sin().powi(2) + p.mean_slope())
            .collect();
        expect.sort_by(f64::total_cmp);
        for (x, y) in flat.eigenvalues().iter().zip(&expect) {
            assert!((x - y).abs() <= 1e-9 * y.abs().max(1.0), "{x} vs {y}");
        }
    }

    #[test]
    fn eigensums_compare_and_traces_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let p = PotentialProfile::random_piecewise_linear(1.0, 64, &mut rng).unwrap();
            assert_eq!(eigensum_compare(&p, 0).unwrap(), (0.0, 0.0));
            for n in 1..=64 {
                let (a, b) = eigensum_compare(&p, n).unwrap();
                assert!(a <= b + 1e-8 * (1.0 + a.abs()), "n={n}: {a} > {b}");
            }
            let (a, b) = eigensum_compare(&p, 64).unwrap();
            assert!((a - b).abs() <= 1e-9 * a.abs());
            assert!(eigensum_compare(&p, 65).is_err());
        }
    }

    #[test]
    fn comparison_matches_the_partial_sum_route() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..20 {
            let p = PotentialProfile::random_piecewise_linear(1.0, 128, &mut rng).unwrap();
            let r = rng.random_range(-20.0..20.0);
            let (rough, flat) = periodic_hill_pair(&p).unwrap();
            let w = wkb_compare(&p, r).unwrap();
            let a = min_partial_sum(rough.eigenvalues(), r).unwrap();
            let b = min_partial_sum(flat.eigenvalues(), r).unwrap();
            assert!((w.lhs - a).abs() <= 1e-12 * (1.0 + a.abs()));
            assert!((w.rhs - b).abs() <= 1e-12 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn below_both_spectra_the_sums_are_full() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let p = PotentialProfile::random_piecewise_linear(1.0, 32, &mut rng).unwrap();
        let (rough, flat) = periodic_hill_pair(&p).unwrap();
        let r = -rough.eigenvalues().last().unwrap().max(*flat.eigenvalues().last().unwrap()) - 1.0;
        let w = wkb_compare(&p, r).unwrap();
        let full = |s: &SpectrumSample| s.eigenvalues().iter().map(|l| l + r).sum::<f64>();
        assert!((w.lhs - full(&rough)).abs() <= 1e-9 * w.lhs.abs());
        assert!((w.rhs - full(&flat)).abs() <= 1e-9 * w.rhs.abs());
        assert!(w.holds);
    }

    #[test]
    fn fourier_modes_are_optimal_for_the_flat_operator() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for &n in &[16usize, 33] {
            let p = PotentialProfile::random_piecewise_linear(1.0, n, &mut rng).unwrap();
            let (_, flat) = hill_pair_matrices(&p).unwrap();
            let dense = flat.to_dense();
            let modes = fourier_modes(n, n);
            assert!((modes.transpose() * &modes - DMatrix::identity(n, n)).amax() < 1e-12);
            for k in 0..=n {
                let psi = modes.columns(0, k).into_owned();
                let best = ky_fan_sum(&dense, k).unwrap();
                assert!((rayleigh_sum(&dense, &psi) - best).abs() <= 1e-9 * (1.0 + best.abs()), "k={k}");
            }
        }
    }

    #[test]
    fn randomized_suite_has_no_violations() {
        let r = wkb_trials(50, 128, 10).unwrap();
        assert_eq!(r.violations, 0, "{r:?}");
        assert!(r.max_gap <= 1e-8 * 1e3);
    }

    proptest! {
        #[test]
        fn min_partial_sum_is_a_lower_bound_of_every_prefix(mut a in prop::collection::vec(-50.0f64..50.0, 0..20), r in -20.0f64..20.0) {
            a.sort_by(f64::total_cmp);
            let m = min_partial_sum(&a, r).unwrap();
            let mut acc = 0.0;
            prop_assert!(m <= 0.0);
            for x in &a {
                acc += x + r;
                prop_assert!(m <= acc + 1e-12);
            }
        }
    }
}
