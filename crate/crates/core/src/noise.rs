//! Discretized Brownian paths, hierarchical seeds and Monte-Carlo estimates.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{LabError, Result};

/// Brownian increments on a uniform grid, one per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisePath {
    step: f64,
    increments: Vec<f64>,
    seed: u64,
}

impl NoisePath {
    pub fn new(step: f64, increments: Vec<f64>, seed: u64) -> Result<Self> {
        if !(step > 0.0) || !step.is_finite() {
            return Err(LabError::Config(format!("grid step must be positive, got {step}")));
        }
        if increments.iter().any(|x| !x.is_finite()) {
            return Err(LabError::Config("noise increments must be finite".into()));
        }
        Ok(NoisePath { step, increments, seed })
    }

    /// `n` independent `Normal(0, step)` increments drawn from `seed`.
    pub fn brownian(step: f64, n: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sd = step.sqrt();
        let increments = (0..n).map(|_| sd * rng.sample::<f64, _>(StandardNormal)).collect();
        NoisePath { step, increments, seed }
    }

    pub fn zero(step: f64, n: usize) -> Self {
        NoisePath { step, increments: vec![0.0; n], seed: 0 }
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.increments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.increments.is_empty()
    }

    /// Total length covered by the path.
    pub fn span(&self) -> f64 {
        self.step * self.increments.len() as f64
    }

    /// The same path with a constant drift `theta` per unit length added.
    pub fn with_drift(&self, theta: f64) -> NoisePath {
        let d = theta * self.step;
        NoisePath {
            step: self.step,
            increments: self.increments.iter().map(|x| x + d).collect(),
            seed: self.seed,
        }
    }

    /// Cells `start..start + len` as a path of their own.
    pub fn window(&self, start: usize, len: usize) -> Result<NoisePath> {
        if start + len > self.increments.len() {
            return Err(LabError::Config(format!(
                "window {start}..{} exceeds path of {} cells",
                start + len,
                self.increments.len()
            )));
        }
        Ok(NoisePath {
            step: self.step,
            increments: self.increments[start..start + len].to_vec(),
            seed: self.seed,
        })
    }

    /// Concatenation of several paths with a common step.
    pub fn concat(parts: &[NoisePath], seed: u64) -> Result<NoisePath> {
        let step = parts.first().map(|p| p.step).unwrap_or(1.0);
        if parts.iter().any(|p| p.step != step) {
            return Err(LabError::Config("cannot join paths with different steps".into()));
        }
        let increments = parts.iter().flat_map(|p| p.increments.iter().cloned()).collect();
        NoisePath::new(step, increments, seed)
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Child seed for a labelled position in the derivation tree
/// (root -> command -> module -> stream index).
pub fn derive_seed(root: u64, labels: &[u64]) -> u64 {
    labels.iter().fold(splitmix64(root), |acc, &l| splitmix64(acc ^ splitmix64(l)))
}

/// Stable numeric label for a textual tag.
pub fn tag(name: &str) -> u64 {
    // FNV-1a
    name.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

/// Mean, standard error, sample count and seed of a Monte-Carlo average.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
    pub seed: u64,
}

impl McEstimate {
    pub fn from_samples(values: &[f64], seed: u64) -> Result<Self> {
        let acc = values.iter().fold(Accumulator::default(), |mut a, &v| {
            a.push(v);
            a
        });
        acc.estimate(seed)
    }

    /// Estimate of the product of independent expectations; the variance of
    /// the product of independent unbiased estimators is
    /// `prod(m_i^2 + s_i^2) - prod(m_i^2)`.
    pub fn product(factors: &[McEstimate], seed: u64) -> McEstimate {
        let mean: f64 = factors.iter().map(|f| f.mean).product();
        let second: f64 = factors.iter().map(|f| f.mean * f.mean + f.stderr * f.stderr).product();
        let var = (second - mean * mean).max(0.0);
        McEstimate {
            mean,
            stderr: var.sqrt(),
            samples: factors.iter().map(|f| f.samples).min().unwrap_or(0),
            seed,
        }
    }

    pub fn scaled(self, c: f64) -> McEstimate {
        McEstimate { mean: self.mean * c, stderr: self.stderr * c.abs(), ..self }
    }

    /// Distance between two independent estimates in combined standard errors.
    pub fn sigma_distance(&self, other: &McEstimate) -> f64 {
        let s = (self.stderr.powi(2) + other.stderr.powi(2)).sqrt();
        let d = (self.mean - other.mean).abs();
        if s == 0.0 {
            if d == 0.0 { 0.0 } else { f64::INFINITY }
        } else {
            d / s
        }
    }
}

/// Streaming mean/variance (Welford) with an associative merge.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Accumulator {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Accumulator {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&self, o: &Accumulator) -> Accumulator {
        if self.n == 0 {
            return *o;
        }
        if o.n == 0 {
            return *self;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        let mean = self.mean + d * o.n as f64 / n as f64;
        let m2 = self.m2 + o.m2 + d * d * (self.n as f64 * o.n as f64) / n as f64;
        Accumulator { n, mean, m2 }
    }

    pub fn count(&self) -> usize {
        self.n
    }

    pub fn estimate(&self, seed: u64) -> Result<McEstimate> {
        if self.n == 0 {
            return Err(LabError::Config("no Monte-Carlo samples".into()));
        }
        let var = if self.n > 1 { self.m2 / (self.n - 1) as f64 } else { 0.0 };
        Ok(McEstimate {
            mean: self.mean,
            stderr: (var / self.n as f64).sqrt(),
            samples: self.n,
            seed,
        })
    }
}

/// `log E[exp(L)]` from samples `L_i`, computed by log-sum-exp, with a
/// delta-method standard error for the logarithm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogMean {
    pub log_mean: f64,
    pub log_stderr: f64,
    pub samples: usize,
}

impl LogMean {
    pub fn from_log_samples(logs: &[f64]) -> Result<Self> {
        if logs.is_empty() {
            return Err(LabError::Config("no Monte-Carlo samples".into()));
        }
        let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if top == f64::NEG_INFINITY || top.is_nan() {
            return Err(LabError::Underflow("every sample has zero weight".into()));
        }
        let scaled: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
        let est = McEstimate::from_samples(&scaled, 0)?;
        Ok(LogMean {
            log_mean: top + est.mean.ln(),
            log_stderr: est.stderr / est.mean,
            samples: logs.len(),
        })
    }

    /// `log` of a product of independent expectations.
    pub fn product(parts: &[LogMean]) -> LogMean {
        LogMean {
            log_mean: parts.iter().map(|p| p.log_mean).sum(),
            log_stderr: parts.iter().map(|p| p.log_stderr.powi(2)).sum::<f64>().sqrt(),
            samples: parts.iter().map(|p| p.samples).min().unwrap_or(0),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brownian_is_reproducible_and_scaled() {
        let a = NoisePath::brownian(1e-3, 20_000, 42);
        let b = NoisePath::brownian(1e-3, 20_000, 42);
        assert_eq!(a, b);
        assert_ne!(a, NoisePath::brownian(1e-3, 20_000, 43));
        let n = a.len() as f64;
        let var = a.increments().iter().map(|x| x * x / 1e-3).sum::<f64>() / n;
        // variance of the sample mean of chi-square(1) is 2/n
        assert!((var - 1.0).abs() < 5.0 * (2.0 / n).sqrt());
        assert!((a.span() - 20.0).abs() < 1e-12);
    }

    #[test]
    fn path_invariants() {
        assert!(NoisePath::new(0.0, vec![0.0], 1).is_err());
        assert!(NoisePath::new(0.1, vec![f64::NAN], 1).is_err());
        let p = NoisePath::brownian(0.5, 10, 3);
        let w = p.window(4, 3).unwrap();
        assert_eq!(w.increments(), &p.increments()[4..7]);
        assert!(p.window(8, 3).is_err());
        let d = p.with_drift(2.0);
        assert!((d.increments()[0] - p.increments()[0] - 1.0).abs() < 1e-15);
        let j = NoisePath::concat(&[p.window(0, 4).unwrap(), p.window(4, 6).unwrap()], 3).unwrap();
        assert_eq!(j, p);
    }

    #[test]
    fn derived_seeds_differ_by_label() {
        let a = derive_seed(1, &[tag("sao"), 0]);
        let b = derive_seed(1, &[tag("sao"), 1]);
        let c = derive_seed(2, &[tag("sao"), 0]);
        assert!(a != b && a != c && b != c);
        assert_eq!(a, derive_seed(1, &[tag("sao"), 0]));
    }

    #[test]
    fn estimate_matches_textbook_formulas() {
        let e = McEstimate::from_samples(&[1.0, 2.0, 3.0, 4.0], 9).unwrap();
        assert_eq!(e.mean, 2.5);
        assert!((e.stderr - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
        assert_eq!(e.samples, 4);
        assert!(McEstimate::from_samples(&[], 0).is_err());
    }

    #[test]
    fn merge_is_order_insensitive() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 7919) % 1000) as f64 / 37.0).collect();
        let whole = McEstimate::from_samples(&xs, 0).unwrap();
        let mut parts: Vec<Accumulator> = xs
            .chunks(97)
            .map(|c| {
                let mut a = Accumulator::default();
                c.iter().for_each(|&x| a.push(x));
                a
            })
            .collect();
        let fwd = parts.iter().fold(Accumulator::default(), |a, b| a.merge(b)).estimate(0).unwrap();
        parts.reverse();
        let rev = parts.iter().fold(Accumulator::default(), |a, b| a.merge(b)).estimate(0).unwrap();
        for e in [fwd, rev] {
            assert!((e.mean - whole.mean).abs() <= 1e-12 * whole.mean.abs());
            assert!((e.stderr - whole.stderr).abs() <= 1e-12 * whole.stderr);
        }
    }

    #[test]
    fn log_mean_survives_underflow() {
        let logs = [-1000.0, -1001.0, -999.5];
        let m = LogMean::from_log_samples(&logs).unwrap();
        let direct = (((-1.0f64).exp() + (-2.0f64).exp() + (-0.5f64).exp()) / 3.0).ln() - 999.0;
        assert!((m.log_mean - direct).abs() < 1e-12);
        assert!(matches!(
            LogMean::from_log_samples(&[f64::NEG_INFINITY; 3]),
            Err(LabError::Underflow(_))
        ));
    }

    #[test]
    fn product_of_independent_estimates() {
        let a = McEstimate { mean: 0.5, stderr: 0.01, samples: 100, seed: 1 };
        let b = McEstimate { mean: 0.2, stderr: 0.02, samples: 100, seed: 2 };
        let p = McEstimate::product(&[a, b], 3);
        assert!((p.mean - 0.1).abs() < 1e-15);
        let var: f64 = (0.25 + 1e-4) * (0.04 + 4e-4) - 0.01;
        assert!((p.stderr - var.sqrt()).abs() < 1e-15);
    }
}
