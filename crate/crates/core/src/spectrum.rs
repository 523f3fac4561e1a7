//! Sorted eigenvalue lists with their cutoff metadata, and the linear
//! statistic `-sum (lambda_i t^{1/3} + z t)_-` built from them.

use serde::Serialize;

use crate::error::{LabError, Result};

/// Eigenvalues `<= cap` of one realization, ascending, with multiplicity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumSample {
    eigenvalues: Vec<f64>,
    pub cap: f64,
    pub complete_below_cap: bool,
}

impl SpectrumSample {
    pub fn new(eigenvalues: Vec<f64>, cap: f64, complete_below_cap: bool) -> Result<Self> {
        if eigenvalues.windows(2).any(|w| !(w[0] <= w[1])) {
            return Err(LabError::Contract("eigenvalues must be sorted ascending".into()));
        }
        if eigenvalues.last().is_some_and(|&l| l > cap) {
            return Err(LabError::Contract("eigenvalue above the cap".into()));
        }
        Ok(SpectrumSample { eigenvalues, cap, complete_below_cap })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// `N(lambda) = #{i : lambda_i <= lambda}`.
    pub fn count_below(&self, lambda: f64) -> usize {
        self.eigenvalues.partition_point(|&l| l <= lambda)
    }

    /// Eigenvalues with clusters closer than `1e-12` (relative) merged.
    pub fn distinct(&self) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::with_capacity(self.eigenvalues.len());
        for &l in &self.eigenvalues {
            match out.last() {
                Some(&p) if (l - p).abs() <= 1e-12 * l.abs().max(p.abs()).max(1.0) => {}
                _ => out.push(l),
            }
        }
        out
    }

    /// The spectrum of the operator plus the constant `delta`.
    pub fn shifted(&self, delta: f64) -> SpectrumSample {
        SpectrumSample {
            eigenvalues: self.eigenvalues.iter().map(|l| l + delta).collect(),
            cap: self.cap + delta,
            complete_below_cap: self.complete_below_cap,
        }
    }
}

/// `-sum_i (lambda_i t^{1/3} + z t)_-`; only eigenvalues below `-z t^{2/3}`
/// contribute, so the spectrum must be complete up to there.
pub fn linear_statistic(spectrum: &SpectrumSample, z: f64, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(LabError::Domain(format!("t must be positive, got {t}")));
    }
    let threshold = -z * t.powf(2.0 / 3.0);
    if spectrum.cap < threshold || !spectrum.complete_below_cap {
        return Err(LabError::Incomplete(format!(
            "spectrum known up to {} but the statistic needs everything below {threshold}",
            spectrum.cap
        )));
    }
    let t13 = t.cbrt();
    let s: f64 = spectrum
        .eigenvalues
        .iter()
        .take_while(|&&l| l < threshold)
        .map(|&l| t13 * (threshold - l))
        .sum();
    Ok(-s)
}

/// `-t^{1/3} * integral_{lo}^{-z t^{2/3}} N(lambda) d lambda` by the
/// composite trapezoid rule with `steps` panels. `lo` must lie below the
/// bottom of the spectrum.
pub fn counting_integral(spectrum: &SpectrumSample, z: f64, t: f64, lo: f64, steps: usize) -> f64 {
    let hi = -z * t.powf(2.0 / 3.0);
    if hi <= lo || steps == 0 {
        return 0.0;
    }
    let dx = (hi - lo) / steps as f64;
    let ev = &spectrum.eigenvalues;
    // walk the grid and the sorted eigenvalues together
    let mut k = 0usize;
    let mut count_at = |x: f64| {
        while k < ev.len() && ev[k] <= x {
            k += 1;
        }
        k as f64
    };
    let mut sum = 0.5 * count_at(lo);
    for i in 1..steps {
        sum += count_at(lo + i as f64 * dx);
    }
    sum += 0.5 * count_at(hi);
    -t.cbrt() * dx * sum
}
