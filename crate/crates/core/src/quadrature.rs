//! Gauss-Legendre rules, composite grids and an adaptive integrator.

use std::f64::consts::PI;

use crate::error::{LabError, Result};

/// Nodes and weights of a one-dimensional rule, plus the truncation window
/// of an auxiliary inner integral (used by the Fredholm kernel).
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    pub r_cut_low: f64,
    pub r_cut_high: f64,
}

impl QuadratureGrid {
    pub fn new(nodes: Vec<f64>, weights: Vec<f64>, r_cut_low: f64, r_cut_high: f64) -> Result<Self> {
        if nodes.len() != weights.len() {
            return Err(LabError::Config(format!(
                "{} nodes but {} weights",
                nodes.len(),
                weights.len()
            )));
        }
        if weights.iter().any(|&w| !(w > 0.0)) {
            return Err(LabError::Config("quadrature weights must be positive".into()));
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(LabError::Config("quadrature nodes must be strictly increasing".into()));
        }
        if !(r_cut_low < r_cut_high) {
            return Err(LabError::Config("inner truncation window is empty".into()));
        }
        Ok(QuadratureGrid { nodes, weights, r_cut_low, r_cut_high })
    }

    /// `n`-point Gauss-Legendre rule on `[a, b]`.
    pub fn gauss_legendre(n: usize, a: f64, b: f64) -> Result<Self> {
        if n == 0 || !(a < b) {
            return Err(LabError::Config(format!("invalid Gauss-Legendre request n={n} on [{a}, {b}]")));
        }
        let (x, w) = map_rule(&gauss_legendre_unit(n), a, b);
        Ok(QuadratureGrid { nodes: x, weights: w, r_cut_low: a, r_cut_high: b })
    }

    /// Gauss-Legendre panels of `per_panel` nodes between consecutive `edges`.
    pub fn composite(edges: &[f64], per_panel: usize) -> Result<Self> {
        if edges.len() < 2 || per_panel == 0 {
            return Err(LabError::Config("composite rule needs two edges and one node per panel".into()));
        }
        let unit = gauss_legendre_unit(per_panel);
        let mut nodes = Vec::with_capacity((edges.len() - 1) * per_panel);
        let mut weights = Vec::with_capacity(nodes.capacity());
        for pair in edges.windows(2) {
            let (x, w) = map_rule(&unit, pair[0], pair[1]);
            nodes.extend(x);
            weights.extend(w);
        }
        QuadratureGrid::new(nodes, weights, edges[0], edges[edges.len() - 1])
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`,
/// nodes ascending.
pub fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

fn map_rule(unit: &(Vec<f64>, Vec<f64>), a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let x = unit.0.iter().map(|&u| mid + half * u).collect();
    let w = unit.1.iter().map(|&v| half * v).collect();
    (x, w)
}

/// Globally adaptive Gauss-Legendre integration. Each panel carries the
/// difference between its 10- and 20-point rules as an error estimate, and
/// the panel with the largest estimate is bisected until the estimates sum to
/// at most `abs_tol`.
#[derive(Debug, Clone)]
pub struct AdaptiveQuad {
    coarse: (Vec<f64>, Vec<f64>),
    fine: (Vec<f64>, Vec<f64>),
    pub abs_tol: f64,
    pub max_panels: usize,
}

struct Panel {
    err: f64,
    lo: f64,
    hi: f64,
    value: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&other.err)
    }
}

impl AdaptiveQuad {
    pub fn new(abs_tol: f64) -> Self {
        AdaptiveQuad {
            coarse: gauss_legendre_unit(10),
            fine: gauss_legendre_unit(20),
            abs_tol,
            max_panels: 100_000,
        }
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64, a: f64, b: f64) -> Result<f64> {
        if a == b {
            return Ok(0.0);
        }
        if !(a < b) {
            return Err(LabError::Domain(format!("integration interval [{a}, {b}] is reversed")));
        }
        let panel = |lo: f64, hi: f64| {
            let value = self.apply(&self.fine, &f, lo, hi);
            let err = (value - self.apply(&self.coarse, &f, lo, hi)).abs();
            Panel { err, lo, hi, value }
        };
        let mut heap = std::collections::BinaryHeap::new();
        let first = panel(a, b);
        let mut total_err = first.err;
        heap.push(first);
        while total_err > self.abs_tol {
            if !total_err.is_finite() {
                return Err(LabError::Resolution(format!("non-finite integrand on [{a}, {b}]")));
            }
            if heap.len() >= self.max_panels {
                return Err(LabError::Resolution(format!(
                    "adaptive quadrature on [{a}, {b}] stalled at error {total_err:e}"
                )));
            }
            let worst = heap.pop().expect("heap is never empty");
            let mid = 0.5 * (worst.lo + worst.hi);
            if !(mid > worst.lo && mid < worst.hi) {
                // cannot split further: accept the panel as it stands
                total_err -= worst.err;
                heap.push(Panel { err: 0.0, ..worst });
                continue;
            }
            let (l, r) = (panel(worst.lo, mid), panel(mid, worst.hi));
            total_err += l.err + r.err - worst.err;
            heap.push(l);
            heap.push(r);
        }
        let mut panels = heap.into_vec();
        panels.sort_by(|x, y| x.lo.total_cmp(&y.lo));
        Ok(panels.iter().map(|p| p.value).sum())
    }

    fn apply(&self, rule: &(Vec<f64>, Vec<f64>), f: &impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        half * rule.0.iter().zip(&rule.1).map(|(&u, &w)| w * f(mid + half * u)).sum::<f64>()
    }
}

impl Default for AdaptiveQuad {
    fn default() -> Self {
        AdaptiveQuad::new(1e-10)
    }
}
