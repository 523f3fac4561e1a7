//! Eigenvalue counting and bisection for symmetric tridiagonal and periodic
//! (cyclic) tridiagonal matrices, plus the dense helpers used by the
//! determinant and the variational checks.
//!
//! Counts come from Sylvester's law of inertia applied to an `LDL^T`
//! factorization of `A - lambda I`. The cyclic case is folded into a ladder
//! and factored with 2x2 pivots, so a count stays `O(n)`. Eigenvalues are located by multisection: every round bisects all
//! live intervals at once and the counts at the new midpoints are evaluated
//! in interleaved lanes.

use nalgebra::DMatrix;

use crate::error::{LabError, Result};

const LANES: usize = 8;

/// A symmetric operator whose eigenvalue counts can be evaluated cheaply.
pub trait InertiaCount {
    fn dim(&self) -> usize;

    /// Number of eigenvalues strictly below each entry of `lambdas`.
    fn counts_below(&self, lambdas: &[f64]) -> Vec<usize>;

    /// Interval containing the whole spectrum.
    fn gershgorin(&self) -> (f64, f64);

    fn count_below(&self, lambda: f64) -> usize {
        self.counts_below(&[lambda])[0]
    }

    /// Smallest separation bisection can resolve reliably.
    fn resolution_floor(&self) -> f64 {
        let (lo, hi) = self.gershgorin();
        8.0 * f64::EPSILON * lo.abs().max(hi.abs()).max(1.0)
    }
}

/// Symmetric tridiagonal matrix: `diag[i]` on the diagonal and `off[i]`
/// coupling `i` and `i + 1`.
#[derive(Debug, Clone)]
pub struct SymTridiag {
    diag: Vec<f64>,
    off: Vec<f64>,
    off2: Vec<f64>,
    pivmin: f64,
}

impl SymTridiag {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Result<Self> {
        if diag.is_empty() || off.len() + 1 != diag.len() {
            return Err(LabError::Config(format!(
                "tridiagonal matrix needs n diagonal and n-1 off-diagonal entries, got {} and {}",
                diag.len(),
                off.len()
            )));
        }
        let off2: Vec<f64> = off.iter().map(|e| e * e).collect();
        let pivmin = f64::MIN_POSITIVE * off2.iter().cloned().fold(1.0, f64::max);
        Ok(SymTridiag { diag, off, off2, pivmin })
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn off(&self) -> &[f64] {
        &self.off
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.diag.len();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = self.diag[i];
        }
        for (i, &e) in self.off.iter().enumerate() {
            m[(i, i + 1)] = e;
            m[(i + 1, i)] = e;
        }
        m
    }

    fn counts_lanes(&self, lam: &[f64; LANES]) -> [usize; LANES] {
        let pivmin = self.pivmin;
        let mut q = [0.0f64; LANES];
        let mut c = [0usize; LANES];
        let d0 = self.diag[0];
        for k in 0..LANES {
            let mut v = d0 - lam[k];
            if v.abs() < pivmin {
                v = -pivmin;
            }
            q[k] = v;
            c[k] += (v < 0.0) as usize;
        }
        for (di, e2) in self.diag[1..].iter().zip(&self.off2) {
            for k in 0..LANES {
                let mut v = (di - lam[k]) - e2 / q[k];
                if v.abs() < pivmin {
                    v = -pivmin;
                }
                q[k] = v;
                c[k] += (v < 0.0) as usize;
            }
        }
        c
    }
}

impl InertiaCount for SymTridiag {
    fn dim(&self) -> usize {
        self.diag.len()
    }

    fn counts_below(&self, lambdas: &[f64]) -> Vec<usize> {
        in_lanes(lambdas, |lanes| self.counts_lanes(lanes))
    }

    fn gershgorin(&self) -> (f64, f64) {
        gershgorin_band(&self.diag, |i| {
            let left = if i > 0 { self.off[i - 1].abs() } else { 0.0 };
            let right = if i + 1 < self.diag.len() { self.off[i].abs() } else { 0.0 };
            left + right
        })
    }
}

/// Cyclic tridiagonal matrix: `off[i]` couples `i` and `i + 1` for
/// `i < n - 1`, and `off[n - 1]` couples `n - 1` with `0`.
#[derive(Debug, Clone)]
pub struct PeriodicTridiag {
    diag: Vec<f64>,
    off: Vec<f64>,
    pivmin: f64,
}

impl PeriodicTridiag {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Result<Self> {
        if diag.len() < 3 || off.len() != diag.len() {
            return Err(LabError::Config(format!(
                "periodic matrix needs n >= 3 diagonal and n coupling entries, got {} and {}",
                diag.len(),
                off.len()
            )));
        }
        let scale = off.iter().map(|e| e * e).fold(1.0, f64::max);
        let pivmin = f64::MIN_POSITIVE.sqrt() * scale;
        Ok(PeriodicTridiag { diag, off, pivmin })
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.diag.len();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = self.diag[i];
            let j = (i + 1) % n;
            m[(i, j)] += self.off[i];
            m[(j, i)] += self.off[i];
        }
        m
    }

    // The ring is folded into a ladder of node pairs (k, n-1-k); each pair is
    // coupled to the next through a diagonal 2x2 block, and inertia is read
    // off a block LDL^T factorization with 2x2 pivots.
    fn counts_lanes(&self, lam: &[f64; LANES]) -> [usize; LANES] {
        let n = self.diag.len();
        let pairs = n / 2;
        let thr = self.pivmin;
        // inverse of the previous pivot, stored as (a, b, c) of [[a, b], [b, c]]
        let mut inv = [(0.0f64, 0.0f64, 0.0f64); LANES];
        let mut c = [0usize; LANES];
        for k in 0..pairs {
            let (p, r) = (k, n - 1 - k);
            let inner = if k == 0 {
                self.off[n - 1]
            } else if r == p + 1 {
                self.off[p]
            } else {
                0.0
            };
            let (b1, b2) = if k > 0 { (self.off[k - 1], self.off[r]) } else { (0.0, 0.0) };
            for l in 0..LANES {
                let (ia, ib, ic) = inv[l];
                let a = self.diag[p] - lam[l] - b1 * b1 * ia;
                let b = inner - b1 * b2 * ib;
                let cc = self.diag[r] - lam[l] - b2 * b2 * ic;
                let mut det = a * cc - b * b;
                if !(det.abs() >= thr) {
                    det = -thr;
                }
                c[l] += if det < 0.0 {
                    1
                } else if a + cc < 0.0 {
                    2
                } else {
                    0
                };
                inv[l] = (cc / det, -b / det, a / det);
            }
        }
        if n % 2 == 1 {
            let m = pairs;
            let (b1, b2) = (self.off[m - 1], self.off[m]);
            for l in 0..LANES {
                let (ia, ib, ic) = inv[l];
                let s = self.diag[m] - lam[l] - (b1 * b1 * ia + 2.0 * b1 * b2 * ib + b2 * b2 * ic);
                c[l] += (s < 0.0) as usize;
            }
        }
        c
    }
}

impl InertiaCount for PeriodicTridiag {
    fn dim(&self) -> usize {
        self.diag.len()
    }

    fn counts_below(&self, lambdas: &[f64]) -> Vec<usize> {
        in_lanes(lambdas, |lanes| self.counts_lanes(lanes))
    }

    fn gershgorin(&self) -> (f64, f64) {
        let n = self.diag.len();
        gershgorin_band(&self.diag, |i| self.off[i].abs() + self.off[(i + n - 1) % n].abs())
    }
}

fn in_lanes(lambdas: &[f64], f: impl Fn(&[f64; LANES]) -> [usize; LANES]) -> Vec<usize> {
    let mut out = Vec::with_capacity(lambdas.len());
    for chunk in lambdas.chunks(LANES) {
        let mut lanes = [chunk[0]; LANES];
        lanes[..chunk.len()].copy_from_slice(chunk);
        let counts = f(&lanes);
        out.extend_from_slice(&counts[..chunk.len()]);
    }
    out
}

fn gershgorin_band(diag: &[f64], radius: impl Fn(usize) -> f64) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (i, &d) in diag.iter().enumerate() {
        let r = radius(i);
        lo = lo.min(d - r);
        hi = hi.max(d + r);
    }
    let pad = 1e-12 * lo.abs().max(hi.abs()).max(1.0);
    (lo - pad, hi + pad)
}

/// All eigenvalues in `[lo, hi)`, ascending and with multiplicity, each
/// located to within `tol` (or the operator's resolution floor if coarser).
pub fn eigenvalues_in<C: InertiaCount + ?Sized>(op: &C, lo: f64, hi: f64, tol: f64) -> Vec<f64> {
    if !(lo < hi) {
        return Vec::new();
    }
    let floor = op.resolution_floor();
    let counts = op.counts_below(&[lo, hi]);
    let mut live = Vec::new();
    if counts[1] > counts[0] {
        live.push((lo, hi, counts[0], counts[1]));
    }
    let mut found = Vec::with_capacity(counts[1].saturating_sub(counts[0]));
    while !live.is_empty() {
        let mut active = Vec::with_capacity(live.len());
        for (a, b, ca, cb) in live.drain(..) {
            let mid = 0.5 * (a + b);
            let width_tol = tol.max(floor).max(4.0 * f64::EPSILON * mid.abs());
            if b - a <= width_tol || mid <= a || mid >= b {
                found.extend(std::iter::repeat_n(mid, cb - ca));
            } else {
                active.push((a, b, ca, cb, mid));
            }
        }
        if active.is_empty() {
            break;
        }
        let mids: Vec<f64> = active.iter().map(|t| t.4).collect();
        let cm = op.counts_below(&mids);
        for ((a, b, ca, cb, mid), c) in active.into_iter().zip(cm) {
            // counts are monotone in exact arithmetic; clamp rounding noise
            let c = c.clamp(ca, cb);
            if c > ca {
                live.push((a, mid, ca, c));
            }
            if cb > c {
                live.push((mid, b, c, cb));
            }
        }
    }
    found.sort_by(|x, y| x.total_cmp(y));
    found
}

/// Every eigenvalue of the operator.
pub fn all_eigenvalues<C: InertiaCount + ?Sized>(op: &C, tol: f64) -> Vec<f64> {
    let (lo, hi) = op.gershgorin();
    eigenvalues_in(op, lo, hi, tol)
}

/// Eigenvalues of a dense symmetric matrix, ascending.
pub fn dense_symmetric_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = m.clone().symmetric_eigenvalues().iter().cloned().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// Sign and log-magnitude of a determinant via LU with partial pivoting.
/// `m` is row-major `n x n`.
pub fn lu_log_det(mut m: Vec<f64>, n: usize) -> (f64, f64) {
    assert_eq!(m.len(), n * n);
    let mut sign = 1.0;
    let mut log_abs = 0.0;
    for col in 0..n {
        let mut piv = col;
        let mut best = m[col * n + col].abs();
        for row in col + 1..n {
            let v = m[row * n + col].abs();
            if v > best {
                best = v;
                piv = row;
            }
        }
        if best == 0.0 {
            return (0.0, f64::NEG_INFINITY);
        }
        if piv != col {
            for k in 0..n {
                m.swap(col * n + k, piv * n + k);
            }
            sign = -sign;
        }
        let p = m[col * n + col];
        if p < 0.0 {
            sign = -sign;
        }
        log_abs += p.abs().ln();
        for row in col + 1..n {
            let factor = m[row * n + col] / p;
            if factor != 0.0 {
                for k in col + 1..n {
                    m[row * n + k] -= factor * m[col * n + k];
                }
            }
        }
    }
    (sign, log_abs)
}
