//! Airy function of the first kind on the real line.
//!
//! For `|x| <= 8` the Maclaurin series is summed in double-double arithmetic,
//! which absorbs the cancellation between the two power series on the
//! negative axis. Outside that window the classical asymptotic expansions are
//! truncated at their smallest term. For `x > 20` the canonical output is the
//! scaled value `Ai(x) exp(2/3 x^{3/2})`, because `Ai` itself underflows near
//! `x = 104`.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{LabError, Result};

/// Switch point between the power series and the asymptotic expansions.
pub const SERIES_RADIUS: f64 = 8.0;
/// Beyond this point only the scaled representation is authoritative.
pub const SCALED_THRESHOLD: f64 = 20.0;

// Ai(0) and -Ai'(0) split into leading and trailing doubles.
const AI0: Dd = Dd::new(0.355_028_053_887_817_2, 2.052_336_324_362_12e-17);
const NEG_AIP0: Dd = Dd::new(0.258_819_403_792_806_8, -2.522_243_111_610_832e-17);

/// One evaluation of `Ai`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AiryEval {
    /// `Ai(x)`; underflows to zero for `x` beyond roughly 104.
    pub value: f64,
    /// `Ai(x) exp(2/3 x^{3/2})` for `x > 0`, equal to `value` otherwise.
    pub scaled_value: f64,
    x: f64,
}

impl AiryEval {
    /// Natural logarithm of `Ai(x)`, valid for `x > 0` at any magnitude.
    pub fn ln_value(&self) -> f64 {
        if self.x > 0.0 {
            self.scaled_value.ln() - zeta(self.x)
        } else {
            self.value.ln()
        }
    }

    pub fn argument(&self) -> f64 {
        self.x
    }
}

/// `Ai(x)` with the scaled companion value.
pub fn airy_ai(x: f64) -> Result<AiryEval> {
    if !x.is_finite() {
        return Err(LabError::Domain(format!("Ai requires a finite argument, got {x}")));
    }
    Ok(eval(x))
}

/// Elementwise [`airy_ai`]; fails on the first non-finite entry.
pub fn airy_ai_batch(xs: &[f64]) -> Result<Vec<AiryEval>> {
    xs.iter().map(|&x| airy_ai(x)).collect()
}

/// `Ai'(x)`.
pub fn airy_ai_prime(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(LabError::Domain(format!("Ai' requires a finite argument, got {x}")));
    }
    Ok(ai_prime(x))
}

/// The `k`-th zero of `Ai` (negative, `k >= 1`), polished by Newton steps
/// and confirmed by a sign change.
pub fn airy_ai_zero(k: usize) -> Result<f64> {
    if k == 0 {
        return Err(LabError::Domain("Airy zeros are indexed from 1".into()));
    }
    let t = 3.0 * PI * (4.0 * k as f64 - 1.0) / 8.0;
    let t2 = t * t;
    let mut x = -t.powf(2.0 / 3.0) * (1.0 + 5.0 / 48.0 / t2 - 5.0 / 36.0 / (t2 * t2));
    for _ in 0..50 {
        let step = ai(x) / ai_prime(x);
        x -= step;
        if step.abs() < 1e-15 * x.abs().max(1.0) {
            break;
        }
    }
    let h = 1e-12 * x.abs().max(1.0);
    if ai(x - h).signum() == ai(x + h).signum() {
        return Err(LabError::Resolution(format!("Airy zero {k} did not converge (x = {x})")));
    }
    Ok(x)
}

fn zeta(x: f64) -> f64 {
    2.0 / 3.0 * x * x.sqrt()
}

fn eval(x: f64) -> AiryEval {
    if x > SERIES_RADIUS {
        let scaled = asymptotic_pos_scaled(x);
        AiryEval { value: scaled * (-zeta(x)).exp(), scaled_value: scaled, x }
    } else {
        let value = if x < -SERIES_RADIUS { asymptotic_neg(-x).0 } else { series(x).0 };
        let scaled_value = if x > 0.0 { value * zeta(x).exp() } else { value };
        AiryEval { value, scaled_value, x }
    }
}

/// Unchecked `Ai(x)`; used in quadrature inner loops.
pub(crate) fn ai(x: f64) -> f64 {
    if x > SERIES_RADIUS {
        asymptotic_pos_scaled(x) * (-zeta(x)).exp()
    } else if x < -SERIES_RADIUS {
        asymptotic_neg(-x).0
    } else {
        series(x).0
    }
}

pub(crate) fn ai_prime(x: f64) -> f64 {
    if x > SERIES_RADIUS {
        asymptotic_pos_prime_scaled(x) * (-zeta(x)).exp()
    } else if x < -SERIES_RADIUS {
        asymptotic_neg(-x).1
    } else {
        series(x).1
    }
}

/// Maclaurin series for `(Ai, Ai')`.
pub(crate) fn series(x: f64) -> (f64, f64) {
    let xd = Dd::from(x);
    let x3 = xd.mul(xd).mul(xd);
    // f = sum a_k, g = sum b_k with Ai = Ai(0) f + Ai'(0) g
    let mut a = Dd::from(1.0);
    let mut b = xd;
    let mut f = a;
    let mut g = b;
    // derivative series: f' starts at k = 1 with x^2 / 2, g' at k = 0
    let mut fp_term = xd.mul(xd).div(2.0);
    let mut gp_term = Dd::from(1.0);
    let mut fp = fp_term;
    let mut gp = gp_term;
    for k in 1..200usize {
        let kf = k as f64;
        a = x3.mul(a).div((3.0 * kf - 1.0) * (3.0 * kf));
        b = x3.mul(b).div((3.0 * kf) * (3.0 * kf + 1.0));
        f = f.add(a);
        g = g.add(b);
        if k >= 2 {
            fp_term = x3.mul(fp_term).div((3.0 * kf - 3.0) * (3.0 * kf - 1.0));
            fp = fp.add(fp_term);
        }
        gp_term = x3.mul(gp_term).div((3.0 * kf - 2.0) * (3.0 * kf));
        gp = gp.add(gp_term);
        let scale = 1.0 + f.hi.abs() + g.hi.abs() + fp.hi.abs() + gp.hi.abs();
        let last = a.hi.abs() + b.hi.abs() + fp_term.hi.abs() + gp_term.hi.abs();
        if k > 2 && last < 1e-34 * scale {
            break;
        }
    }
    let value = AI0.mul(f).sub(NEG_AIP0.mul(g));
    let deriv = AI0.mul(fp).sub(NEG_AIP0.mul(gp));
    (value.to_f64(), deriv.to_f64())
}

/// Coefficients `u_k` of the Airy asymptotic expansions.
fn u_coeffs() -> &'static [f64; N_ASYMPTOTIC] {
    static U: OnceLock<[f64; N_ASYMPTOTIC]> = OnceLock::new();
    U.get_or_init(|| {
        let mut u = [1.0; N_ASYMPTOTIC];
        for k in 1..N_ASYMPTOTIC {
            let kf = k as f64;
            u[k] = u[k - 1] * (6.0 * kf - 5.0) * (6.0 * kf - 3.0) * (6.0 * kf - 1.0)
                / ((2.0 * kf - 1.0) * 216.0 * kf);
        }
        u
    })
}

fn v_coeff(u: &[f64], k: usize) -> f64 {
    if k == 0 {
        1.0
    } else {
        let kf = k as f64;
        -u[k] * (6.0 * kf + 1.0) / (6.0 * kf - 1.0)
    }
}

const N_ASYMPTOTIC: usize = 64;

/// Sums `sum_k (-1)^k c_k z^{-k}` stopping at the smallest term.
fn alternating_sum(coeff: impl Fn(usize) -> f64, inv_z: f64, stride: usize, offset: usize) -> f64 {
    let mut sum = 0.0;
    let mut prev = f64::INFINITY;
    let mut sign = 1.0;
    let mut k = offset;
    let mut pow = inv_z.powi(offset as i32);
    let step_pow = inv_z.powi(stride as i32);
    while k < N_ASYMPTOTIC {
        let term = coeff(k) * pow;
        if term.abs() > prev {
            break;
        }
        sum += sign * term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
        prev = term.abs();
        sign = -sign;
        k += stride;
        pow *= step_pow;
    }
    sum
}

fn asymptotic_pos_scaled(x: f64) -> f64 {
    let u = u_coeffs();
    let z = zeta(x);
    let s = alternating_sum(|k| u[k], 1.0 / z, 1, 0);
    s / (2.0 * PI.sqrt() * x.powf(0.25))
}

fn asymptotic_pos_prime_scaled(x: f64) -> f64 {
    let u = u_coeffs();
    let z = zeta(x);
    let s = alternating_sum(|k| v_coeff(u, k), 1.0 / z, 1, 0);
    -x.powf(0.25) * s / (2.0 * PI.sqrt())
}

/// `(Ai(-x), Ai'(-x))` for large positive `x`.
fn asymptotic_neg(x: f64) -> (f64, f64) {
    let u = u_coeffs();
    let z = zeta(x);
    let inv = 1.0 / z;
    let p = alternating_sum(|k| u[k], inv, 2, 0);
    let q = alternating_sum(|k| u[k], inv, 2, 1);
    let pv = alternating_sum(|k| v_coeff(u, k), inv, 2, 0);
    let qv = alternating_sum(|k| v_coeff(u, k), inv, 2, 1);
    let (s, c) = (z - PI / 4.0).sin_cos();
    let x4 = x.powf(0.25);
    let value = (c * p + s * q) / (PI.sqrt() * x4);
    let deriv = x4 * (s * pv - c * qv) / PI.sqrt();
    (value, deriv)
}

/// Minimal double-double arithmetic for the power series.
#[derive(Debug, Clone, Copy)]
struct Dd {
    hi: f64,
    lo: f64,
}

impl Dd {
    const fn new(hi: f64, lo: f64) -> Self {
        Dd { hi, lo }
    }

    fn from(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    fn quick_two_sum(a: f64, b: f64) -> Self {
        let s = a + b;
        Dd { hi: s, lo: b - (s - a) }
    }

    fn add(self, o: Dd) -> Dd {
        let s = self.hi + o.hi;
        let bb = s - self.hi;
        let e = (self.hi - (s - bb)) + (o.hi - bb);
        Dd::quick_two_sum(s, e + self.lo + o.lo)
    }

    fn sub(self, o: Dd) -> Dd {
        self.add(Dd { hi: -o.hi, lo: -o.lo })
    }

    fn mul(self, o: Dd) -> Dd {
        let p = self.hi * o.hi;
        let e = self.hi.mul_add(o.hi, -p);
        Dd::quick_two_sum(p, e + (self.hi * o.lo + self.lo * o.hi))
    }

    fn div(self, d: f64) -> Dd {
        let q1 = self.hi / d;
        let p = q1 * d;
        let e = q1.mul_add(d, -p);
        let r = ((self.hi - p) - e + self.lo) / d;
        Dd::quick_two_sum(q1, r)
    }

}

#[cfg(test)]
mod tests {
    use super::*;

    // Reference values from a 50-digit evaluation of Ai and Ai'.
    const TABLE: &[(f64, f64, f64)] = &[
        (-20.0, -0.17640612707798469, 0.89286285673647124),
        (-15.5, -0.16644795409041977, 0.9049379354302122),
        (-12.0, -0.066555175054373129, 1.0231104533679707),
        (-9.0, -0.022133721547341404, -0.97566398092633159),
        (-8.0, -0.052705050356386203, 0.93556093819830655),
        (-7.5, 0.32177571638064788, 0.3188095066985546),
        (-5.0, 0.35076100902411432, 0.32719281855444314),
        (-3.3, -0.41718093737455014, -0.070963617177835884),
        (-2.0, 0.22740742820168558, 0.61825902074169104),
        (-1.0, 0.53556088329235212, -0.010160567116645209),
        (-0.4, 0.4542256138886674, -0.22503140930241503),
        (0.0, 0.35502805388781724, -0.2588194037928068),
        (0.7, 0.18916240039815008, -0.19985119158228048),
        (1.0, 0.13529241631288142, -0.15914744129679321),
        (2.5, 0.01572592338047049, -0.02625088103590323),
        (4.0, 0.00095156385120480187, -0.0019586409502041789),
        (6.0, 9.9476943602528896e-6, -2.4765200397034955e-5),
        (7.9, 6.2396400972839342e-8, -1.7729958329430335e-7),
        (8.0, 4.6922076160992316e-8, -1.3414392979067866e-7),
        (8.3, 1.9748617496676891e-8, -5.7475397363379974e-8),
        (10.0, 1.1047532552898686e-10, -3.5206336767389236e-10),
        (14.0, 9.9202054911923773e-17, -3.7293101100179007e-16),
        (20.0, 1.6916728686705403e-27, -7.586391625748355e-27),
    ];

    #[test]
    fn matches_reference_table() {
        for &(x, ai_ref, aip_ref) in TABLE {
            let v = airy_ai(x).unwrap().value;
            let d = airy_ai_prime(x).unwrap();
            assert!((v - ai_ref).abs() <= 1e-12, "Ai({x}) = {v:e}, want {ai_ref:e}");
            assert!((d - aip_ref).abs() <= 1e-11, "Ai'({x}) = {d:e}, want {aip_ref:e}");
            if x > 0.0 {
                assert!(((v - ai_ref) / ai_ref).abs() < 1e-11, "relative error at {x}");
            }
        }
    }

    /// Independent check of Ai(0) = 3^{-2/3} / Gamma(2/3) with Gamma(2/3)
    /// from its Euler-Gauss product limit, accelerated by a Stirling tail.
    #[test]
    fn value_at_origin_matches_gamma_identity() {
        // ln Gamma(z) via recursion to z + 20 then Stirling with four terms.
        fn ln_gamma(z: f64) -> f64 {
            let mut shift = 0.0;
            let mut w = z;
            while w < 20.0 {
                shift -= w.ln();
                w += 1.0;
            }
            let inv = 1.0 / w;
            let inv2 = inv * inv;
            shift
                + (w - 0.5) * w.ln()
                - w
                + 0.5 * (2.0 * PI).ln()
                + inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 / 1680.0)))
        }
        let oracle = 3f64.powf(-2.0 / 3.0) / ln_gamma(2.0 / 3.0).exp();
        let v = airy_ai(0.0).unwrap().value;
        assert!((v - 0.355_028_053_887_817_2).abs() < 1e-15);
        assert!((v - oracle).abs() < 1e-13, "{v} vs {oracle}");
    }

    #[test]
    fn first_zero_by_bisection() {
        let (mut lo, mut hi) = (-2.5, -2.0);
        assert!(ai(lo) < 0.0 && ai(hi) > 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if ai(mid) < 0.0 {
                lo = mid
            } else {
                hi = mid
            }
        }
        let zero = 0.5 * (lo + hi);
        assert!((zero - (-2.338_107_410_459_767)).abs() < 1e-12);
        assert!(airy_ai(-2.338_107_410_459_767).unwrap().value.abs() < 1e-10);
        assert!((airy_ai_zero(1).unwrap() - zero).abs() < 1e-12);
    }

    #[test]
    fn zeros_match_reference() {
        let reference = [
            -2.338107410459767,
            -4.0879494441309706,
            -5.5205598280955511,
            -6.786708090071759,
            -7.9441335871208531,
        ];
        for (k, z) in reference.iter().enumerate() {
            assert!((airy_ai_zero(k + 1).unwrap() - z).abs() < 1e-12);
        }
    }

    #[test]
    fn series_and_asymptotics_agree_at_switch_points() {
        for x in [SERIES_RADIUS, SERIES_RADIUS + 0.5] {
            let (s, sp) = series(x);
            let a = asymptotic_pos_scaled(x) * (-zeta(x)).exp();
            let ap = asymptotic_pos_prime_scaled(x) * (-zeta(x)).exp();
            assert!((s - a).abs() <= 1e-12 && (sp - ap).abs() <= 1e-12, "x={x}");
            let (s, sp) = series(-x);
            let (a, ap) = asymptotic_neg(x);
            assert!((s - a).abs() <= 1e-12, "x=-{x}: {s} vs {a}");
            assert!((sp - ap).abs() <= 1e-12, "x=-{x}: {sp} vs {ap}");
        }
    }

    #[test]
    fn scaled_representation_beyond_threshold() {
        for (x, scaled, ln_ai) in [
            (25.0, 0.12605216203160696, -85.404392806654049),
            (50.0, 0.10605346975916804, -237.94607227587854),
            (120.0, 0.0852246765434774, -878.81855626455556),
        ] {
            let e = airy_ai(x).unwrap();
            assert!(((e.scaled_value - scaled) / scaled).abs() < 1e-13);
            assert!((e.ln_value() - ln_ai).abs() < 1e-11);
            assert!(e.value.is_finite());
        }
    }

    #[test]
    fn decays_monotonically_on_positive_axis() {
        let vals: Vec<f64> = (1..=10).map(|k| airy_ai(k as f64).unwrap().value).collect();
        assert!(vals.windows(2).all(|w| w[1] < w[0]));
        let mut prev = f64::INFINITY;
        let mut x = 0.0;
        while x <= 30.0 {
            let v = airy_ai(x).unwrap();
            assert!(v.value > 0.0 && v.value <= airy_ai(0.0).unwrap().value);
            assert!(v.value < prev);
            prev = v.value;
            x += 0.05;
        }
    }

    #[test]
    fn satisfies_airy_equation() {
        let h = 1e-4;
        let mut x = -5.0;
        while x <= 5.0 {
            let second = (ai(x + h) - 2.0 * ai(x) + ai(x - h)) / (h * h);
            assert!((second - x * ai(x)).abs() < 1e-6, "x = {x}");
            x += 0.01;
        }
    }

    #[test]
    fn batch_is_elementwise() {
        assert!(airy_ai_batch(&[]).unwrap().is_empty());
        assert_eq!(airy_ai_batch(&[0.0]).unwrap(), vec![airy_ai(0.0).unwrap()]);
        let xs: Vec<f64> = (0..200).map(|i| -25.0 + 0.37 * i as f64).collect();
        let batch = airy_ai_batch(&xs).unwrap();
        for (x, e) in xs.iter().zip(batch) {
            assert_eq!(e, airy_ai(*x).unwrap());
        }
    }

    #[test]
    fn rejects_non_finite() {
        assert!(matches!(airy_ai(f64::NAN), Err(LabError::Domain(_))));
        assert!(matches!(airy_ai(f64::INFINITY), Err(LabError::Domain(_))));
        assert!(airy_ai_batch(&[0.0, f64::NEG_INFINITY]).is_err());
    }
}
