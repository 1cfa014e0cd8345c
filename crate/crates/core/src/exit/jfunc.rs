//! Mutual information of consistent Gaussian LLRs and the related
//! variance conversions.
//!
//! A consistent Gaussian LLR with standard deviation `sigma` has mean
//! `sigma^2 / 2`. Expectations over it are evaluated by composite Simpson
//! quadrature in the standardized variable `z`, where `L = sigma^2/2 + sigma z`.

use std::sync::OnceLock;

use num_traits::Float;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;
use crate::scalar::{lit, to_f64, Scalar};

const Z_SPAN: f64 = 10.0;
const QUAD_INTERVALS: usize = 4000;

/// `log2(1 + exp(-x))` without overflow.
#[inline]
fn log2_1p_exp_neg<T: Scalar>(x: T) -> T {
    let sp = if x > T::zero() { Float::ln_1p(Float::exp(-x)) } else { -x + Float::ln_1p(Float::exp(x)) };
    sp / lit(std::f64::consts::LN_2)
}

/// `1 - tanh^2(x / 2)` without overflow.
#[inline]
fn sech2_half<T: Scalar>(x: T) -> T {
    let e = Float::exp(-Float::abs(x));
    let d = T::one() + e;
    lit::<T>(4.0) * e / (d * d)
}

/// `E[f(L)]` for `L ~ N(sigma^2/2, sigma^2)`.
fn consistent_expectation<T: Scalar>(sigma: T, intervals: usize, f: impl Fn(T) -> T) -> T {
    let mean = sigma * sigma / lit(2.0);
    if sigma == T::zero() {
        return f(T::zero());
    }
    let a: T = lit(-Z_SPAN);
    let h: T = lit(2.0 * Z_SPAN / intervals as f64);
    let norm: T = lit(1.0 / (2.0 * std::f64::consts::PI).sqrt());
    let g = |z: T| norm * Float::exp(-z * z / lit(2.0)) * f(mean + sigma * z);
    let mut acc = g(a) + g(-a);
    for i in 1..intervals {
        let z = a + h * lit(i as f64);
        let w: T = if i % 2 == 1 { lit(4.0) } else { lit(2.0) };
        acc += w * g(z);
    }
    acc * h / lit(3.0)
}

/// `J(sigma) = 1 - E[log2(1 + exp(-L))]`, the mutual information between a
/// BPSK symbol and a consistent Gaussian LLR of standard deviation `sigma`.
pub fn j_function<T: Scalar>(sigma: T) -> T {
    let sigma = Float::abs(sigma);
    if sigma == T::zero() {
        return T::zero();
    }
    let v = T::one() - consistent_expectation(sigma, QUAD_INTERVALS, log2_1p_exp_neg);
    Float::max(T::zero(), Float::min(T::one(), v))
}

/// Inverse of [`j_function`] by safeguarded bisection on the quadrature,
/// accurate to `|J(sigma) - I| <= 1e-9`.
pub fn j_inverse<T: Scalar>(i: T) -> Result<T> {
    let i64_ = to_f64(i);
    if !(0.0..1.0).contains(&i64_) {
        return Err(Error::invalid(format!("J^-1 requires I in [0, 1), got {i64_}")));
    }
    if i64_ == 0.0 {
        return Ok(T::zero());
    }
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    while j_function(hi) < i64_ {
        hi *= 2.0;
        if hi > 1e3 {
            return Err(Error::Numerical(format!("J^-1({i64_}) beyond quadrature range")));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let jm = j_function(mid);
        if (jm - i64_).abs() <= 1e-12 {
            return Ok(lit(mid));
        }
        if jm < i64_ {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 {
            break;
        }
    }
    Ok(lit(0.5 * (lo + hi)))
}

/// A-priori mutual information seen by the decoders when the detector's
/// extrinsic variance is `v_e`: `J(sqrt(4 / v_e))`.
pub fn variance_to_mutual_info<T: Scalar>(v_e: T) -> T {
    if !(v_e > T::zero()) {
        return T::one();
    }
    j_function(Float::sqrt(lit::<T>(4.0) / v_e))
}

/// `E[1 - tanh^2(L / 2)]` for a consistent Gaussian LLR of standard
/// deviation `sigma`: the soft-symbol variance fed back to the detector.
pub fn feedback_variance<T: Scalar>(sigma: T) -> T {
    consistent_expectation(Float::abs(sigma), QUAD_INTERVALS, sech2_half)
}

/// Monte-Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
}

/// Sample settings for Monte-Carlo expectations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    pub samples: usize,
    pub seed: u64,
}

impl Default for McConfig {
    fn default() -> Self {
        Self { samples: 100_000, seed: 0 }
    }
}

/// Fed-back soft-symbol variance for decoder output information `i_e`:
/// `E[1 - tanh^2(L/2)]` with `L ~ N(m_e, 2 m_e)`, `m_e = J^-1(i_e)^2 / 2`,
/// estimated by Monte Carlo.
pub fn mutual_info_to_variance(i_e: f64, cfg: &McConfig) -> Result<McEstimate> {
    if cfg.samples < 2 {
        return Err(Error::invalid("Monte-Carlo estimate needs at least 2 samples"));
    }
    let sigma: f64 = j_inverse(i_e)?;
    let m = sigma * sigma / 2.0;
    let mut rng = rng_from_seed(cfg.seed);
    let (mut s, mut s2) = (0.0f64, 0.0f64);
    for _ in 0..cfg.samples {
        let z: f64 = rng.sample(StandardNormal);
        let x = sech2_half(m + sigma * z);
        s += x;
        s2 += x * x;
    }
    let n = cfg.samples as f64;
    let mean = s / n;
    let var = (s2 / n - mean * mean).max(0.0) * n / (n - 1.0);
    Ok(McEstimate { mean, std_error: (var / n).sqrt(), samples: cfg.samples })
}

/// Quadrature counterpart of [`mutual_info_to_variance`].
pub fn mutual_info_to_variance_quadrature(i_e: f64) -> Result<f64> {
    Ok(feedback_variance(j_inverse::<f64>(i_e)?))
}

/// Tabulated `J` and feedback variance on a uniform `sigma` grid with
/// cubic interpolation, shared process-wide.
#[derive(Debug)]
pub struct JTables {
    step: f64,
    j: Vec<f64>,
    phi: Vec<f64>,
}

const TABLE_STEP: f64 = 2e-3;
const TABLE_MAX_SIGMA: f64 = 24.0;

impl JTables {
    pub fn global() -> &'static JTables {
        static TABLES: OnceLock<JTables> = OnceLock::new();
        TABLES.get_or_init(|| JTables::build(TABLE_STEP, TABLE_MAX_SIGMA))
    }

    fn build(step: f64, max_sigma: f64) -> Self {
        let n = (max_sigma / step).round() as usize + 1;
        let mut j = Vec::with_capacity(n);
        let mut phi = Vec::with_capacity(n);
        for i in 0..n {
            let s = i as f64 * step;
            // Fewer intervals suffice on the table grid; cubic
            // interpolation keeps the overall error below 1e-8.
            if s == 0.0 {
                j.push(0.0);
                phi.push(1.0);
            } else {
                j.push((1.0 - consistent_expectation(s, 2000, log2_1p_exp_neg::<f64>)).clamp(0.0, 1.0));
                phi.push(consistent_expectation(s, 2000, sech2_half::<f64>).clamp(0.0, 1.0));
            }
        }
        // Enforce strict monotonicity where rounding flattened the tails.
        for i in 1..n {
            if j[i] < j[i - 1] {
                j[i] = j[i - 1];
            }
            if phi[i] > phi[i - 1] {
                phi[i] = phi[i - 1];
            }
        }
        Self { step, j, phi }
    }

    fn max_sigma(&self) -> f64 {
        (self.j.len() - 1) as f64 * self.step
    }

    /// Catmull-Rom value and derivative (per unit `t`) in cell `i`.
    #[inline]
    fn cell(table: &[f64], i: usize, t: f64) -> (f64, f64) {
        let n = table.len();
        let p1 = table[i];
        let p2 = table[i + 1];
        // Both tabulated functions are even in sigma.
        let p0 = if i == 0 { table[1] } else { table[i - 1] };
        let p3 = if i + 2 < n { table[i + 2] } else { 2.0 * p2 - p1 };
        let a = 0.5 * (p2 - p0);
        let b = 0.5 * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3);
        let c = 0.5 * (3.0 * (p1 - p2) + p3 - p0);
        (p1 + t * (a + t * (b + t * c)), a + t * (2.0 * b + 3.0 * t * c))
    }

    #[inline]
    fn interp(&self, table: &[f64], sigma: f64) -> f64 {
        let x = sigma.abs() / self.step;
        let n = table.len();
        if x >= (n - 1) as f64 {
            return table[n - 1];
        }
        let i = x as usize;
        Self::cell(table, i, x - i as f64).0
    }

    #[inline]
    pub fn j(&self, sigma: f64) -> f64 {
        self.interp(&self.j, sigma).clamp(0.0, 1.0)
    }

    #[inline]
    pub fn phi(&self, sigma: f64) -> f64 {
        self.interp(&self.phi, sigma).clamp(0.0, 1.0)
    }

    /// Inverse lookup of a monotone table: binary search for the cell,
    /// then safeguarded Newton on the cell's cubic.
    fn invert(&self, table: &[f64], target: f64, increasing: bool) -> f64 {
        let n = table.len();
        let below = |x: f64| if increasing { x < target } else { x > target };
        if below(table[n - 1]) {
            return self.max_sigma();
        }
        if !below(table[0]) {
            return 0.0;
        }
        let (mut lo, mut hi) = (0usize, n - 1);
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if below(table[mid]) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (p1, p2) = (table[lo], table[hi]);
        let (mut a, mut b) = (0.0f64, 1.0f64);
        let mut t = if p2 != p1 { ((target - p1) / (p2 - p1)).clamp(0.0, 1.0) } else { 0.5 };
        for _ in 0..30 {
            let (f, df) = Self::cell(table, lo, t);
            let r = f - target;
            if r == 0.0 {
                break;
            }
            if below(f) {
                a = t;
            } else {
                b = t;
            }
            let mut next = if df != 0.0 { t - r / df } else { f64::NAN };
            if !(next > a && next < b) {
                next = 0.5 * (a + b);
            }
            if (next - t).abs() < 1e-13 {
                t = next;
                break;
            }
            t = next;
        }
        (lo as f64 + t) * self.step
    }

    /// `J^-1(i)`; saturates at the table edge for `i` numerically 1.
    pub fn j_inv(&self, i: f64) -> f64 {
        if i <= 0.0 {
            return 0.0;
        }
        self.invert(&self.j, i.min(1.0), true)
    }

    /// LLR standard deviation whose feedback variance equals `v`.
    pub fn phi_inv(&self, v: f64) -> f64 {
        if v >= 1.0 {
            return 0.0;
        }
        self.invert(&self.phi, v.max(0.0), false)
    }

    /// Mutual information whose Gaussian feedback variance equals `v`.
    pub fn variance_to_info(&self, v: f64) -> f64 {
        self.j(self.phi_inv(v))
    }

    /// Feedback variance for mutual information `i`.
    pub fn info_to_variance(&self, i: f64) -> f64 {
        self.phi(self.j_inv(i))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints() {
        assert_eq!(j_function(0.0f64), 0.0);
        assert!(j_function(100.0f64) > 1.0 - 1e-6);
        assert_eq!(j_inverse(0.0f64).unwrap(), 0.0);
        assert!(j_inverse(1.0f64).is_err());
        assert!(j_inverse(-0.1f64).is_err());
    }

    #[test]
    fn roundtrip_and_monotone() {
        let s: f64 = j_inverse(0.5).unwrap();
        assert!((j_function(s) - 0.5).abs() < 1e-9);
        assert!(j_inverse(0.8f64).unwrap() > j_inverse(0.3f64).unwrap());
    }

    #[test]
    fn uninformative_feedback() {
        assert!((feedback_variance(0.0f64) - 1.0).abs() < 1e-15);
        let e = mutual_info_to_variance(0.0, &McConfig::default()).unwrap();
        assert!((e.mean - 1.0).abs() < 1e-15);
        assert!(mutual_info_to_variance(0.9999, &McConfig::default()).unwrap().mean < 1e-3);
    }

    #[test]
    fn tables_match_quadrature() {
        let t = JTables::global();
        for &s in &[0.0011, 0.3, 1.0, 2.345, 5.0, 9.99] {
            assert!((t.j(s) - j_function(s)).abs() < 1e-8, "J at {s}");
            assert!((t.phi(s) - feedback_variance(s)).abs() < 1e-8, "phi at {s}");
        }
        for &i in &[1e-4, 0.2, 0.5, 0.9, 0.999] {
            assert!((t.j(t.j_inv(i)) - i).abs() < 1e-9);
        }
        for &v in &[0.9, 0.5, 0.1, 1e-3] {
            assert!((t.phi(t.phi_inv(v)) - v).abs() < 1e-9);
        }
    }

    #[test]
    fn f32_matches_f64() {
        assert!((j_function(1.5f32) as f64 - j_function(1.5f64)).abs() < 1e-5);
    }
}
