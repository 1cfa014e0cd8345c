//! Large-system variance transfer of the LMMSE detector.
//!
//! With i.i.d. `N(0, 1)` channel entries every user collects `M` units of
//! energy, so the noise enters the closed forms as `s = sigma_n^2 / M`.

use num_traits::Float;

use crate::error::{Error, Result};
use crate::scalar::{lit, Scalar};

/// How many interfering users the analysis charges against each user.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Interference {
    /// Load `K / M`, the large-system formula as written.
    LargeSystem,
    /// Load `(K - 1) / M`: every user sees `K - 1` interferers.
    #[default]
    ExcludeSelf,
}

fn check<T: Scalar>(v: T, k: usize, m: usize, sigma_n: T) -> Result<()> {
    if k == 0 || m == 0 {
        return Err(Error::invalid("K and M must be positive"));
    }
    if !(v > T::zero()) || !(sigma_n > T::zero()) {
        return Err(Error::invalid("prior variance and noise level must be positive"));
    }
    Ok(())
}

/// Extrinsic variance `v_e` of the LMMSE output for prior variance `v`:
/// `(s + c v + sqrt((s + c v)^2 + 4 s v)) / 2`, `c = (K - M) / M`.
pub fn lmmse_variance_transfer<T: Scalar>(v: T, k: usize, m: usize, sigma_n: T) -> Result<T> {
    check(v, k, m, sigma_n)?;
    Ok(extrinsic_closed_form(v, lit(k as f64), lit(m as f64), sigma_n))
}

/// Closed form with a real-valued user count (used for `K - 1`).
#[inline]
pub fn extrinsic_closed_form<T: Scalar>(v: T, k: T, m: T, sigma_n: T) -> T {
    let s = sigma_n * sigma_n / m;
    let c = (k - m) / m;
    let b = s + c * v;
    let two: T = lit(2.0);
    let four: T = lit(4.0);
    let disc = Float::sqrt(b * b + four * s * v);
    if b >= T::zero() {
        (b + disc) / two
    } else {
        // Rationalized to avoid cancellation when b < 0.
        two * s * v / (disc - b)
    }
}

/// `F(a, b) = (sqrt((1 + 1/sqrt a)^2 + b) - sqrt((1 - 1/sqrt a)^2 + b))^2`.
pub fn f_function<T: Scalar>(a: T, b: T) -> T {
    let r = T::one() / Float::sqrt(a);
    let p = Float::sqrt((T::one() + r) * (T::one() + r) + b);
    let q = Float::sqrt((T::one() - r) * (T::one() - r) + b);
    (p - q) * (p - q)
}

/// Posterior variance `v (1 - F(K/M, sigma_n^2 / (K v)) / 4)`.
pub fn lmmse_posterior_variance<T: Scalar>(v: T, k: usize, m: usize, sigma_n: T) -> Result<T> {
    check(v, k, m, sigma_n)?;
    let kf: T = lit(k as f64);
    let mf: T = lit(m as f64);
    let snr_inv = sigma_n * sigma_n / (kf * v);
    let quarter: T = lit(0.25);
    Ok(v * (T::one() - quarter * f_function(kf / mf, snr_inv)))
}

/// Large-system limit of [`lmmse_variance_transfer`]:
/// `s/(1 - beta)` for `beta < 1`, `(beta - 1) v` for `beta > 1`, and
/// `v / (sqrt(v K / sigma_n^2) - 1)` at full load.
pub fn lmmse_variance_transfer_asymptotic<T: Scalar>(v: T, k: usize, m: usize, sigma_n: T) -> Result<T> {
    check(v, k, m, sigma_n)?;
    let kf: T = lit(k as f64);
    let mf: T = lit(m as f64);
    let s2 = sigma_n * sigma_n;
    Ok(match k.cmp(&m) {
        std::cmp::Ordering::Less => s2 / (mf - kf),
        std::cmp::Ordering::Greater => (kf - mf) / mf * v,
        std::cmp::Ordering::Equal => {
            let r = Float::sqrt(v * kf / s2);
            if r <= T::one() {
                return Err(Error::invalid(format!("full-load asymptote requires v K / sigma_n^2 > 1, got {}", r * r)));
            }
            v / (r - T::one())
        }
    })
}

/// Detector transfer used by the analysis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmmseTransfer {
    pub k: usize,
    pub m: usize,
    pub sigma_n: f64,
    pub interference: Interference,
}

impl LmmseTransfer {
    pub fn new(k: usize, m: usize, sigma_n: f64, interference: Interference) -> Result<Self> {
        check(1.0, k, m, sigma_n)?;
        Ok(Self { k, m, sigma_n, interference })
    }

    /// Effective user count entering the closed form.
    pub fn effective_users(&self) -> f64 {
        match self.interference {
            Interference::LargeSystem => self.k as f64,
            Interference::ExcludeSelf => self.k as f64 - 1.0,
        }
    }

    pub fn extrinsic_variance(&self, v: f64) -> f64 {
        extrinsic_closed_form(v.max(1e-300), self.effective_users(), self.m as f64, self.sigma_n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_load_unit_example() {
        // s = 1/8: (1/8 + sqrt(1/64 + 1/2)) / 2
        let v = lmmse_variance_transfer(1.0, 8, 8, 1.0).unwrap();
        assert!((v - 0.421535).abs() < 1e-6, "{v}");
    }

    #[test]
    fn zero_prior_limit() {
        for (k, m) in [(8, 8), (16, 8), (4, 8)] {
            let v: f64 = lmmse_variance_transfer(1e-12, k, m, 2.0).unwrap();
            assert!((v - 4.0 / m as f64).abs() < 1e-6, "{k}x{m}: {v}");
        }
    }

    #[test]
    fn posterior_form_agrees() {
        for &(k, m, s, v) in &[(8, 8, 1.0, 1.0), (16, 8, 4.58, 0.3), (4, 8, 0.7, 0.05), (64, 8, 5.43, 0.9)] {
            let vh = lmmse_posterior_variance(v, k, m, s).unwrap();
            let ve = 1.0 / (1.0 / vh - 1.0 / v);
            let direct = lmmse_variance_transfer(v, k, m, s).unwrap();
            assert!((ve - direct).abs() < 1e-9 * direct.max(1.0), "{k} {m}: {ve} vs {direct}");
        }
    }

    #[test]
    fn asymptotic_examples() {
        assert!((lmmse_variance_transfer_asymptotic(0.3, 8, 16, 1.0).unwrap() - 0.125).abs() < 1e-15);
        assert!((lmmse_variance_transfer_asymptotic(0.4, 16, 8, 1.0).unwrap() - 0.4).abs() < 1e-15);
        assert!(lmmse_variance_transfer_asymptotic(0.001, 8, 8, 1.0).is_err());
    }

    #[test]
    fn monotone_in_v_and_noise() {
        for (k, m) in [(8, 8), (32, 8), (4, 8)] {
            let mut prev = 0.0;
            for i in 1..200 {
                let v = i as f64 / 200.0;
                let e = lmmse_variance_transfer(v, k, m, 3.0).unwrap();
                assert!(e >= prev);
                prev = e;
                assert!(lmmse_variance_transfer(v, k, m, 3.1).unwrap() >= e);
            }
        }
    }

    #[test]
    fn single_user_exclude_self_is_matched_filter() {
        let t = LmmseTransfer::new(1, 4, 2.0, Interference::ExcludeSelf).unwrap();
        assert!((t.extrinsic_variance(0.7) - 1.0).abs() < 1e-12);
    }
}
