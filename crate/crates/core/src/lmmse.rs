//! Soft-input soft-output LMMSE multi-user detection with Gaussian
//! message exchange.

use nalgebra::{DMatrix, DVector};
use num_traits::Float;

use crate::error::{Error, Result};
use crate::scalar::{lit, Scalar};

/// Per-user Gaussian beliefs (mean, variance).
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMessages<T: Scalar> {
    pub means: Vec<T>,
    pub variances: Vec<T>,
}

impl<T: Scalar> GaussianMessages<T> {
    pub fn new(means: Vec<T>, variances: Vec<T>) -> Result<Self> {
        if means.len() != variances.len() {
            return Err(Error::DimensionMismatch {
                context: "message means/variances",
                expected: means.len(),
                got: variances.len(),
            });
        }
        if let Some(v) = variances.iter().find(|v| !(**v > T::zero()) || !Float::is_finite(**v)) {
            return Err(Error::invalid(format!("message variance must be positive and finite, got {v}")));
        }
        Ok(Self { means, variances })
    }

    /// Zero mean, unit variance: the BPSK prior before any feedback.
    pub fn uninformative(k: usize) -> Self {
        Self { means: vec![T::zero(); k], variances: vec![T::one(); k] }
    }

    pub fn len(&self) -> usize {
        self.means.len()
    }

    pub fn is_empty(&self) -> bool {
        self.means.is_empty()
    }
}

/// Numerical guards of the detector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorLimits {
    pub llr_clip: f64,
    pub variance_floor: f64,
    pub extrinsic_cap: f64,
}

impl Default for DetectorLimits {
    fn default() -> Self {
        Self { llr_clip: 50.0, variance_floor: 1e-10, extrinsic_cap: 1e6 }
    }
}

/// Which matrix is inverted in the posterior computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InversionForm {
    /// `K x K` normal matrix `H^T H / s^2 + V^-1`.
    UserSide,
    /// `M x M` covariance `s^2 I + H V H^T`.
    AntennaSide,
}

impl InversionForm {
    /// Picks the form with the smaller `M K^2 + K^3` vs `K M^2 + M^3` cost.
    pub fn cheaper(k: usize, m: usize) -> Self {
        let user = m * k * k + k * k * k;
        let antenna = k * m * m + m * m * m;
        if user <= antenna {
            InversionForm::UserSide
        } else {
            InversionForm::AntennaSide
        }
    }
}

fn check_inputs<T: Scalar>(y_len: usize, h: &DMatrix<T>, sigma_n: T, prior: &GaussianMessages<T>) -> Result<()> {
    if h.nrows() != y_len {
        return Err(Error::DimensionMismatch {
            context: "observation vs channel rows",
            expected: h.nrows(),
            got: y_len,
        });
    }
    if h.ncols() != prior.len() {
        return Err(Error::DimensionMismatch {
            context: "prior vs channel columns",
            expected: h.ncols(),
            got: prior.len(),
        });
    }
    if !(sigma_n > T::zero()) {
        return Err(Error::invalid("noise standard deviation must be positive"));
    }
    Ok(())
}

/// Posterior means and variances of all users given one received vector.
pub fn lmmse_posterior<T: Scalar>(
    y: &DVector<T>,
    h: &DMatrix<T>,
    sigma_n: T,
    prior: &GaussianMessages<T>,
) -> Result<GaussianMessages<T>> {
    lmmse_posterior_with(y, h, sigma_n, prior, InversionForm::cheaper(h.ncols(), h.nrows()))
}

/// [`lmmse_posterior`] with an explicit inversion form.
pub fn lmmse_posterior_with<T: Scalar>(
    y: &DVector<T>,
    h: &DMatrix<T>,
    sigma_n: T,
    prior: &GaussianMessages<T>,
    form: InversionForm,
) -> Result<GaussianMessages<T>> {
    check_inputs(y.len(), h, sigma_n, prior)?;
    let k = h.ncols();
    let mut means = vec![T::zero(); k];
    let mut variances = vec![T::zero(); k];
    match form {
        InversionForm::UserSide => {
            let s2inv = T::one() / (sigma_n * sigma_n);
            let gram = h.tr_mul(h) * s2inv;
            let hty = h.tr_mul(y) * s2inv;
            user_side(&gram, hty.as_slice(), &prior.means, &prior.variances, &mut means, &mut variances)?;
        }
        InversionForm::AntennaSide => {
            antenna_side(
                h,
                y.as_slice(),
                sigma_n * sigma_n,
                &prior.means,
                &prior.variances,
                &mut means,
                &mut variances,
            )?;
        }
    }
    Ok(GaussianMessages { means, variances })
}

/// User-side posterior from the scaled Gram matrix `H^T H / s^2` and the
/// scaled matched-filter output `H^T y / s^2`.
pub fn user_side<T: Scalar>(
    gram_scaled: &DMatrix<T>,
    hty_scaled: &[T],
    prior_means: &[T],
    prior_vars: &[T],
    means: &mut [T],
    variances: &mut [T],
) -> Result<()> {
    let k = prior_means.len();
    let mut a = gram_scaled.clone();
    let mut rhs = DVector::from_column_slice(hty_scaled);
    for i in 0..k {
        let inv_v = T::one() / prior_vars[i];
        a[(i, i)] += inv_v;
        rhs[i] += prior_means[i] * inv_v;
    }
    let chol = a.cholesky().ok_or_else(|| Error::Numerical("LMMSE normal matrix is not positive definite".into()))?;
    let cov = chol.inverse();
    let x = &cov * rhs;
    for i in 0..k {
        means[i] = x[i];
        variances[i] = cov[(i, i)];
    }
    Ok(())
}

/// Antenna-side posterior via `S = s^2 I + H V H^T`.
pub fn antenna_side<T: Scalar>(
    h: &DMatrix<T>,
    y: &[T],
    sigma2: T,
    prior_means: &[T],
    prior_vars: &[T],
    means: &mut [T],
    variances: &mut [T],
) -> Result<()> {
    let (m, k) = h.shape();
    let mut s = DMatrix::<T>::zeros(m, m);
    for (c, &v) in prior_vars.iter().enumerate() {
        let col = h.column(c);
        s.ger(v, &col, &col, T::one());
    }
    for i in 0..m {
        s[(i, i)] += sigma2;
    }
    let chol =
        s.cholesky().ok_or_else(|| Error::Numerical("LMMSE covariance matrix is not positive definite".into()))?;
    let mut resid = DVector::from_column_slice(y);
    for (c, &mu) in prior_means.iter().enumerate() {
        resid.axpy(-mu, &h.column(c), T::one());
    }
    let w = chol.solve(&resid);
    let sinv_h = chol.solve(h);
    for c in 0..k {
        let hc = h.column(c);
        let v = prior_vars[c];
        means[c] = prior_means[c] + v * hc.dot(&w);
        variances[c] = v - v * v * hc.dot(&sinv_h.column(c));
    }
    Ok(())
}

/// Extrinsic messages plus the indices whose variance had to be clamped.
#[derive(Debug, Clone, PartialEq)]
pub struct Extrinsic<T: Scalar> {
    pub messages: GaussianMessages<T>,
    pub clamped: Vec<usize>,
}

/// Removes the prior from the posterior: `v_e = (1/v_hat - 1/v)^-1`,
/// `x_e = v_e (x_hat / v_hat - x_bar / v)`.
pub fn extrinsic_extract<T: Scalar>(
    posterior: &GaussianMessages<T>,
    prior: &GaussianMessages<T>,
) -> Result<Extrinsic<T>> {
    extrinsic_extract_with(posterior, prior, &DetectorLimits::default())
}

pub fn extrinsic_extract_with<T: Scalar>(
    posterior: &GaussianMessages<T>,
    prior: &GaussianMessages<T>,
    limits: &DetectorLimits,
) -> Result<Extrinsic<T>> {
    if posterior.len() != prior.len() {
        return Err(Error::DimensionMismatch {
            context: "posterior vs prior",
            expected: prior.len(),
            got: posterior.len(),
        });
    }
    let cap: T = lit(limits.extrinsic_cap);
    let mut means = Vec::with_capacity(prior.len());
    let mut variances = Vec::with_capacity(prior.len());
    let mut clamped = Vec::new();
    for i in 0..prior.len() {
        let (xe, ve, c) =
            extrinsic_scalar(posterior.means[i], posterior.variances[i], prior.means[i], prior.variances[i], cap);
        if c {
            clamped.push(i);
        }
        means.push(xe);
        variances.push(ve);
    }
    Ok(Extrinsic { messages: GaussianMessages { means, variances }, clamped })
}

/// Scalar extrinsic rule; the flag reports a clamped variance.
#[inline]
pub fn extrinsic_scalar<T: Scalar>(x_hat: T, v_hat: T, x_bar: T, v: T, cap: T) -> (T, T, bool) {
    let precision = T::one() / v_hat - T::one() / v;
    let (ve, clamped) = if precision > T::one() / cap { (T::one() / precision, false) } else { (cap, true) };
    (ve * (x_hat / v_hat - x_bar / v), ve, clamped)
}

/// Symbol LLRs `2 x_e / v_e`, clipped to the default limit.
pub fn llr_from_extrinsic<T: Scalar>(ext: &GaussianMessages<T>) -> Vec<T> {
    llr_from_extrinsic_with(ext, &DetectorLimits::default())
}

pub fn llr_from_extrinsic_with<T: Scalar>(ext: &GaussianMessages<T>, limits: &DetectorLimits) -> Vec<T> {
    let c: T = lit(limits.llr_clip);
    ext.means.iter().zip(&ext.variances).map(|(&x, &v)| clip_llr(lit::<T>(2.0) * x / v, c)).collect()
}

#[inline]
pub(crate) fn clip_llr<T: Scalar>(l: T, c: T) -> T {
    if l > c {
        c
    } else if l < -c {
        -c
    } else {
        l
    }
}

/// Soft-symbol prior from a decoder LLR: mean `tanh(L/2)`, variance
/// `1 - mean^2` floored.
#[inline]
pub fn soft_symbol<T: Scalar>(llr: T, floor: T) -> (T, T) {
    let m = Float::tanh(llr / lit(2.0));
    let v = T::one() - m * m;
    (m, if v > floor { v } else { floor })
}

pub fn prior_from_decoder<T: Scalar>(llrs: &[T]) -> GaussianMessages<T> {
    prior_from_decoder_with(llrs, &DetectorLimits::default())
}

pub fn prior_from_decoder_with<T: Scalar>(llrs: &[T], limits: &DetectorLimits) -> GaussianMessages<T> {
    let floor: T = lit(limits.variance_floor);
    let (means, variances) = llrs.iter().map(|&l| soft_symbol(l, floor)).unzip();
    GaussianMessages { means, variances }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_example() {
        let h = DMatrix::from_element(1, 1, 1.0);
        let y = DVector::from_element(1, 0.5);
        let prior = GaussianMessages::uninformative(1);
        for form in [InversionForm::UserSide, InversionForm::AntennaSide] {
            let post = lmmse_posterior_with(&y, &h, 1.0, &prior, form).unwrap();
            assert!((post.means[0] - 0.25).abs() < 1e-15);
            assert!((post.variances[0] - 0.5).abs() < 1e-15);
            let ext = extrinsic_extract(&post, &prior).unwrap();
            assert!((ext.messages.variances[0] - 1.0).abs() < 1e-12);
            assert!((ext.messages.means[0] - 0.5).abs() < 1e-12);
            assert!((llr_from_extrinsic(&ext.messages)[0] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn form_choice() {
        assert_eq!(InversionForm::cheaper(8, 8), InversionForm::UserSide);
        assert_eq!(InversionForm::cheaper(4, 8), InversionForm::UserSide);
        assert_eq!(InversionForm::cheaper(64, 8), InversionForm::AntennaSide);
    }

    #[test]
    fn no_information_is_clamped() {
        let p = GaussianMessages::new(vec![0.3], vec![0.7]).unwrap();
        let e = extrinsic_extract(&p, &p).unwrap();
        assert_eq!(e.clamped, vec![0]);
        assert_eq!(e.messages.variances[0], 1e6);
    }

    #[test]
    fn llr_clipping_and_symmetry() {
        let e = GaussianMessages::new(vec![100.0, 0.0], vec![0.1, 2.0]).unwrap();
        assert_eq!(llr_from_extrinsic(&e), vec![50.0, 0.0]);
    }

    #[test]
    fn soft_prior() {
        let p = prior_from_decoder(&[0.0, 2.0 * 0.6f64.atanh(), 50.0]);
        assert_eq!((p.means[0], p.variances[0]), (0.0, 1.0));
        assert!((p.means[1] - 0.6).abs() < 1e-12 && (p.variances[1] - 0.64).abs() < 1e-12);
        assert!((p.means[2] - 1.0).abs() < 1e-12 && p.variances[2] == 1e-10);
    }

    #[test]
    fn rejects_bad_inputs() {
        let h = DMatrix::from_element(2, 1, 1.0);
        let prior = GaussianMessages::uninformative(1);
        assert!(lmmse_posterior(&DVector::from_element(3, 0.0), &h, 1.0, &prior).is_err());
        assert!(lmmse_posterior(&DVector::from_element(2, 0.0), &h, 0.0, &prior).is_err());
        assert!(GaussianMessages::new(vec![0.0], vec![0.0]).is_err());
    }
}
