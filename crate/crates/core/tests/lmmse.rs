mod common;

use mimo_noma::exit::lmmse_variance_transfer;
use mimo_noma::lmmse::{
    extrinsic_extract, llr_from_extrinsic, lmmse_posterior, lmmse_posterior_with, prior_from_decoder, soft_symbol,
    GaussianMessages, InversionForm,
};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

struct Instance {
    h: DMatrix<f64>,
    y: DVector<f64>,
    sigma: f64,
    prior: GaussianMessages<f64>,
}

fn instance(rng: &mut ChaCha8Rng) -> Instance {
    let k = rng.random_range(1..=6);
    let m = rng.random_range(1..=6);
    let h = DMatrix::from_fn(m, k, |_, _| rng.sample(StandardNormal));
    let y = DVector::from_fn(m, |_, _| rng.sample::<f64, _>(StandardNormal) * 2.0);
    let sigma = rng.random_range(0.2..2.0);
    let means = (0..k).map(|_| rng.random_range(-0.95..0.95)).collect();
    let variances = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
    Instance { h, y, sigma, prior: GaussianMessages::new(means, variances).unwrap() }
}

/// Textbook estimator with explicit inverses:
/// `x = m + V H^T (H V H^T + s^2 I)^-1 (y - H m)`.
fn oracle(inst: &Instance) -> (Vec<f64>, Vec<f64>) {
    let v = DMatrix::from_diagonal(&DVector::from_vec(inst.prior.variances.clone()));
    let mu = DVector::from_vec(inst.prior.means.clone());
    let m = inst.h.nrows();
    let s = &inst.h * &v * inst.h.transpose() + DMatrix::identity(m, m) * inst.sigma.powi(2);
    let s_inv = s.try_inverse().unwrap();
    let gain = &v * inst.h.transpose() * s_inv;
    let mean = &mu + &gain * (&inst.y - &inst.h * &mu);
    let cov = &v - &gain * &inst.h * &v;
    (mean.iter().copied().collect(), cov.diagonal().iter().copied().collect())
}

#[test]
fn both_inversion_forms_match_explicit_estimator() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let inst = instance(&mut rng);
        let (om, ov) = oracle(&inst);
        for form in [InversionForm::UserSide, InversionForm::AntennaSide] {
            let p = lmmse_posterior_with(&inst.y, &inst.h, inst.sigma, &inst.prior, form).unwrap();
            for i in 0..om.len() {
                assert!((p.means[i] - om[i]).abs() < 1e-9, "{form:?} mean");
                assert!((p.variances[i] - ov[i]).abs() < 1e-9, "{form:?} variance");
            }
        }
    }
}

#[test]
fn extrinsic_recombines_with_prior_to_posterior() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..100 {
        let inst = instance(&mut rng);
        let post = lmmse_posterior(&inst.y, &inst.h, inst.sigma, &inst.prior).unwrap();
        let ext = extrinsic_extract(&post, &inst.prior).unwrap();
        assert!(ext.clamped.is_empty());
        for i in 0..post.len() {
            let (xe, ve) = (ext.messages.means[i], ext.messages.variances[i]);
            let (xb, vb) = (inst.prior.means[i], inst.prior.variances[i]);
            let v = 1.0 / (1.0 / ve + 1.0 / vb);
            let x = v * (xe / ve + xb / vb);
            assert!((v - post.variances[i]).abs() < 1e-9);
            assert!((x - post.means[i]).abs() < 1e-9);
        }
    }
}

#[test]
fn single_precision_tracks_double() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..20 {
        let inst = instance(&mut rng);
        let p64 = lmmse_posterior(&inst.y, &inst.h, inst.sigma, &inst.prior).unwrap();
        let prior32 = GaussianMessages::new(
            inst.prior.means.iter().map(|&x| x as f32).collect(),
            inst.prior.variances.iter().map(|&x| x as f32).collect(),
        )
        .unwrap();
        let p32 = lmmse_posterior(&inst.y.cast::<f32>(), &inst.h.cast::<f32>(), inst.sigma as f32, &prior32).unwrap();
        for i in 0..p64.len() {
            assert!((p64.means[i] - p32.means[i] as f64).abs() < 1e-3);
        }
    }
}

#[test]
fn llr_clipping_and_soft_symbols() {
    let ext = GaussianMessages::new(vec![100.0, -0.5], vec![0.1, 1.0]).unwrap();
    assert_eq!(llr_from_extrinsic(&ext), vec![50.0, -1.0]);
    let (m, v) = soft_symbol(0.0f64, 1e-10);
    assert_eq!((m, v), (0.0, 1.0));
    let (m, v) = soft_symbol(50.0f64, 1e-10);
    assert!((m - 1.0).abs() < 1e-12 && v == 1e-10);
    let p = prior_from_decoder(&[2.0f64]);
    assert!((p.means[0] - 1f64.tanh()).abs() < 1e-15);
}

#[test]
fn extrinsic_variance_matches_closed_form_at_large_size() {
    let empirical = common::empirical_extrinsic_variance(64, 64, 1.0, 100, 20, 21);
    let eq = lmmse_variance_transfer(1.0, 64, 64, 1.0).unwrap();
    assert!((empirical / eq - 1.0).abs() < 0.1, "empirical {empirical} vs {eq}");
}

#[test]
fn mismatched_dimensions_are_errors() {
    let h = DMatrix::<f64>::zeros(3, 2);
    let prior = GaussianMessages::uninformative(3);
    assert!(lmmse_posterior(&DVector::zeros(3), &h, 1.0, &prior).is_err());
    assert!(lmmse_posterior(&DVector::zeros(2), &h, 1.0, &GaussianMessages::uninformative(2)).is_err());
    assert!(GaussianMessages::new(vec![0.0], vec![0.0]).is_err());
}
