use mimo_noma::channel::SystemDims;
use mimo_noma::codec::presets;
use mimo_noma::exit::{
    decoder_exit_curve, decoding_threshold, ebn0_db_to_sigma, feedback_variance, info_grid, j_function, j_inverse,
    lmmse_posterior_variance, lmmse_variance_transfer, lmmse_variance_transfer_asymptotic, mutual_info_to_variance,
    run_exit_recursion, sigma_to_ebn0_db, tunnel_gap, AnalyticDecoder, ExitModel, FeedbackInfo, Interference, JTables,
    LmmseTransfer, McConfig, McExitConfig, ThresholdWindow, Verdict,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Sample mean and standard error of `f(L)` for a consistent Gaussian LLR.
fn mc_consistent(sigma: f64, samples: usize, seed: u64, f: impl Fn(f64) -> f64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut s, mut s2) = (0.0, 0.0);
    for _ in 0..samples {
        let l = sigma * sigma / 2.0 + sigma * rng.sample::<f64, _>(StandardNormal);
        let x = f(l);
        s += x;
        s2 += x * x;
    }
    let n = samples as f64;
    let mean = s / n;
    (mean, ((s2 / n - mean * mean) / n).sqrt())
}

#[test]
fn j_matches_monte_carlo() {
    let (mean, se) = mc_consistent(2.0, 10_000_000, 1, |l| 1.0 - (-l).exp().ln_1p() / std::f64::consts::LN_2);
    let j: f64 = j_function(2.0);
    assert!((j - mean).abs() < 3.0 * se + 1e-9, "J(2) {j} vs {mean} +- {se}");
}

#[test]
fn feedback_variance_matches_monte_carlo() {
    let (mean, se) = mc_consistent(0.5, 1_000_000, 2, |l| 1.0 - (l / 2.0).tanh().powi(2));
    let phi: f64 = feedback_variance(0.5);
    assert!((phi - mean).abs() < 3.0 * se, "phi(0.5) {phi} vs {mean} +- {se}");
    let est = mutual_info_to_variance(j_function(0.5), &McConfig { samples: 200_000, seed: 3 }).unwrap();
    assert!((est.mean - phi).abs() < 3.0 * est.std_error);
}

#[test]
fn j_round_trip_and_limits() {
    let t = JTables::global();
    for i in [0.001, 0.01, 0.1, 0.3, 0.5, 0.7, 0.9, 0.99, 0.999] {
        let s: f64 = j_inverse(i).unwrap();
        assert!((j_function(s) - i).abs() <= 1e-4);
        assert!((t.j(t.j_inv(i)) - i).abs() <= 1e-4);
    }
    assert_eq!(j_function(0.0f64), 0.0);
    assert!(j_function(100.0f64) > 1.0 - 1e-6);
    assert!(j_inverse(1.0f64).is_err());
    assert!((t.j(1.3) - j_function(1.3f64)).abs() < 1e-7);
}

#[test]
fn closed_form_hand_values() {
    // Full load with no prior information about other users.
    let v: f64 = lmmse_variance_transfer(1.0, 8, 8, 1.0).unwrap();
    let s: f64 = 1.0 / 8.0;
    assert!((v - (s + (s * s + 4.0 * s).sqrt()) / 2.0).abs() < 1e-15);
    // Near-perfect priors leave only the noise term.
    let v: f64 = lmmse_variance_transfer(1e-12, 8, 8, 1.0).unwrap();
    assert!((v - 1.0 / 8.0).abs() < 1e-6);
    // Posterior and extrinsic forms agree through Gaussian division.
    for (k, m) in [(8, 8), (16, 8), (4, 8)] {
        let vp: f64 = lmmse_posterior_variance(0.6, k, m, 1.2).unwrap();
        let ve: f64 = lmmse_variance_transfer(0.6, k, m, 1.2).unwrap();
        assert!((1.0 / (1.0 / vp - 1.0 / 0.6) - ve).abs() < 1e-9 * ve.max(1.0), "{k}x{m}");
    }
    assert!(lmmse_variance_transfer(0.0f64, 8, 8, 1.0).is_err());
}

#[test]
fn closed_form_approaches_large_system_limit() {
    for v in [0.1, 0.5, 1.0] {
        for k in [2048usize, 4096, 8192] {
            let a: f64 = lmmse_variance_transfer(v, k, 4096, 0.5).unwrap();
            let b: f64 = lmmse_variance_transfer_asymptotic(v, k, 4096, 0.5).unwrap();
            assert!((a / b - 1.0).abs() < 0.02, "v={v} K={k}: {a} vs {b}");
        }
    }
}

#[test]
fn threshold_brackets_full_loading() {
    let p = presets::find("table1-full").unwrap();
    let dims = SystemDims::new(8, 8).unwrap();
    let dec = AnalyticDecoder::new(&p.params(), FeedbackInfo::APosteriori);
    let model = ExitModel::default();
    let rate = p.params().rate();
    let at = |db| run_exit_recursion(&dec, dims, ebn0_db_to_sigma(db, rate), &model).unwrap();
    assert!(at(-9.0).converged());
    assert_ne!(at(-9.5).verdict, Verdict::Converged);
    let r = decoding_threshold(&p.params(), dims, &ThresholdWindow::default(), &model).unwrap();
    assert!(r.threshold_db > -9.5 && r.threshold_db < -9.0);
    assert!(r.bracket_db.1 - r.bracket_db.0 <= 0.01);
}

#[test]
fn trajectory_is_monotone_and_logged() {
    let p = presets::find("table1-over").unwrap().params();
    let dims = SystemDims::new(16, 8).unwrap();
    let dec = AnalyticDecoder::new(&p, FeedbackInfo::APosteriori);
    let traj = run_exit_recursion(&dec, dims, ebn0_db_to_sigma(-8.5, p.rate()), &ExitModel::default()).unwrap();
    assert!(traj.converged());
    for w in traj.states.windows(2) {
        assert!(w[1].v <= w[0].v + 1e-12);
        assert!(w[1].i_e >= w[0].i_e - 1e-12);
    }
    let mut buf = Vec::new();
    traj.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("iteration,v,v_e,i_a,i_e\n"));
    assert_eq!(text.lines().count(), traj.states.len() + 1);
}

#[test]
fn tunnel_open_at_design_point() {
    let p = presets::find("table1-full").unwrap();
    let dec = AnalyticDecoder::new(&p.params(), FeedbackInfo::APosteriori);
    let sigma = p.design_sigma_n.unwrap();
    let det = LmmseTransfer::new(8, 8, sigma, Interference::ExcludeSelf).unwrap();
    assert!(tunnel_gap(&dec, &det, &info_grid(60, 0.99)).unwrap().min_gap > 0.0);
    let closed = LmmseTransfer::new(8, 8, sigma * 1.1, Interference::ExcludeSelf).unwrap();
    assert!(tunnel_gap(&dec, &closed, &info_grid(60, 0.99)).unwrap().min_gap < 0.0);
}

#[test]
fn simulated_decoder_curve_approaches_analytic_curve() {
    let p = presets::find("table1-full").unwrap().params();
    let grid = [0.1, 0.15, 0.3];
    let analytic = AnalyticDecoder::new(&p, FeedbackInfo::Extrinsic).curve(&grid).unwrap();
    let cfg = McExitConfig { info_len: 4000, activations: 50, feedback: FeedbackInfo::Extrinsic, seed: 5 };
    let measured = decoder_exit_curve(&p, &grid, &cfg).unwrap();
    for (a, m) in analytic.points().iter().zip(measured.points()) {
        assert!((a.i_e - m.i_e).abs() < 0.01, "I_a={}: {} vs {}", a.i_a, a.i_e, m.i_e);
    }
    assert!(measured.monotonicity_violations(1e-3).is_empty());
}

#[test]
fn ebn0_conversion_round_trips() {
    let s = ebn0_db_to_sigma(-9.22, 0.2);
    assert!((sigma_to_ebn0_db(s, 0.2) + 9.22).abs() < 1e-12);
    assert!((1.0 / (2.0 * 0.2 * s * s) - 10f64.powf(-0.922)).abs() < 1e-12);
}
