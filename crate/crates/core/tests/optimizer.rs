use mimo_noma::exit::ExitModel;
use mimo_noma::optimizer::{optimize_degree_distribution, OptimizerConfig};
use mimo_noma::Error;

fn small(sigma_n: f64) -> OptimizerConfig {
    OptimizerConfig {
        sigma_n,
        degree_set: vec![3, 10, 30],
        alpha_range: (2, 4),
        q_max: 2,
        population: 12,
        generations: 15,
        rate_tolerance: 5e-3,
        ..OptimizerConfig::default()
    }
}

#[test]
fn less_noise_allows_a_higher_rate() {
    let model = ExitModel::default();
    let clean = optimize_degree_distribution(&small(3.0), &model).unwrap();
    let noisy = optimize_degree_distribution(&small(5.0), &model).unwrap();
    assert!(clean.feasible && noisy.feasible);
    assert!(clean.rate > noisy.rate, "{} vs {}", clean.rate, noisy.rate);
    for r in [&clean, &noisy] {
        assert!(r.verified, "threshold {:?} vs design {}", r.threshold_db, r.design_ebn0_db);
        assert!(r.min_gap >= 1e-3);
        assert!((r.params.lambda().fractions().iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(r.params.lambda().degrees().iter().all(|d| [3, 10, 30].contains(d)));
    }
}

#[test]
fn search_is_reproducible() {
    let model = ExitModel::default();
    let a = optimize_degree_distribution(&small(4.0), &model).unwrap();
    let b = optimize_degree_distribution(&small(4.0), &model).unwrap();
    assert_eq!(a, b);
    let mut log = Vec::new();
    a.write_log_csv(&mut log).unwrap();
    assert!(String::from_utf8(log).unwrap().starts_with("q,alpha,target_rate,feasible,min_gap,evaluations\n"));
}

#[test]
fn config_parsing_is_strict() {
    let cfg: OptimizerConfig = toml::from_str("K = 16\nM = 8\nsigma_n = 4.0\n").unwrap();
    assert_eq!((cfg.k, cfg.m, cfg.sigma_n, cfg.q_max), (16, 8, 4.0, 5));
    assert!(toml::from_str::<OptimizerConfig>("k = 16\n").is_err());
    let bad = OptimizerConfig { degree_set: vec![1, 3], ..OptimizerConfig::default() };
    assert!(matches!(optimize_degree_distribution(&bad, &ExitModel::default()), Err(Error::Config(_))));
}
