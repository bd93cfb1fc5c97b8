use impactlab::estimators::EstimatorMethod;
use impactlab::harness::{
    log_grid, run_estimator_experiment, run_impact_experiment, write_curve_csv, ExperimentConfig, MarketConfig,
    Moments, PricingRule, CURVE_HEADER,
};
use impactlab::marketmaker::{posterior_g_exact, posterior_g_flat_asym, PosteriorInput, PriorSpec};
use impactlab::orderflow::{path_rng, Channel, FlowModel};
use impactlab::theory::impact_sril;
use rand_distr::{Distribution, StandardNormal};

fn unit(nu: f64, horizon: usize, n_paths: usize, t_max: usize, seed: u64) -> ExperimentConfig {
    ExperimentConfig::new(MarketConfig::unit(nu, horizon).unwrap(), n_paths, t_max, seed)
}

#[test]
fn curves_do_not_depend_on_worker_count() {
    let mut gaussian = unit(0.1, 400, 3_000, 400, 5);
    gaussian.market.flow = FlowModel::GaussianVolume { sigma_v: 2.0 };
    gaussian.antithetic = true;
    for base in [unit(0.1, 300, 3_001, 300, 3), gaussian] {
        let runs: Vec<_> = [1, 2, 7]
            .into_iter()
            .map(|w| {
                let mut c = base.clone();
                c.workers = w;
                run_impact_experiment(&c).unwrap()
            })
            .collect();
        assert_eq!(runs[0], runs[1]);
        assert_eq!(runs[0], runs[2]);
    }
}

#[test]
fn stderr_scales_as_inverse_root_paths() {
    let mut small = unit(0.1, 200, 20_000, 200, 7);
    small.record_grid = vec![50, 200];
    let mut large = small.clone();
    large.n_paths = 80_000;
    let (a, b) = (
        run_impact_experiment(&small).unwrap(),
        run_impact_experiment(&large).unwrap(),
    );
    for i in 0..a.grid.len() {
        let ratio = a.stderr[i] / b.stderr[i];
        assert!((ratio / 2.0 - 1.0).abs() < 0.05, "t {}: ratio {ratio}", a.grid[i]);
    }
}

#[test]
fn fundamental_does_not_move_the_mean() {
    let mut off = unit(0.05, 400, 40_000, 400, 9);
    off.record_grid = vec![25, 100, 400];
    let mut on = off.clone();
    on.market.include_fundamental = true;
    on.master_seed = 10;
    let (a, b) = (
        run_impact_experiment(&off).unwrap(),
        run_impact_experiment(&on).unwrap(),
    );
    for i in 0..a.grid.len() {
        let se = (a.stderr[i].powi(2) + b.stderr[i].powi(2)).sqrt();
        assert!((a.mean_dp[i] - b.mean_dp[i]).abs() <= 3.0 * se, "t {}", a.grid[i]);
        assert!(b.var_dp[i] > a.var_dp[i]);
    }
}

#[test]
fn zero_participation_leaves_no_impact() {
    let mut c = unit(0.0, 100, 20_000, 100, 13);
    c.record_grid = vec![1, 10, 100];
    let curve = run_impact_experiment(&c).unwrap();
    for i in 0..curve.grid.len() {
        assert!(curve.mean_dp[i].abs() <= 3.0 * curve.stderr[i]);
    }
}

#[test]
fn mean_impact_follows_the_square_root_law() {
    let nu = 0.05;
    let mut c = unit(nu, 400, 40_000, 400, 15);
    c.pricing_rule = PricingRule::Asymptotic;
    c.antithetic = true;
    c.record_grid = log_grid(4, 400, 6);
    let curve = run_impact_experiment(&c).unwrap();
    for (i, &t) in curve.grid.iter().enumerate() {
        let want = impact_sril(t as f64, nu, 1.0);
        assert!(
            (curve.mean_dp[i] - want).abs() <= 3.5 * curve.stderr[i],
            "t {t}: {} vs {want}",
            curve.mean_dp[i]
        );
    }
}

#[test]
fn exact_and_scaling_flat_rules_converge() {
    let gap = |t: u64| {
        let mut worst: f64 = 0.0;
        for n in 0..=t {
            let input = PosteriorInput::Counts { n_buys: n, t };
            let xi = input.xi();
            if xi.abs() <= 3.0 {
                let exact = posterior_g_exact(&input, &PriorSpec::Flat).unwrap();
                worst = worst.max((exact - posterior_g_flat_asym(xi)).abs());
            }
        }
        worst
    };
    let (coarse, fine) = (gap(1_000), gap(10_000));
    assert!(fine < 0.02, "gap at t = 1e4: {fine}");
    assert!(fine < coarse);
}

#[test]
fn scaling_rule_spread_under_pure_noise() {
    let n = 1_000_000u64;
    let mut rng = path_rng(21, 0, Channel::Flow);
    let mut m = Moments::default();
    for _ in 0..n {
        let xi: f64 = StandardNormal.sample(&mut rng);
        m.push(posterior_g_flat_asym(xi));
    }
    let want = 1.0 / 3f64.sqrt();
    assert!((m.variance().sqrt() / want - 1.0).abs() < 0.01);
}

#[test]
fn bayes_estimate_moves_from_noise_floor_to_true_rate() {
    let nu = 0.05;
    let mut c = unit(nu, 40_000, 4_000, 40_000, 25);
    c.record_grid = vec![10, 40_000];
    let curve = run_estimator_experiment(&c, EstimatorMethod::BayesFlat).unwrap();
    let floor = 2.0 / (std::f64::consts::PI * 10.0).sqrt();
    assert!((curve.mean_dp[0] / floor - 1.0).abs() < 0.05, "{}", curve.mean_dp[0]);
    assert!((curve.mean_dp[1] / nu - 1.0).abs() < 0.05, "{}", curve.mean_dp[1]);
}

#[test]
fn curve_csv_round_trips_values() {
    let mut c = unit(0.1, 50, 500, 50, 27);
    c.record_grid = vec![1, 7, 50];
    let curve = run_impact_experiment(&c).unwrap();
    let mut buf = Vec::new();
    write_curve_csv(&mut buf, &curve, &c.market.schedule).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(CURVE_HEADER));
    for (i, line) in lines.enumerate() {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f[0].parse::<f64>().unwrap(), curve.grid[i] as f64);
        assert_eq!(f[2].parse::<f64>().unwrap(), curve.mean_dp[i]);
        assert_eq!(f[4].parse::<f64>().unwrap(), curve.stderr[i]);
        assert_eq!(f[5], "500");
        assert_eq!(f[6], "mc");
    }
}

#[test]
fn invalid_configs_are_rejected() {
    let mut c = unit(0.1, 50, 501, 50, 1);
    c.antithetic = true;
    assert!(run_impact_experiment(&c).is_err());

    let mut c = unit(0.1, 50, 100, 50, 1);
    c.record_grid = vec![10, 5];
    assert!(run_impact_experiment(&c).is_err());
    c.record_grid = vec![10, 51];
    assert!(run_impact_experiment(&c).is_err());

    let mut c = unit(0.1, 50, 100, 50, 1);
    c.market.flow = FlowModel::GaussianVolume { sigma_v: 1.0 };
    c.pricing_rule = PricingRule::KnownNu;
    assert!(run_impact_experiment(&c).is_err());
    assert!(MarketConfig::unit(1.0, 10).and_then(|m| m.validate()).is_err());
}
